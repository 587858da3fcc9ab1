#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/geometry.hpp"
#include "forge/scene.hpp"

namespace forge {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kBackgroundColor{200, 200, 200};
inline constexpr Rgb kFloorColor{120, 116, 110};
inline constexpr Rgb kMaskFill{0, 0, 0};
inline constexpr Rgb kMaskBorder{255, 0, 0};

// Fixed category palette; unknown categories get a hash-derived color.
const std::vector<std::pair<std::string, Rgb>>& category_color_table();
Rgb category_color(std::string_view category);

// Packed 8-bit RGB raster, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = kBackgroundColor);

  int width() const { return width_; }
  int height() const { return height_; }
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  std::span<const std::uint8_t> bytes() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

inline constexpr std::uint16_t kBackgroundId = 0xFFFF;

struct RenderedView {
  Image image;
  std::vector<std::uint16_t> id_map;  // row-major, kBackgroundId where no object wins
  CameraPose camera;
  std::string scene_id;

  int width() const { return image.width(); }
  int height() const { return image.height(); }
  std::uint16_t id_at(int x, int y) const {
    return id_map[static_cast<std::size_t>(y) * static_cast<std::size_t>(width()) +
                  static_cast<std::size_t>(x)];
  }
};

// Flat-shaded boxes over a floor plane, resolved by a per-pixel z-buffer.
RenderedView render_view(const Scene& scene, const CameraPose& camera);
RenderedView render_view(const Scene& scene, const CameraPose& camera, Resolution resolution);

VisibilityRecord measure_visibility(const RenderedView& view, int object_id);
// One pass over the id map; entry i describes object i.
std::vector<VisibilityRecord> measure_all_visibility(const RenderedView& view, std::size_t object_count);

// Inclusive pixel bounds; the outer border_px rings are drawn red.
struct MaskRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int border_px = 3;
  friend bool operator==(const MaskRect&, const MaskRect&) = default;
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool on_border(int x, int y) const;
};

struct MaskedImage {
  Image image;
  MaskRect rect;
};

inline constexpr int kDefaultMaskMargin = 4;
inline constexpr int kDefaultMaskBorder = 3;

// Throws ObjectNotVisible when the object has no pixels in the view.
MaskedImage mask_object(const RenderedView& view, int object_id, int margin_px = kDefaultMaskMargin,
                        int border_px = kDefaultMaskBorder);

// Draws the mask rectangle onto an image in place.
void paint_mask(Image& image, const MaskRect& rect);

}  // namespace forge

#include "forge/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge {
namespace {

constexpr double kNearPlane = 0.01;

struct CamVertex {
  Eigen::Vector3d p;  // camera space: x right, y up, z depth
};

struct ScreenVertex {
  double x, y, inv_z;
};

class Rasterizer {
 public:
  Rasterizer(const CameraPose& camera, RenderedView& view)
      : camera_(camera),
        view_(view),
        width_(camera.resolution.width),
        height_(camera.resolution.height),
        focal_(camera.focal_px()),
        inv_depth_(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_), 0.0) {}

  // Floor plane y = 0 as per-row constant depth (camera roll is zero).
  void draw_floor() {
    const Eigen::Vector3d f = camera_.forward();
    const Eigen::Vector3d u = camera_.up();
    const double cam_y = camera_.position.y();
    if (cam_y <= 0.0) return;
    for (int py = 0; py < height_; ++py) {
      const double v = (py + 0.5 - 0.5 * height_) / focal_;
      const double dir_y = f.y() - v * u.y();
      if (dir_y >= 0.0) continue;
      const double t = -cam_y / dir_y;
      const double inv = 1.0 / t;
      for (int px = 0; px < width_; ++px) {
        const std::size_t i = index(px, py);
        inv_depth_[i] = inv;
        view_.image.set(px, py, kFloorColor);
      }
    }
  }

  void draw_triangle(const std::array<Eigen::Vector3d, 3>& world, std::uint16_t id, Rgb color) {
    std::array<CamVertex, 3> cam;
    for (int k = 0; k < 3; ++k) cam[k].p = camera_.to_camera(world[k]);

    // Sutherland-Hodgman against the near plane; at most 4 vertices remain.
    std::array<Eigen::Vector3d, 4> poly;
    int n = 0;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d& a = cam[k].p;
      const Eigen::Vector3d& b = cam[(k + 1) % 3].p;
      const bool a_in = a.z() >= kNearPlane;
      const bool b_in = b.z() >= kNearPlane;
      if (a_in) poly[n++] = a;
      if (a_in != b_in) {
        const double t = (kNearPlane - a.z()) / (b.z() - a.z());
        poly[n++] = a + t * (b - a);
      }
    }
    if (n < 3) return;

    std::array<ScreenVertex, 4> sv;
    for (int k = 0; k < n; ++k) {
      const double inv = 1.0 / poly[k].z();
      sv[k] = {0.5 * width_ + focal_ * poly[k].x() * inv, 0.5 * height_ - focal_ * poly[k].y() * inv,
               inv};
    }
    fill(sv[0], sv[1], sv[2], id, color);
    if (n == 4) fill(sv[0], sv[2], sv[3], id, color);
  }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  void fill(ScreenVertex a, ScreenVertex b, ScreenVertex c, std::uint16_t id, Rgb color) {
    double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (area == 0.0 || !std::isfinite(area)) return;
    if (area < 0.0) {
      std::swap(b, c);
      area = -area;
    }
    const int x_lo = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int x_hi = std::min(width_ - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int y_lo = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int y_hi = std::min(height_ - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    if (x_lo > x_hi || y_lo > y_hi) return;

    const double inv_area = 1.0 / area;
    // Edge function e(p) for edge (p0, p1) is positive on the interior side.
    auto edge = [](const ScreenVertex& p0, const ScreenVertex& p1, double x, double y) {
      return (p1.x - p0.x) * (y - p0.y) - (p1.y - p0.y) * (x - p0.x);
    };
    for (int py = y_lo; py <= y_hi; ++py) {
      const double y = py + 0.5;
      for (int px = x_lo; px <= x_hi; ++px) {
        const double x = px + 0.5;
        const double w0 = edge(b, c, x, y);
        const double w1 = edge(c, a, x, y);
        const double w2 = edge(a, b, x, y);
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double inv_z = (w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z) * inv_area;
        const std::size_t i = index(px, py);
        if (inv_z > inv_depth_[i]) {
          inv_depth_[i] = inv_z;
          view_.id_map[i] = id;
          view_.image.set(px, py, color);
        }
      }
    }
  }

  const CameraPose& camera_;
  RenderedView& view_;
  int width_;
  int height_;
  double focal_;
  std::vector<double> inv_depth_;
};

// Corner indices (bit0 = +x, bit1 = +y, bit2 = +z) and local outward normals.
struct Face {
  std::array<int, 4> corners;
  Eigen::Vector3d local_normal;
};

const std::array<Face, 6>& box_faces() {
  static const std::array<Face, 6> faces = {{
      {{1, 3, 7, 5}, Eigen::Vector3d(1, 0, 0)},
      {{0, 4, 6, 2}, Eigen::Vector3d(-1, 0, 0)},
      {{2, 6, 7, 3}, Eigen::Vector3d(0, 1, 0)},
      {{0, 1, 5, 4}, Eigen::Vector3d(0, -1, 0)},
      {{4, 5, 7, 6}, Eigen::Vector3d(0, 0, 1)},
      {{0, 2, 3, 1}, Eigen::Vector3d(0, 0, -1)},
  }};
  return faces;
}

Rgb shade(Rgb base, const Eigen::Vector3d& normal) {
  static const Eigen::Vector3d light = Eigen::Vector3d(0.4, 1.0, 0.3).normalized();
  const double k = 0.45 + 0.55 * std::max(0.0, normal.dot(light));
  auto ch = [k](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v * k), 0L, 255L));
  };
  return {ch(base.r), ch(base.g), ch(base.b)};
}

}  // namespace

const std::vector<std::pair<std::string, Rgb>>& category_color_table() {
  static const std::vector<std::pair<std::string, Rgb>> table = {
      {"sofa", {178, 34, 52}},          {"tv stand", {70, 70, 90}},
      {"floor lamp", {240, 220, 90}},   {"chair", {160, 100, 45}},
      {"dining table", {120, 72, 30}},  {"bed", {90, 140, 210}},
      {"fridge", {235, 235, 240}},      {"bookshelf", {110, 60, 40}},
      {"armchair", {40, 150, 120}},     {"desk", {200, 150, 90}},
      {"cabinet", {150, 160, 70}},      {"potted plant", {40, 170, 40}},
      {"dresser", {170, 110, 170}},     {"ottoman", {230, 130, 60}},
      {"coffee table", {90, 50, 110}},  {"trash can", {60, 110, 110}},
  };
  return table;
}

Rgb category_color(std::string_view category) {
  for (const auto& [name, color] : category_color_table()) {
    if (name == category) return color;
  }
  const std::uint64_t h = fnv1a64(category);
  return {static_cast<std::uint8_t>(40 + (h & 0xFF) % 200), static_cast<std::uint8_t>(40 + ((h >> 8) & 0xFF) % 200),
          static_cast<std::uint8_t>(40 + ((h >> 16) & 0xFF) % 200)};
}

Image::Image(int width, int height, Rgb fill)
    : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3) {
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

Rgb Image::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  data_[i] = c.r;
  data_[i + 1] = c.g;
  data_[i + 2] = c.b;
}

RenderedView render_view(const Scene& scene, const CameraPose& camera) {
  camera.validate();
  RenderedView view;
  view.camera = camera;
  view.scene_id = scene.scene_id;
  view.image = Image(camera.resolution.width, camera.resolution.height, kBackgroundColor);
  view.id_map.assign(static_cast<std::size_t>(camera.resolution.width) * camera.resolution.height,
                     kBackgroundId);

  Rasterizer raster(camera, view);
  raster.draw_floor();
  for (const ObjectInstance& obj : scene.objects) {
    const std::vector<Eigen::Vector3d> corners = obj.corners();
    const Rgb base = category_color(obj.category);
    const double c = std::cos(obj.yaw);
    const double s = std::sin(obj.yaw);
    for (const Face& face : box_faces()) {
      const Eigen::Vector3d& ln = face.local_normal;
      const Eigen::Vector3d normal(c * ln.x() + s * ln.z(), ln.y(), -s * ln.x() + c * ln.z());
      const Eigen::Vector3d center = 0.25 * (corners[face.corners[0]] + corners[face.corners[1]] +
                                             corners[face.corners[2]] + corners[face.corners[3]]);
      if ((center - camera.position).dot(normal) >= 0.0) continue;
      const Rgb color = shade(base, normal);
      const auto id = static_cast<std::uint16_t>(obj.id);
      raster.draw_triangle({corners[face.corners[0]], corners[face.corners[1]], corners[face.corners[2]]},
                           id, color);
      raster.draw_triangle({corners[face.corners[0]], corners[face.corners[2]], corners[face.corners[3]]},
                           id, color);
    }
  }
  return view;
}

RenderedView render_view(const Scene& scene, const CameraPose& camera, Resolution resolution) {
  CameraPose c = camera;
  c.resolution = resolution;
  return render_view(scene, c);
}

std::vector<VisibilityRecord> measure_all_visibility(const RenderedView& view, std::size_t object_count) {
  std::vector<VisibilityRecord> out(object_count);
  std::vector<PixelBox> boxes(object_count, PixelBox{std::numeric_limits<int>::max(),
                                                     std::numeric_limits<int>::max(), -1, -1});
  for (std::size_t i = 0; i < object_count; ++i) out[i].object_id = static_cast<int>(i);
  const int w = view.width();
  const int h = view.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint16_t id = view.id_at(x, y);
      if (id == kBackgroundId || id >= object_count) continue;
      ++out[id].pixel_count;
      PixelBox& b = boxes[id];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }
  const double total = static_cast<double>(w) * static_cast<double>(h);
  for (std::size_t i = 0; i < object_count; ++i) {
    out[i].area_ratio = static_cast<double>(out[i].pixel_count) / total;
    if (out[i].pixel_count > 0) out[i].image_bbox = boxes[i];
  }
  return out;
}

VisibilityRecord measure_visibility(const RenderedView& view, int object_id) {
  if (object_id < 0 || object_id >= kBackgroundId) return {object_id, 0, 0.0, std::nullopt};
  auto all = measure_all_visibility(view, static_cast<std::size_t>(object_id) + 1);
  return all.back();
}

bool MaskRect::on_border(int x, int y) const {
  if (!contains(x, y)) return false;
  return x - x0 < border_px || x1 - x < border_px || y - y0 < border_px || y1 - y < border_px;
}

void paint_mask(Image& image, const MaskRect& rect) {
  for (int y = rect.y0; y <= rect.y1; ++y) {
    for (int x = rect.x0; x <= rect.x1; ++x) {
      image.set(x, y, rect.on_border(x, y) ? kMaskBorder : kMaskFill);
    }
  }
}

MaskedImage mask_object(const RenderedView& view, int object_id, int margin_px, int border_px) {
  if (margin_px < 0 || border_px < 1) throw std::invalid_argument("mask margin must be >= 0 and border >= 1");
  const VisibilityRecord vis = measure_visibility(view, object_id);
  if (!vis.image_bbox) {
    throw ObjectNotVisible(fmt::format("object {} has no pixels in view of {}", object_id, view.scene_id));
  }
  const PixelBox& b = *vis.image_bbox;
  MaskRect rect;
  rect.x0 = std::max(0, b.x0 - margin_px);
  rect.y0 = std::max(0, b.y0 - margin_px);
  rect.x1 = std::min(view.width() - 1, b.x1 + margin_px);
  rect.y1 = std::min(view.height() - 1, b.y1 + margin_px);
  rect.border_px = border_px;
  MaskedImage out{view.image, rect};
  paint_mask(out.image, rect);
  return out;
}

}  // namespace forge

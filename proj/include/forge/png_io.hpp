#pragma once

#include <filesystem>
#include <string>

#include "forge/render.hpp"

namespace forge {

// 8-bit RGB PNG. Output bytes are a pure function of the pixels.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace forge

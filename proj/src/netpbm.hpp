#pragma once

#include <filesystem>

#include "labels.hpp"

namespace scd {

// Binary P6 (RGB) and P5 (grey) rasters with maxval 255. Anything else,
// including truncated pixel data, raises DataError naming the file.
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

LabelMap read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const LabelMap& map);

}  // namespace scd

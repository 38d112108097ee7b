#pragma once

#include <filesystem>

#include "wdt/image.hpp"

namespace wdt {

// Decoders detect PNG vs JPEG from the file magic. Values scale to [0,1]
// (8-bit: /255). Grayscale sources replicate into all three planes.
RgbImage load_image(const std::filesystem::path& path);

// Single-channel mask; nonzero (>= 0.5 after scaling) = lesion.
Mask load_mask(const std::filesystem::path& path);

void save_png_gray8(const Plane& p, const std::filesystem::path& path);
void save_png_gray16(const Plane& p, const std::filesystem::path& path);
void save_png_rgb8(const RgbImage& img, const std::filesystem::path& path);
void save_png_mask(const Mask& m, const std::filesystem::path& path);

}  // namespace wdt

#pragma once

#include <string>
#include <vector>

#include "wdt/grid.hpp"

namespace wdt {

struct RgbImage {
    Plane r, g, b;
    std::string source_id;

    int height() const { return r.height(); }
    int width() const { return r.width(); }
};

// Hue/saturation/value planes, all in [0,1].
struct HsvImage {
    Plane hue;
    Plane saturation;
    Plane value;
    std::string source_id;

    int height() const { return value.height(); }
    int width() const { return value.width(); }
};

HsvImage decompose_hsv(const RgbImage& rgb);
RgbImage recompose_hsv(const HsvImage& hsv);

// Contrast-limited adaptive histogram equalization on a [0,1] plane with 8-bit
// histogram semantics (256 bins). Excess above the clip is redistributed
// uniformly across all bins in one pass; per-pixel remapping blends the four
// nearest tile mappings bilinearly. clip_limit <= 0 means unlimited (plain
// adaptive equalization).
Plane clahe(const Plane& value, int tiles_x, int tiles_y, double clip_limit);

// Per-tile mapping tables (256 entries in [0,1] per tile, row-major tiles),
// exposed for verification.
std::vector<std::vector<double>> clahe_tile_maps(const Plane& value, int tiles_x,
                                                 int tiles_y, double clip_limit);

// Separable bilinear resize with corner pixel centers aligned
// (src = dst * (S-1)/(D-1)). Target dims must be even and >= 2.
Plane resize_bilinear(const Plane& src, int out_h, int out_w);

// Nearest-neighbour resize for masks (same corner-aligned mapping), then
// re-binarized.
Mask resize_mask_nearest(const Mask& src, int out_h, int out_w);

}  // namespace wdt

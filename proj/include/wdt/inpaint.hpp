#pragma once

#include <vector>

#include "wdt/dataset.hpp"
#include "wdt/grid.hpp"

namespace wdt {

struct InpaintConfig {
    int radius = 3;        // neighbourhood radius in pixels
    bool dilate_mask = false;  // optional 1-px mask dilation

    void validate() const {
        if (radius < 1) fail(ErrorCategory::config, "inpaint.radius must be >= 1");
    }
};

// Order in which unknown pixels were finalized, for verification.
struct InpaintTrace {
    struct Step {
        int row, col;
        double distance;
    };
    std::vector<Step> steps;
};

// Fast-marching inpainting: unknown pixels are filled in ascending
// boundary-distance order, each as the normalized weighted average of
// already-known neighbours within `radius`, with Telea's direction, distance
// and level-set weight factors. Known pixels pass through bit-exactly.
Plane telea_inpaint(const Plane& v, const Mask& mask, const InpaintConfig& cfg,
                    InpaintTrace* trace = nullptr);

// (1-M) .* V + M .* inpaint(V, M); identity for label-0 samples.
Plane synthesize_pseudo_normal(const Sample& s, const InpaintConfig& cfg);

}  // namespace wdt

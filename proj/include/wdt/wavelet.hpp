#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "wdt/grid.hpp"

namespace wdt {

// Single-level 2-D orthonormal Daubechies transform with periodized boundaries.
// Rows (width axis) are filtered first, then columns; sub-bands are named
// <row filter><column filter>, so LH = row lowpass + column highpass.
// Periodization keeps the transform orthogonal for any even extent, so the
// inverse is the exact transpose and energy is conserved.

struct WaveletFilter {
    std::string id;              // "db1" .. "db8"
    std::vector<double> lowpass; // orthonormal analysis lowpass, sum = sqrt(2)
    std::vector<double> highpass;
};

// Supported bases: db1..db8. Unknown id -> config error.
const WaveletFilter& wavelet_filter(const std::string& basis_id);

SubbandStack dwt_forward(const Plane& v, const std::string& basis_id);
Plane idwt_inverse(const SubbandStack& s);

// Views over the stack channels in [LL, LH, HL, HH] order.
std::array<std::span<const double>, 4> split_stack(const SubbandStack& s);
SubbandStack concat_stack(const Plane& ll, const Plane& lh, const Plane& hl,
                          const Plane& hh, const std::string& basis_id);

// 1-D periodized analysis/synthesis used by the 2-D transform; exposed for
// reuse and tests. n must be even; out_low/out_high have n/2 entries.
void dwt1d(std::span<const double> x, const WaveletFilter& f, double* out_low,
           double* out_high);
void idwt1d(std::span<const double> low, std::span<const double> high,
            const WaveletFilter& f, double* out);

}  // namespace wdt

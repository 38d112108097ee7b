#pragma once

// Independent reference implementations used only by tests. Each oracle is a
// deliberately naive re-derivation of the behaviour it checks and must stay
// decoupled from the library code paths it verifies.

#include <span>
#include <string>
#include <vector>

#include "wdt/grid.hpp"
#include "wdt/rng.hpp"

namespace wdt::oracle {

// 2-D single-level DWT by explicit wrapped convolution + downsample-by-2,
// column pass written as an independent double loop. Returns [LL, LH, HL, HH].
std::vector<Plane> dwt2_reference(const Plane& v, std::span<const double> lowpass);

// Synthesis by explicit upsample + wrapped filter sums.
Plane idwt2_reference(const std::vector<Plane>& bands,
                      std::span<const double> lowpass);

// Plain global histogram equalization (midpoint CDF over 256 bins).
Plane global_hist_eq(const Plane& v);

// Clip + one-pass uniform redistribution + midpoint CDF mapping for one tile.
std::vector<double> clahe_tile_map_reference(const Plane& v, int r0, int r1,
                                             int c0, int c1, double clip_limit);

// Direct per-pixel bilinear interpolation (corner-aligned).
Plane bilinear_reference(const Plane& src, int out_h, int out_w);

// Per-pixel RGB -> HSV formulas, written independently.
void rgb_to_hsv_reference(double r, double g, double b, double& h, double& s,
                          double& v);

// Iterative harmonic (Laplace) fill of the masked region to convergence.
Plane harmonic_fill(const Plane& v, const Mask& mask, int max_iters = 20000,
                    double tol = 1e-9);

// O(n^2) pairwise AUC: (#(pos>neg) + 0.5 #(pos==neg)) / (npos*nneg).
double pairwise_auc(std::span<const double> scores, std::span<const int> labels);

// Two-pass population variance.
double variance_two_pass(std::span<const double> xs);

// Extended-precision running product of (1 - beta_t).
std::vector<long double> alpha_bar_longdouble(std::span<const double> betas);

}  // namespace wdt::oracle

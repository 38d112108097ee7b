#pragma once

#include <functional>
#include <vector>

#include "wdt/grid.hpp"
#include "wdt/rng.hpp"
#include "wdt/schedule.hpp"

namespace wdt {

// Consistency-style output/skip scalings with boundary values
// c_out(0) = 0, c_skip(0) = 1; both monotone in the scaled timestep.
struct SamplerCoeffs {
    double sigma_data = 0.5;
    double timestep_scaling = 10.0;

    // at_scaled(0) gives exactly (c_skip, c_out) = (1, 0)
    std::pair<double, double> at_scaled(double s) const;
    // scalings at a discrete timestep t (scaled argument = timestep_scaling * t)
    std::pair<double, double> at_timestep(int t) const;
};

// Per-step coefficients used by the reverse sampler at sub-schedule step t:
// c_skip/c_out as above and gamma, the noise coefficient toward the previous
// sub-schedule timestep: gamma(t) = (1 - abar_prev) / sqrt(1 - abar_prev)
//                                 = sqrt(1 - abar_prev),
// with gamma = 0 at the final step (abar_0 = 1, empty product).
struct StepCoeffs {
    double c_skip;
    double c_out;
    double gamma;
};

StepCoeffs sampler_coeffs(int t, const NoiseSchedule& sched,
                          const SamplerCoeffs& coeffs);

// eps_out <- model(z, t); both 4 x h x w stacks flattened.
using DenoiseFn =
    std::function<void(const double* z, int t, double* eps_out)>;

struct SampleTrace {
    struct Step {
        int t;
        std::vector<double> z0_hat;
        std::vector<double> z_after;
    };
    std::vector<Step> steps;
};

// Multi-step reverse sampler over the descending sub-schedule, starting from
// Gaussian noise. Each step forms the predicted original
//   z0_hat = (z_t - sqrt(1-abar_t) * eps_theta) / sqrt(abar_t),
// combines it with the running state through the boundary-condition scalings,
//   denoised = c_out(t) * z0_hat + c_skip(t) * z_t,
// and re-noises to the previous sub-schedule level,
//   z_prev = sqrt(abar_prev) * denoised + gamma(t) * eps.
// The final step (t = 1) returns `denoised` deterministically.
SubbandStack reverse_sample(const DenoiseFn& denoise, const NoiseSchedule& sched,
                            int h, int w, const std::string& basis_id, Rng& rng,
                            const SamplerCoeffs& coeffs,
                            SampleTrace* trace = nullptr);

}  // namespace wdt

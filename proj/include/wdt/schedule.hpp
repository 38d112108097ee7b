#pragma once

#include <vector>

#include "wdt/grid.hpp"
#include "wdt/rng.hpp"

namespace wdt {

// Precomputed diffusion schedule. Timesteps are 1-based: beta(t), alpha(t),
// alpha_bar(t) for t in [1, T], with the empty-product convention
// alpha_bar(0) = 1.
struct NoiseSchedule {
    int T = 0;
    int T_s = 0;
    std::vector<double> betas;       // betas[t-1] = beta_t
    std::vector<double> alphas;      // 1 - beta_t
    std::vector<double> alpha_bars;  // running product of alphas
    std::vector<int> sampling_steps; // length T_s, strictly descending, first = T

    double beta(int t) const { return betas[t - 1]; }
    double alpha(int t) const { return t == 0 ? 1.0 : alphas[t - 1]; }
    double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars[t - 1]; }

    // Sub-schedule successor of t (the next, smaller timestep visited by the
    // sampler), 0 after the final step.
    int sub_step_after(int t) const;
};

// Scaled-linear trajectory: beta_t = (sqrt(b1) + (t-1)/(T-1)*(sqrt(bT)-sqrt(b1)))^2.
NoiseSchedule build_schedule(int T, double beta_start, double beta_end, int T_s);

// z_t = sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps
SubbandStack forward_noise(const SubbandStack& z0, int t, const SubbandStack& eps,
                           const NoiseSchedule& sched);

struct ConditioningConfig {
    int delta_max = 10;
    int inference_delta = 0;

    void validate(int T) const;
};

// Perturbs the condition stack with schedule noise at timestep delta; delta = 0
// returns the input unchanged. Shares the forward_noise kernel.
SubbandStack encode_condition(const SubbandStack& z_cond, int delta,
                              const SubbandStack& eps, const NoiseSchedule& sched,
                              const ConditioningConfig& cfg, bool training_mode);

}  // namespace wdt

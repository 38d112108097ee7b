#include "wdt/schedule.hpp"

#include <cmath>

#include "wdt/kernels.hpp"

namespace wdt {

int NoiseSchedule::sub_step_after(int t) const {
    for (std::size_t i = 0; i < sampling_steps.size(); ++i)
        if (sampling_steps[i] == t)
            return i + 1 < sampling_steps.size() ? sampling_steps[i + 1] : 0;
    fail(ErrorCategory::range,
         "timestep " + std::to_string(t) + " is not on the sampling sub-schedule");
}

NoiseSchedule build_schedule(int T, double beta_start, double beta_end, int T_s) {
    if (T < 1) fail(ErrorCategory::config, "diffusion.T must be >= 1");
    if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0))
        fail(ErrorCategory::config,
             "schedule requires 0 < beta_start < beta_end < 1");
    if (T_s < 1 || T_s > T)
        fail(ErrorCategory::config, "diffusion.sampling_steps must be in [1, T]");

    NoiseSchedule s;
    s.T = T;
    s.T_s = T_s;
    s.betas.resize(T);
    s.alphas.resize(T);
    s.alpha_bars.resize(T);
    const double r0 = std::sqrt(beta_start);
    const double r1 = std::sqrt(beta_end);
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        const double root = r0 + frac * (r1 - r0);
        s.betas[t - 1] = root * root;
        s.alphas[t - 1] = 1.0 - s.betas[t - 1];
        prod *= s.alphas[t - 1];
        s.alpha_bars[t - 1] = prod;
    }

    s.sampling_steps.resize(T_s);
    if (T_s == 1) {
        s.sampling_steps[0] = T;
    } else {
        for (int i = 0; i < T_s; ++i) {
            const double v = T - static_cast<double>(i) * (T - 1) / (T_s - 1);
            s.sampling_steps[i] = static_cast<int>(std::lround(v));
        }
    }
    for (int i = 1; i < T_s; ++i)
        if (s.sampling_steps[i] >= s.sampling_steps[i - 1])
            fail(ErrorCategory::config, "sampling sub-schedule is not strictly descending");
    return s;
}

SubbandStack forward_noise(const SubbandStack& z0, int t, const SubbandStack& eps,
                           const NoiseSchedule& sched) {
    if (t < 1 || t > sched.T)
        fail(ErrorCategory::range, "timestep " + std::to_string(t) +
                                       " outside [1, " + std::to_string(sched.T) + "]");
    if (!z0.same_shape(eps) || eps.data.size() != z0.data.size())
        fail(ErrorCategory::shape, "noise stack shape must match z0");
    const double ab = sched.alpha_bar(t);
    SubbandStack out = z0;
    kernels::ops().axpby(out.data.size(), std::sqrt(ab), z0.data.data(),
                         std::sqrt(1.0 - ab), eps.data.data(), out.data.data());
    return out;
}

void ConditioningConfig::validate(int T) const {
    if (!(0 <= inference_delta && inference_delta <= delta_max && delta_max <= T))
        fail(ErrorCategory::config,
             "condition requires 0 <= inference_delta <= delta_max <= T");
}

SubbandStack encode_condition(const SubbandStack& z_cond, int delta,
                              const SubbandStack& eps, const NoiseSchedule& sched,
                              const ConditioningConfig& cfg, bool training_mode) {
    if (delta == 0) return z_cond;
    if (training_mode && delta > cfg.delta_max)
        fail(ErrorCategory::config, "condition delta " + std::to_string(delta) +
                                        " exceeds delta_max " +
                                        std::to_string(cfg.delta_max));
    return forward_noise(z_cond, delta, eps, sched);
}

}  // namespace wdt

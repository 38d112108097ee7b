#include "wdt/sampler.hpp"

#include <cmath>

#include "wdt/kernels.hpp"

namespace wdt {

std::pair<double, double> SamplerCoeffs::at_scaled(double s) const {
    const double sd2 = sigma_data * sigma_data;
    const double denom = s * s + sd2;
    return {sd2 / denom, s / std::sqrt(denom)};
}

std::pair<double, double> SamplerCoeffs::at_timestep(int t) const {
    return at_scaled(timestep_scaling * static_cast<double>(t));
}

StepCoeffs sampler_coeffs(int t, const NoiseSchedule& sched,
                          const SamplerCoeffs& coeffs) {
    const int t_prev = sched.sub_step_after(t);  // throws if t not on sub-schedule
    const auto [c_skip, c_out] = coeffs.at_timestep(t);
    const double ab_prev = sched.alpha_bar(t_prev);
    const double gamma = t_prev == 0 ? 0.0 : std::sqrt(1.0 - ab_prev);
    return {c_skip, c_out, gamma};
}

SubbandStack reverse_sample(const DenoiseFn& denoise, const NoiseSchedule& sched,
                            int h, int w, const std::string& basis_id, Rng& rng,
                            const SamplerCoeffs& coeffs, SampleTrace* trace) {
    SubbandStack z(h, w, basis_id);
    rng.fill_normal(z.data.data(), z.data.size());

    const std::size_t n = z.data.size();
    std::vector<double> eps_hat(n), z0_hat(n), noise(n);

    for (std::size_t step = 0; step < sched.sampling_steps.size(); ++step) {
        const int t = sched.sampling_steps[step];
        denoise(z.data.data(), t, eps_hat.data());

        const double ab_t = sched.alpha_bar(t);
        const double inv_sqrt_ab = 1.0 / std::sqrt(ab_t);
        // z0_hat = (z - sqrt(1-abar_t) eps_hat) / sqrt(abar_t)
        kernels::ops().axpby(n, inv_sqrt_ab, z.data.data(),
                             -std::sqrt(1.0 - ab_t) * inv_sqrt_ab, eps_hat.data(),
                             z0_hat.data());
        for (double v : z0_hat)
            if (!std::isfinite(v))
                fail(ErrorCategory::divergence,
                     "non-finite sampler state at step index " + std::to_string(step) +
                         " (t=" + std::to_string(t) + ")");

        const StepCoeffs sc = sampler_coeffs(t, sched, coeffs);
        const int t_prev = sched.sub_step_after(t);
        // denoised = c_out * z0_hat + c_skip * z
        kernels::ops().axpby(n, sc.c_out, z0_hat.data(), sc.c_skip, z.data.data(),
                             z.data.data());
        if (t_prev > 0) {
            rng.fill_normal(noise.data(), n);
            const double sqrt_ab_prev = std::sqrt(sched.alpha_bar(t_prev));
            kernels::ops().axpby(n, sqrt_ab_prev, z.data.data(), sc.gamma,
                                 noise.data(), z.data.data());
        }
        if (trace) {
            trace->steps.push_back({t, z0_hat, z.data});
        }
    }
    return z;
}

}  // namespace wdt

#pragma once

#include <span>
#include <vector>

#include "wdt/dataset.hpp"
#include "wdt/denoiser.hpp"
#include "wdt/sampler.hpp"
#include "wdt/schedule.hpp"

namespace wdt {

struct TrainConfig {
    int epochs = 600;
    int batch_size = 4;
    double lr_init = 1e-4;
    double weight_decay = 0.01;
    double grad_clip = 1.0;
    std::uint64_t seed = 0;
    bool noise_encoding = true;     // tau: perturb the image condition
    bool pixel_supervision = true;  // psi: train toward pseudo-normal targets
    int val_every = 10;             // epochs between validation passes
    int workers = 4;

    void validate() const;
};

// Precomputed wavelet-domain views of one training sample.
struct TrainItem {
    SubbandStack z0;      // dwt of the supervision target (V_pn, or V when psi off)
    SubbandStack z_cond;  // dwt of the input V channel
};

struct AdamState {
    std::vector<double> m, v;
    std::int64_t step = 0;
};

// Owns the parameters and optimizer state; one logical execution stream.
class Trainer {
  public:
    Trainer(DenoiserParams params, const TrainConfig& cfg, NoiseSchedule sched,
            ConditioningConfig cond);

    // One optimizer step over a batch. Draws (t, delta, noise) per sample from
    // `rng` on the calling thread, evaluates sample gradients (in parallel when
    // cfg.workers > 1, reduced in sample order), clips the global gradient
    // norm and applies AdamW with the given learning rate. Returns the batch
    // loss; throws a divergence error if it is not finite.
    double train_step(std::span<const TrainItem* const> batch, double lr, Rng& rng);

    // Cosine decay to zero over total_steps.
    double lr_at(std::int64_t step, std::int64_t total_steps) const;

    const DenoiserParams& params() const { return params_; }
    DenoiserParams& params() { return params_; }
    const AdamState& adam() const { return adam_; }
    AdamState& adam() { return adam_; }
    const TrainConfig& config() const { return cfg_; }
    const NoiseSchedule& schedule() const { return sched_; }
    const ConditioningConfig& conditioning() const { return cond_; }

  private:
    DenoiserParams params_;
    TrainConfig cfg_;
    NoiseSchedule sched_;
    ConditioningConfig cond_;
    AdamState adam_;
};

// dwt views for every sample; psi off replaces the target with the input.
std::vector<TrainItem> make_train_items(std::span<const Sample* const> samples,
                                        std::span<const Plane* const> targets,
                                        const std::string& basis_id,
                                        bool pixel_supervision);

}  // namespace wdt

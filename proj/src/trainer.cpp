#include "wdt/trainer.hpp"

#include <cmath>
#include <thread>

#include "wdt/kernels.hpp"
#include "wdt/wavelet.hpp"

namespace wdt {

void TrainConfig::validate() const {
    if (epochs < 1) fail(ErrorCategory::config, "train.epochs must be >= 1");
    if (batch_size < 1) fail(ErrorCategory::config, "train.batch_size must be >= 1");
    if (!(lr_init > 0.0)) fail(ErrorCategory::config, "train.lr_init must be > 0");
    if (val_every < 1) fail(ErrorCategory::config, "train.val_every must be >= 1");
    if (workers < 1) fail(ErrorCategory::config, "train.workers must be >= 1");
}

Trainer::Trainer(DenoiserParams params, const TrainConfig& cfg, NoiseSchedule sched,
                 ConditioningConfig cond)
    : params_(std::move(params)), cfg_(cfg), sched_(std::move(sched)), cond_(cond) {
    cfg_.validate();
    cond_.validate(sched_.T);
    adam_.m.assign(params_.data.size(), 0.0);
    adam_.v.assign(params_.data.size(), 0.0);
}

double Trainer::lr_at(std::int64_t step, std::int64_t total_steps) const {
    if (total_steps <= 0) return cfg_.lr_init;
    const double frac =
        std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
    return cfg_.lr_init * 0.5 * (1.0 + std::cos(M_PI * frac));
}

double Trainer::train_step(std::span<const TrainItem* const> batch, double lr,
                           Rng& rng) {
    if (batch.empty()) fail(ErrorCategory::validation, "empty training batch");
    const std::size_t B = batch.size();
    const int h = batch[0]->z0.h, w = batch[0]->z0.w;
    const std::size_t n = batch[0]->z0.size();

    // all noise draws happen here, in sample order, so results do not depend
    // on the worker count
    struct Draw {
        int t;
        int delta;
        std::vector<double> eps;       // target noise
        std::vector<double> eps_cond;  // condition noise (tau on)
    };
    std::vector<Draw> draws(B);
    for (std::size_t i = 0; i < B; ++i) {
        draws[i].t = rng.uniform_int(1, sched_.T);
        draws[i].delta =
            cfg_.noise_encoding ? rng.uniform_int(1, cond_.delta_max) : 0;
        draws[i].eps.resize(n);
        rng.fill_normal(draws[i].eps.data(), n);
        if (draws[i].delta > 0) {
            draws[i].eps_cond.resize(n);
            rng.fill_normal(draws[i].eps_cond.data(), n);
        }
    }

    std::vector<std::vector<double>> grads(B);
    std::vector<double> losses(B, 0.0);
    const double inv_total = 1.0 / (static_cast<double>(B) * static_cast<double>(n));

    auto eval_sample = [&](std::size_t i, DenoiserWorkspace& ws) {
        const TrainItem& item = *batch[i];
        SubbandStack eps_stack(h, w, item.z0.basis_id);
        eps_stack.data = draws[i].eps;
        SubbandStack z_t = forward_noise(item.z0, draws[i].t, eps_stack, sched_);
        SubbandStack z_cond = item.z_cond;
        if (draws[i].delta > 0) {
            SubbandStack eps_c(h, w, item.z0.basis_id);
            eps_c.data = draws[i].eps_cond;
            z_cond = encode_condition(item.z_cond, draws[i].delta, eps_c, sched_,
                                      cond_, true);
        }
        std::vector<double> eps_hat(n), d_eps(n);
        DenoiserNet::forward(params_, z_t.data.data(), z_cond.data.data(),
                             draws[i].t, ws, eps_hat.data());
        double loss = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double diff = eps_hat[j] - draws[i].eps[j];
            loss += diff * diff;
            d_eps[j] = 2.0 * diff * inv_total;
        }
        losses[i] = loss / static_cast<double>(n);
        grads[i].assign(params_.data.size(), 0.0);
        DenoiserNet::backward(params_, d_eps.data(), ws, grads[i]);
    };

    const int n_workers = std::max(1, std::min<int>(cfg_.workers, static_cast<int>(B)));
    if (n_workers == 1) {
        DenoiserWorkspace ws(params_.cfg, h, w, true);
        for (std::size_t i = 0; i < B; ++i) eval_sample(i, ws);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(n_workers);
        for (int t = 0; t < n_workers; ++t) {
            pool.emplace_back([&, t] {
                try {
                    DenoiserWorkspace ws(params_.cfg, h, w, true);
                    for (std::size_t i = t; i < B; i += n_workers) eval_sample(i, ws);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    // reduce in sample order
    std::vector<double>& total = grads[0];
    for (std::size_t i = 1; i < B; ++i)
        kernels::ops().axpy_acc(total.size(), 1.0, grads[i].data(), total.data());

    double loss = 0.0;
    for (double l : losses) loss += l;
    loss /= static_cast<double>(B);
    if (!std::isfinite(loss))
        fail(ErrorCategory::divergence,
             "non-finite training loss at optimizer step " +
                 std::to_string(adam_.step + 1) + " (lr=" + std::to_string(lr) + ")");

    // global-norm clip
    const double gnorm = std::sqrt(kernels::ops().sumsq(total.size(), total.data()));
    if (cfg_.grad_clip > 0.0 && gnorm > cfg_.grad_clip) {
        const double s = cfg_.grad_clip / gnorm;
        kernels::ops().scale(total.size(), s, total.data(), total.data());
    }

    adam_.step += 1;
    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(adam_.step));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(adam_.step));
    // decay applies to weight matrices only, never biases
    for (const auto& seg : params_.layout.segments) {
        const double wd = seg.is_bias ? 0.0 : cfg_.weight_decay;
        kernels::ops().adamw(seg.count(), params_.data.data() + seg.offset,
                             total.data() + seg.offset, adam_.m.data() + seg.offset,
                             adam_.v.data() + seg.offset, lr, 0.9, 0.999, 1e-8, wd,
                             bc1, bc2);
    }
    return loss;
}

std::vector<TrainItem> make_train_items(std::span<const Sample* const> samples,
                                        std::span<const Plane* const> targets,
                                        const std::string& basis_id,
                                        bool pixel_supervision) {
    if (samples.size() != targets.size())
        fail(ErrorCategory::validation, "samples/targets count mismatch");
    std::vector<TrainItem> items;
    items.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Plane& input_v = samples[i]->image.value;
        const Plane& target_v = pixel_supervision ? *targets[i] : input_v;
        items.push_back({dwt_forward(target_v, basis_id),
                         dwt_forward(input_v, basis_id)});
    }
    return items;
}

}  // namespace wdt

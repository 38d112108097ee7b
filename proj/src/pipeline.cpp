#include "wdt/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "wdt/image_io.hpp"
#include "wdt/inpaint.hpp"
#include "wdt/wavelet.hpp"

namespace wdt {

namespace {

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot hash '" + path.string() + "'");
    std::uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

constexpr const char* kBasis = "db6";  // wavelet basis for the diffusion tokenizer

std::string default_basis(const RunConfig&) { return kBasis; }

}  // namespace

std::filesystem::path run_dir_for(const RunConfig& cfg) {
    const char* env_root = std::getenv("WDT_RUN_ROOT");
    const std::filesystem::path root = env_root ? env_root : cfg.output_root;
    return root / cfg.run_name;
}

RunLock::RunLock(const std::filesystem::path& dir) : path_(dir / "lock") {
    std::filesystem::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        fail(ErrorCategory::io, "run directory locked (remove stale '" +
                                    path_.string() + "' if no run is active)");
    ::close(fd);
}

RunLock::~RunLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
}

void write_run_metadata(const RunConfig& cfg, const std::filesystem::path& dir,
                        const std::filesystem::path& manifest) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "config.resolved");
        out << serialize_config(cfg);
    }
    std::ofstream lock(dir / "manifest.lock");
    lock << "id,image_path,mask_path,split,image_hash,mask_hash\n";
    if (std::filesystem::exists(manifest)) {
        const auto root = manifest.parent_path();
        char hex[32];
        for (const auto& e : read_manifest(manifest)) {
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a64_file(root / e.image_path)));
            lock << e.id << ',' << e.image_path << ',' << e.mask_path << ','
                 << to_string(e.split) << ',' << hex << ',';
            if (!e.mask_path.empty()) {
                std::snprintf(hex, sizeof(hex), "%016llx",
                              static_cast<unsigned long long>(fnv1a64_file(root / e.mask_path)));
                lock << hex;
            }
            lock << '\n';
        }
    }
}

PreparedData prepare_data(const RunConfig& cfg) {
    PreparedData d;
    d.samples = load_dataset(cfg.manifest, cfg.preprocess, cfg.workers);
    d.targets.reserve(d.samples.size());
    for (const auto& s : d.samples)
        d.targets.push_back(synthesize_pseudo_normal(s, cfg.inpaint));
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const Sample* s = &d.samples[i];
        switch (s->split) {
            case Split::train:
                d.train.push_back(s);
                d.train_targets.push_back(&d.targets[i]);
                break;
            case Split::val: d.val.push_back(s); break;
            case Split::test: d.test.push_back(s); break;
        }
    }
    return d;
}

namespace {

HsvImage reconstruct_one(const DenoiserParams& params, const Sample& sample,
                         const NoiseSchedule& sched, const RunConfig& cfg, Rng rng) {
    const std::string basis = default_basis(cfg);
    SubbandStack z_cond = dwt_forward(sample.image.value, basis);
    if (cfg.condition.inference_delta > 0) {
        SubbandStack eps(z_cond.h, z_cond.w, basis);
        rng.fill_normal(eps.data.data(), eps.data.size());
        z_cond = encode_condition(z_cond, cfg.condition.inference_delta, eps, sched,
                                  cfg.condition, false);
    }
    DenoiserWorkspace ws(params.cfg, z_cond.h, z_cond.w, false);
    DenoiseFn fn = [&](const double* z, int t, double* eps_out) {
        DenoiserNet::forward(params, z, z_cond.data.data(), t, ws, eps_out);
    };
    SubbandStack z0 = reverse_sample(fn, sched, z_cond.h, z_cond.w, basis, rng,
                                     cfg.sampler);
    Plane v0 = idwt_inverse(z0);
    for (std::size_t i = 0; i < v0.size(); ++i)
        v0.data()[i] = std::clamp(v0.data()[i], 0.0, 1.0);
    HsvImage out;
    out.hue = sample.image.hue;        // merge contract: H and S pass through
    out.saturation = sample.image.saturation;
    out.value = std::move(v0);
    out.source_id = sample.id;
    return out;
}

Plane residual_map(const HsvImage& input, const HsvImage& recon, bool signed_only) {
    if (!signed_only) return compute_anomaly_map(input, recon);
    Plane map(input.height(), input.width());
    for (int y = 0; y < input.height(); ++y)
        for (int x = 0; x < input.width(); ++x)
            map.at(y, x) =
                std::max(recon.value.at(y, x) - input.value.at(y, x), 0.0);
    return map;
}

}  // namespace

InferenceOutput run_inference(const DenoiserParams& params,
                              std::span<const Sample* const> samples,
                              const RunConfig& cfg) {
    const NoiseSchedule sched = cfg.make_schedule();
    InferenceOutput out;
    out.results.resize(samples.size());
    out.recons.resize(samples.size());
    const Rng base(cfg.eval_seed);

    auto work = [&](std::size_t i) {
        const Sample& s = *samples[i];
        HsvImage recon = reconstruct_one(params, s, sched, cfg, base.child(i));
        AnomalyResult r;
        r.anomaly_map = residual_map(s.image, recon, cfg.signed_residual);
        r.image_score = image_score(r.anomaly_map);
        r.label = s.label;
        r.id = s.id;
        r.mask = &s.mask;
        out.results[i] = std::move(r);
        out.recons[i] = std::move(recon);
    };

    const int n_workers =
        std::max(1, std::min<int>(cfg.workers, static_cast<int>(samples.size())));
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < samples.size(); ++i) work(i);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(n_workers);
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < samples.size(); i += n_workers) work(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return out;
}

namespace {

double validation_pixel_auc(const DenoiserParams& params, const PreparedData& data,
                            const RunConfig& cfg) {
    if (data.val.empty()) return -1.0;
    const auto inf = run_inference(params, data.val, cfg);
    std::vector<double> scores;
    std::vector<int> labels;
    pool_pixels(inf.results, scores, labels);
    try {
        return roc_auc(scores, labels);
    } catch (const Error& e) {
        if (e.category() != ErrorCategory::undefined_metric) throw;
        return -1.0;  // single-class validation; keep the earliest checkpoint
    }
}

}  // namespace

TrainArtifacts run_training(const RunConfig& cfg, const std::filesystem::path& dir,
                            const PreparedData& data, std::ostream* progress) {
    if (data.train.empty())
        fail(ErrorCategory::validation, "training split is empty");
    const std::string basis = default_basis(cfg);
    const NoiseSchedule sched = cfg.make_schedule();

    const auto items = make_train_items(data.train, data.train_targets, basis,
                                        cfg.train.pixel_supervision);
    std::vector<const TrainItem*> item_ptrs;
    for (const auto& it : items) item_ptrs.push_back(&it);

    DenoiserParams params = init_params(cfg.denoiser, cfg.train.seed);
    TrainConfig tc = cfg.train;
    tc.workers = cfg.workers;
    Trainer trainer(std::move(params), tc, sched, cfg.condition);

    const std::size_t n_train = item_ptrs.size();
    const std::size_t steps_per_epoch =
        (n_train + cfg.train.batch_size - 1) / cfg.train.batch_size;
    const std::int64_t total_steps =
        static_cast<std::int64_t>(steps_per_epoch) * cfg.train.epochs;

    Rng rng(cfg.train.seed);
    std::ofstream log(dir / "train_log.jsonl");
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    TrainArtifacts art;
    art.best_val_auc = -2.0;
    std::int64_t step = 0;
    double last_loss = 0.0;

    for (int epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
        // Fisher-Yates with the training stream
        for (std::size_t i = n_train; i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
        for (std::size_t b = 0; b < steps_per_epoch; ++b) {
            std::vector<const TrainItem*> batch;
            for (std::size_t k = b * cfg.train.batch_size;
                 k < std::min(n_train, (b + 1) * cfg.train.batch_size); ++k)
                batch.push_back(item_ptrs[order[k]]);
            const double lr = trainer.lr_at(step, total_steps);
            last_loss = trainer.train_step(batch, lr, rng);
            ++step;
            log << "{\"step\":" << step << ",\"epoch\":" << epoch << ",\"loss\":"
                << last_loss << ",\"lr\":" << lr << "}\n";
        }
        const bool validate =
            epoch % cfg.train.val_every == 0 || epoch == cfg.train.epochs;
        if (!validate) continue;

        const double val_auc = validation_pixel_auc(trainer.params(), data, cfg);
        Checkpoint ckpt{trainer.params(), trainer.adam(), rng.save_state(), epoch,
                        val_auc};
        const auto ckpt_path = dir / ("ckpt_" + std::to_string(epoch) + ".bin");
        save_checkpoint(ckpt, ckpt_path);
        if (val_auc > art.best_val_auc) {
            art.best_val_auc = val_auc;
            art.best_epoch = epoch;
            save_checkpoint(ckpt, dir / "best.bin");
        }
        if (progress)
            *progress << "epoch " << epoch << " loss " << last_loss << " val_auc "
                      << val_auc << "\n";
    }
    art.best_checkpoint = dir / "best.bin";
    art.final_loss = last_loss;
    return art;
}

namespace {

// Optional prediction post-filters (off by default): 3x3 binary opening and
// minimum connected-component size on the thresholded pixel predictions.
Mask filtered_prediction(const Plane& map, double thr, const RunConfig& cfg) {
    const int H = map.height(), W = map.width();
    Mask pred(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) pred.at(y, x) = map.at(y, x) > thr ? 1 : 0;
    if (cfg.opening) {
        Mask eroded(H, W);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                std::uint8_t keep = 1;
                for (int dy = -1; dy <= 1 && keep; ++dy)
                    for (int dx = -1; dx <= 1 && keep; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= H || xx < 0 || xx >= W || !pred.at(yy, xx))
                            keep = 0;
                    }
                eroded.at(y, x) = keep;
            }
        Mask dilated(H, W);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                std::uint8_t any = 0;
                for (int dy = -1; dy <= 1 && !any; ++dy)
                    for (int dx = -1; dx <= 1 && !any; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy >= 0 && yy < H && xx >= 0 && xx < W && eroded.at(yy, xx))
                            any = 1;
                    }
                dilated.at(y, x) = any;
            }
        pred = std::move(dilated);
    }
    if (cfg.min_component > 0) {
        std::vector<int> comp(static_cast<std::size_t>(H) * W, -1);
        std::vector<int> sizes;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (!pred.at(y, x) || comp[static_cast<std::size_t>(y) * W + x] >= 0)
                    continue;
                const int id = static_cast<int>(sizes.size());
                sizes.push_back(0);
                std::vector<std::pair<int, int>> stack{{y, x}};
                comp[static_cast<std::size_t>(y) * W + x] = id;
                while (!stack.empty()) {
                    auto [cy, cx] = stack.back();
                    stack.pop_back();
                    ++sizes[id];
                    const int ny[4] = {cy - 1, cy + 1, cy, cy};
                    const int nx[4] = {cx, cx, cx - 1, cx + 1};
                    for (int k = 0; k < 4; ++k) {
                        if (ny[k] < 0 || ny[k] >= H || nx[k] < 0 || nx[k] >= W) continue;
                        const std::size_t j = static_cast<std::size_t>(ny[k]) * W + nx[k];
                        if (pred.data[j] && comp[j] < 0) {
                            comp[j] = id;
                            stack.push_back({ny[k], nx[k]});
                        }
                    }
                }
            }
        for (std::size_t j = 0; j < pred.data.size(); ++j)
            if (pred.data[j] && sizes[comp[j]] < cfg.min_component) pred.data[j] = 0;
    }
    return pred;
}

MetricsReport pixel_report_filtered(std::span<const AnomalyResult> results,
                                    double thr, const RunConfig& cfg) {
    MetricsReport r;
    r.level = "pixel";
    r.threshold = thr;
    for (const auto& res : results) {
        const Mask pred = filtered_prediction(res.anomaly_map, thr, cfg);
        for (std::size_t j = 0; j < pred.data.size(); ++j) {
            const bool p = pred.data[j] != 0;
            const bool t = res.mask->data[j] != 0;
            if (p && t) ++r.tp;
            else if (p && !t) ++r.fp;
            else if (!p && t) ++r.fn;
            else ++r.tn;
        }
    }
    const auto total = r.tp + r.fp + r.tn + r.fn;
    r.acc = total ? static_cast<double>(r.tp + r.tn) / total : 0.0;
    r.sen = (r.tp + r.fn) ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
    r.spe = (r.tn + r.fp) ? static_cast<double>(r.tn) / (r.tn + r.fp) : 0.0;
    r.f1 = (2 * r.tp + r.fp + r.fn)
               ? 2.0 * static_cast<double>(r.tp) / (2.0 * r.tp + r.fp + r.fn)
               : 0.0;
    std::vector<double> scores;
    std::vector<int> labels;
    pool_pixels(results, scores, labels);
    try {
        r.auc = roc_auc(scores, labels);
    } catch (const Error& e) {
        if (e.category() != ErrorCategory::undefined_metric) throw;
    }
    return r;
}

nlohmann::ordered_json report_to_json(const MetricsReport& r) {
    nlohmann::ordered_json j = {
        {"auc", r.auc ? nlohmann::json(*r.auc) : nlohmann::json(nullptr)},
        {"acc", r.acc}, {"f1", r.f1},   {"sen", r.sen}, {"spe", r.spe},
        {"tp", r.tp},   {"fp", r.fp},   {"tn", r.tn},   {"fn", r.fn},
        {"threshold", r.threshold}};
    return j;
}

nlohmann::ordered_json roc_to_json(std::span<const double> scores,
                                   std::span<const int> labels) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    try {
        for (const auto& p : roc_curve(scores, labels)) {
            arr.push_back({{"fpr", p.fpr},
                           {"tpr", p.tpr},
                           {"thr", std::isinf(p.threshold) ? 1e308 : p.threshold}});
        }
    } catch (const Error& e) {
        if (e.category() != ErrorCategory::undefined_metric) throw;
    }
    return arr;
}

}  // namespace

EvalArtifacts run_eval(const RunConfig& cfg, const std::filesystem::path& dir,
                       const PreparedData& data, std::ostream* progress) {
    const auto ckpt_name = cfg.eval_checkpoint == "best"
                               ? std::filesystem::path("best.bin")
                               : std::filesystem::path(cfg.eval_checkpoint);
    const auto ckpt_path = dir / ckpt_name;
    if (!std::filesystem::exists(ckpt_path))
        fail(ErrorCategory::io, "no checkpoint at '" + ckpt_path.string() + "'");
    const Checkpoint ckpt = load_checkpoint(ckpt_path);

    if (data.test.empty()) fail(ErrorCategory::validation, "test split is empty");
    if (data.val.empty()) fail(ErrorCategory::validation, "validation split is empty");

    if (progress) *progress << "scoring validation split\n";
    const auto val_inf = run_inference(ckpt.params, data.val, cfg);
    ThresholdPair thr = select_thresholds(val_inf.results);
    if (cfg.pixel_thr_override >= 0) thr.pixel_thr = cfg.pixel_thr_override;
    if (cfg.image_thr_override >= 0) thr.image_thr = cfg.image_thr_override;
    if (progress && (thr.pixel_fallback || thr.image_fallback))
        *progress << "warning: single-class validation split, percentile "
                     "threshold fallback used\n";

    if (progress) *progress << "scoring test split\n";
    const auto test_inf = run_inference(ckpt.params, data.test, cfg);

    EvalArtifacts art;
    art.thresholds = thr;
    const bool filtered = cfg.opening || cfg.min_component > 0;
    art.metrics = evaluate(test_inf.results, thr.pixel_thr, thr.image_thr);
    if (filtered)
        art.metrics.pixel = pixel_report_filtered(test_inf.results, thr.pixel_thr, cfg);

    // heatmaps, min-max normalized over the whole test corpus
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : test_inf.results) {
        for (std::size_t i = 0; i < r.anomaly_map.size(); ++i) {
            lo = std::min(lo, r.anomaly_map.data()[i]);
            hi = std::max(hi, r.anomaly_map.data()[i]);
        }
    }
    art.heatmap_min = lo;
    art.heatmap_max = hi;
    const double span = hi > lo ? hi - lo : 1.0;
    std::filesystem::create_directories(dir / "anomaly");
    for (const auto& r : test_inf.results) {
        Plane norm(r.anomaly_map.height(), r.anomaly_map.width());
        for (std::size_t i = 0; i < norm.size(); ++i)
            norm.data()[i] = (r.anomaly_map.data()[i] - lo) / span;
        save_png_gray8(norm, dir / "anomaly" / (r.id + ".png"));
    }

    // metrics.json
    nlohmann::ordered_json j = {
        {"pixel", report_to_json(art.metrics.pixel)},
        {"image", report_to_json(art.metrics.image)},
        {"thresholds",
         {{"pixel", thr.pixel_thr},
          {"image", thr.image_thr},
          {"pixel_fallback", thr.pixel_fallback},
          {"image_fallback", thr.image_fallback}}},
        {"heatmap_normalization", {{"min", art.heatmap_min}, {"max", art.heatmap_max}}},
        {"checkpoint", ckpt_name.string()},
        {"checkpoint_epoch", ckpt.epoch},
        {"n_test", static_cast<int>(data.test.size())},
    };
    std::ofstream(dir / "metrics.json") << j.dump(2) << "\n";

    // per-image scores and roc curves for the report stage
    nlohmann::ordered_json scores = nlohmann::ordered_json::array();
    for (const auto& r : test_inf.results)
        scores.push_back({{"id", r.id}, {"score", r.image_score}, {"label", r.label}});
    std::ofstream(dir / "scores.json") << scores.dump(2) << "\n";

    std::vector<double> px_scores;
    std::vector<int> px_labels;
    pool_pixels(test_inf.results, px_scores, px_labels);
    std::vector<double> im_scores;
    std::vector<int> im_labels;
    for (const auto& r : test_inf.results) {
        im_scores.push_back(r.image_score);
        im_labels.push_back(r.label);
    }
    nlohmann::ordered_json rocs = {{"pixel", roc_to_json(px_scores, px_labels)},
                                   {"image", roc_to_json(im_scores, im_labels)}};
    std::ofstream(dir / "roc_curves.json") << rocs.dump() << "\n";
    return art;
}

}  // namespace wdt

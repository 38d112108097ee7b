#pragma once

#include <filesystem>
#include <iosfwd>

#include "wdt/checkpoint.hpp"
#include "wdt/config.hpp"
#include "wdt/detect.hpp"

namespace wdt {

// <output_root>/<run_name>; WDT_RUN_ROOT overrides the configured root.
std::filesystem::path run_dir_for(const RunConfig& cfg);

// Exclusive ownership of a run directory via an O_EXCL lock file.
class RunLock {
  public:
    explicit RunLock(const std::filesystem::path& dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

  private:
    std::filesystem::path path_;
};

// config.resolved + manifest.lock (manifest rows with content hashes).
void write_run_metadata(const RunConfig& cfg, const std::filesystem::path& dir,
                        const std::filesystem::path& manifest);

struct PreparedData {
    std::vector<Sample> samples;
    std::vector<Plane> targets;  // pseudo-normal V per sample
    std::vector<const Sample*> train, val, test;
    std::vector<const Plane*> train_targets;
};

PreparedData prepare_data(const RunConfig& cfg);

struct TrainArtifacts {
    std::filesystem::path best_checkpoint;
    double best_val_auc = 0.0;
    int best_epoch = 0;
    double final_loss = 0.0;
};

// Full training loop: epoch shuffling, logging (line-delimited JSON), periodic
// validation by pixel-level AUC, ckpt_<epoch>.bin and best.bin.
TrainArtifacts run_training(const RunConfig& cfg, const std::filesystem::path& dir,
                            const PreparedData& data, std::ostream* progress);

struct InferenceOutput {
    std::vector<AnomalyResult> results;
    std::vector<HsvImage> recons;
};

// Reconstruct every sample and build anomaly results; deterministic in
// (eval_seed, sample order), parallel across images.
InferenceOutput run_inference(const DenoiserParams& params,
                              std::span<const Sample* const> samples,
                              const RunConfig& cfg);

struct EvalArtifacts {
    Evaluation metrics;
    ThresholdPair thresholds;
    double heatmap_min = 0.0, heatmap_max = 0.0;
};

// Threshold selection on the validation split, metrics on the test split,
// metrics.json + roc dumps + per-image heatmaps under <dir>.
EvalArtifacts run_eval(const RunConfig& cfg, const std::filesystem::path& dir,
                       const PreparedData& data, std::ostream* progress);

}  // namespace wdt

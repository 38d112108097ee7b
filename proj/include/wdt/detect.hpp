#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wdt/dataset.hpp"
#include "wdt/grid.hpp"

namespace wdt {

// |V_recon - V_input| per pixel; H and S cancel by construction.
Plane compute_anomaly_map(const HsvImage& input, const HsvImage& recon);

// Population standard deviation of all map entries.
double image_score(const Plane& map);

// Rank-based (Mann-Whitney) AUC with midrank tie handling. Throws an
// undefined-metric error when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
    double fpr, tpr, threshold;
};
std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const int> labels);

// Specificity at the operating point whose sensitivity first reaches
// `sen_target` (threshold grid = observed scores).
double spe_at_sen(std::span<const double> scores, std::span<const int> labels,
                  double sen_target);

struct MetricsReport {
    std::string level;  // "pixel" | "image"
    std::optional<double> auc;  // absent when a class is missing
    double acc = 0, f1 = 0, sen = 0, spe = 0;
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double threshold = 0;
};

MetricsReport confusion_report(const std::string& level,
                               std::span<const double> scores,
                               std::span<const int> labels, double threshold);

struct AnomalyResult {
    Plane anomaly_map;
    double image_score = 0;
    int label = 0;            // ground truth
    std::string id;
    const Mask* mask = nullptr;
};

struct ThresholdPair {
    double pixel_thr = 0;
    double image_thr = 0;
    bool pixel_fallback = false;  // percentile fallback was used
    bool image_fallback = false;
};

// F1-maximizing thresholds on the validation results; grid = distinct observed
// scores, ties broken toward the larger threshold. Single-class validation at
// a level falls back to the 99.5th percentile of scores.
ThresholdPair select_thresholds(std::span<const AnomalyResult> val_results);

struct Evaluation {
    MetricsReport pixel;
    MetricsReport image;
};

// Pixel metrics pool all pixels of all results into one confusion matrix;
// image metrics use one std-based score per image.
Evaluation evaluate(std::span<const AnomalyResult> results, double pixel_thr,
                    double image_thr);

// Pooled score/label vectors (exposed for ROC dumps and the ablation checks).
void pool_pixels(std::span<const AnomalyResult> results,
                 std::vector<double>& scores, std::vector<int>& labels);

}  // namespace wdt

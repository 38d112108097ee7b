#include "wdt/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wdt {

Plane compute_anomaly_map(const HsvImage& input, const HsvImage& recon) {
    if (!input.value.same_shape(recon.value))
        fail(ErrorCategory::validation, "input/reconstruction shape mismatch");
    const int H = input.height(), W = input.width();
    Plane map(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            map.at(y, x) = std::fabs(recon.value.at(y, x) - input.value.at(y, x));
    return map;
}

double image_score(const Plane& map) {
    const std::size_t n = map.size();
    const double* d = map.data();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += d[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = d[i] - mean;
        var += diff * diff;
    }
    return std::sqrt(var / static_cast<double>(n));
}

namespace {

void check_two_classes(std::span<const int> labels) {
    bool pos = false, neg = false;
    for (int l : labels) (l ? pos : neg) = true;
    if (!pos || !neg)
        fail(ErrorCategory::undefined_metric,
             "metric undefined: only one class present");
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        fail(ErrorCategory::validation, "scores/labels size mismatch");
    check_two_classes(labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]]) {
                rank_sum_pos += midrank;
                ++n_pos;
            }
        i = j + 1;
    }
    const std::size_t n_neg = n - n_pos;
    return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const int> labels) {
    check_two_classes(labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::int64_t npos = 0, nneg = 0;
    for (int l : labels) (l ? npos : nneg) += 1;

    std::vector<RocPoint> pts;
    pts.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        const double thr = scores[order[i]];
        while (i < n && scores[order[i]] == thr) {
            (labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        pts.push_back({static_cast<double>(fp) / nneg, static_cast<double>(tp) / npos, thr});
    }
    return pts;
}

double spe_at_sen(std::span<const double> scores, std::span<const int> labels,
                  double sen_target) {
    const auto pts = roc_curve(scores, labels);
    for (const auto& p : pts)
        if (p.tpr >= sen_target) return 1.0 - p.fpr;
    return 0.0;
}

MetricsReport confusion_report(const std::string& level,
                               std::span<const double> scores,
                               std::span<const int> labels, double threshold) {
    MetricsReport r;
    r.level = level;
    r.threshold = threshold;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > threshold;
        const bool pos = labels[i] != 0;
        if (pred && pos) ++r.tp;
        else if (pred && !pos) ++r.fp;
        else if (!pred && pos) ++r.fn;
        else ++r.tn;
    }
    const auto total = r.tp + r.fp + r.tn + r.fn;
    r.acc = total ? static_cast<double>(r.tp + r.tn) / total : 0.0;
    r.sen = (r.tp + r.fn) ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
    r.spe = (r.tn + r.fp) ? static_cast<double>(r.tn) / (r.tn + r.fp) : 0.0;
    r.f1 = (2 * r.tp + r.fp + r.fn)
               ? 2.0 * static_cast<double>(r.tp) / (2.0 * r.tp + r.fp + r.fn)
               : 0.0;
    try {
        r.auc = roc_auc(scores, labels);
    } catch (const Error& e) {
        if (e.category() != ErrorCategory::undefined_metric) throw;
        r.auc = std::nullopt;
    }
    return r;
}

namespace {

// Largest threshold maximizing F1 over the observed-score grid.
std::pair<double, bool> f1_threshold(std::span<const double> scores,
                                     std::span<const int> labels) {
    bool pos = false, neg = false;
    for (int l : labels) (l ? pos : neg) = true;
    if (!pos || !neg) {
        // percentile fallback: 99.5th percentile of observed scores
        std::vector<double> sorted(scores.begin(), scores.end());
        std::sort(sorted.begin(), sorted.end());
        const std::size_t idx = std::min(
            sorted.size() - 1,
            static_cast<std::size_t>(
                std::ceil(0.995 * static_cast<double>(sorted.size())) - 1));
        return {sorted[idx], true};
    }
    std::vector<double> grid(scores.begin(), scores.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    double best_f1 = -1.0, best_thr = grid.back();
    for (double thr : grid) {
        std::int64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool pred = scores[i] > thr;
            if (pred && labels[i]) ++tp;
            else if (pred && !labels[i]) ++fp;
            else if (!pred && labels[i]) ++fn;
        }
        const double f1 =
            (2 * tp + fp + fn) ? 2.0 * static_cast<double>(tp) / (2.0 * tp + fp + fn)
                               : 0.0;
        if (f1 >= best_f1) {  // >= keeps the larger threshold on ties
            best_f1 = f1;
            best_thr = thr;
        }
    }
    return {best_thr, false};
}

}  // namespace

ThresholdPair select_thresholds(std::span<const AnomalyResult> val_results) {
    if (val_results.empty())
        fail(ErrorCategory::validation, "threshold selection needs validation results");
    std::vector<double> px_scores;
    std::vector<int> px_labels;
    pool_pixels(val_results, px_scores, px_labels);
    std::vector<double> im_scores;
    std::vector<int> im_labels;
    for (const auto& r : val_results) {
        im_scores.push_back(r.image_score);
        im_labels.push_back(r.label);
    }
    ThresholdPair out;
    std::tie(out.pixel_thr, out.pixel_fallback) = f1_threshold(px_scores, px_labels);
    std::tie(out.image_thr, out.image_fallback) = f1_threshold(im_scores, im_labels);
    return out;
}

void pool_pixels(std::span<const AnomalyResult> results, std::vector<double>& scores,
                 std::vector<int>& labels) {
    scores.clear();
    labels.clear();
    for (const auto& r : results) {
        const std::size_t n = r.anomaly_map.size();
        const double* d = r.anomaly_map.data();
        if (!r.mask || r.mask->data.size() != n)
            fail(ErrorCategory::validation, "anomaly result without a matching mask");
        for (std::size_t i = 0; i < n; ++i) {
            scores.push_back(d[i]);
            labels.push_back(r.mask->data[i] ? 1 : 0);
        }
    }
}

Evaluation evaluate(std::span<const AnomalyResult> results, double pixel_thr,
                    double image_thr) {
    if (results.empty()) fail(ErrorCategory::validation, "nothing to evaluate");
    std::vector<double> px_scores;
    std::vector<int> px_labels;
    pool_pixels(results, px_scores, px_labels);
    std::vector<double> im_scores;
    std::vector<int> im_labels;
    for (const auto& r : results) {
        im_scores.push_back(r.image_score);
        im_labels.push_back(r.label);
    }
    return {confusion_report("pixel", px_scores, px_labels, pixel_thr),
            confusion_report("image", im_scores, im_labels, image_thr)};
}

}  // namespace wdt

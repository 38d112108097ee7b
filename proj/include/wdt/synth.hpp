#pragma once

#include <filesystem>
#include <vector>

#include "wdt/dataset.hpp"

namespace wdt {

// Deterministic fundus-like corpus: smooth radial background, dark vessel
// curves (normal anatomy, never masked), bright unmasked distractor blobs in
// normal and abnormal images alike, and small dark discs (the anomalies) whose
// pixels are exactly the mask.
struct SynthConfig {
    int n_images = 40;
    int width = 96;   // even
    int height = 64;  // even
    int val_count = 5;
    int test_count = 5;
    int vessels_min = 3, vessels_max = 5;
    int dots_min = 2, dots_max = 5;
    int dot_radius_min = 1, dot_radius_max = 3;
    double dot_darkening_min = 0.3, dot_darkening_max = 0.5;
    int distractors_min = 1, distractors_max = 3;
    double abnormal_fraction = 0.5;
    std::uint64_t seed = 7;

    void validate() const;
};

struct SynthDot {
    int cx, cy, radius;
};

struct SynthImageInfo {
    std::string id;
    Split split;
    bool abnormal;
    std::vector<SynthDot> dots;
};

struct SynthReport {
    std::filesystem::path manifest;
    std::vector<SynthImageInfo> images;
};

// Writes images/, masks/ and manifest.csv under out_dir; byte-identical for a
// given config.
SynthReport generate_corpus(const SynthConfig& cfg,
                            const std::filesystem::path& out_dir);

}  // namespace wdt

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wdt/image.hpp"

namespace wdt {

enum class Split { train, val, test };

Split parse_split(const std::string& s);
const char* to_string(Split s);

struct ManifestEntry {
    std::string id;
    std::string image_path;  // relative to the manifest's directory
    std::string mask_path;   // empty = all-zero mask
    Split split = Split::train;
};

// CSV with header `id,image_path,mask_path,split`.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& manifest);

struct PreprocessConfig {
    int clahe_tiles_x = 8;
    int clahe_tiles_y = 8;
    double clahe_clip = 2.0;
    int target_width = 300;
    int target_height = 200;
};

struct Sample {
    HsvImage image;  // preprocessed: CLAHE on V, then resized
    Mask mask;
    Split split = Split::train;
    int label = 0;  // 1 iff the mask has any positive pixel
    std::string id;
};

// Loads, preprocesses and packages every manifest entry in order.
// CLAHE runs before the resize; masks are resized nearest-neighbour and
// re-binarized.
std::vector<Sample> load_dataset(const std::filesystem::path& manifest,
                                 const PreprocessConfig& cfg, int workers = 1);

std::vector<const Sample*> split_of(const std::vector<Sample>& all, Split s);

}  // namespace wdt

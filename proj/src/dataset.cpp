#include "wdt/dataset.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "wdt/image_io.hpp"

namespace wdt {

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    fail(ErrorCategory::validation, "unknown split tag '" + s + "'");
}

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in)
        fail(ErrorCategory::ingestion, "cannot open manifest '" + manifest.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorCategory::validation, "manifest is missing its header row");
    if (split_csv_line(line) !=
        std::vector<std::string>{"id", "image_path", "mask_path", "split"})
        fail(ErrorCategory::validation,
             "manifest header must be 'id,image_path,mask_path,split'");
    std::vector<ManifestEntry> entries;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (f.size() != 4)
            fail(ErrorCategory::validation,
                 "manifest row with " + std::to_string(f.size()) + " fields: " + line);
        entries.push_back({f[0], f[1], f[2], parse_split(f[3])});
    }
    return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& manifest) {
    std::ofstream out(manifest);
    if (!out)
        fail(ErrorCategory::io, "cannot write manifest '" + manifest.string() + "'");
    out << "id,image_path,mask_path,split\n";
    for (const auto& e : entries)
        out << e.id << ',' << e.image_path << ',' << e.mask_path << ','
            << to_string(e.split) << '\n';
}

namespace {

Sample load_one(const ManifestEntry& entry, const std::filesystem::path& root,
                const PreprocessConfig& cfg) {
    const auto image_path = root / entry.image_path;
    if (!std::filesystem::exists(image_path))
        fail(ErrorCategory::ingestion, "missing image file '" + image_path.string() + "'");
    RgbImage rgb = load_image(image_path);
    rgb.source_id = entry.id;

    Mask mask;
    if (entry.mask_path.empty()) {
        mask = Mask(rgb.height(), rgb.width());
    } else {
        const auto mask_path = root / entry.mask_path;
        if (!std::filesystem::exists(mask_path))
            fail(ErrorCategory::ingestion, "missing mask file '" + mask_path.string() + "'");
        mask = load_mask(mask_path);
        if (mask.height != rgb.height() || mask.width != rgb.width())
            fail(ErrorCategory::validation,
                 "image/mask shape mismatch for id '" + entry.id + "'");
    }

    HsvImage hsv = decompose_hsv(rgb);
    hsv.value = clahe(hsv.value, cfg.clahe_tiles_x, cfg.clahe_tiles_y, cfg.clahe_clip);

    Sample s;
    s.image.hue = resize_bilinear(hsv.hue, cfg.target_height, cfg.target_width);
    s.image.saturation =
        resize_bilinear(hsv.saturation, cfg.target_height, cfg.target_width);
    s.image.value = resize_bilinear(hsv.value, cfg.target_height, cfg.target_width);
    s.image.source_id = entry.id;
    s.mask = resize_mask_nearest(mask, cfg.target_height, cfg.target_width);
    s.split = entry.split;
    s.label = s.mask.any() ? 1 : 0;
    s.id = entry.id;
    return s;
}

}  // namespace

std::vector<Sample> load_dataset(const std::filesystem::path& manifest,
                                 const PreprocessConfig& cfg, int workers) {
    const auto entries = read_manifest(manifest);
    const auto root = manifest.parent_path();
    std::vector<Sample> samples(entries.size());
    if (entries.empty()) return samples;

    const int n_workers =
        std::max(1, std::min<int>(workers, static_cast<int>(entries.size())));
    if (n_workers == 1) {
        for (std::size_t i = 0; i < entries.size(); ++i)
            samples[i] = load_one(entries[i], root, cfg);
        return samples;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_workers);
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < entries.size(); i += n_workers)
                    samples[i] = load_one(entries[i], root, cfg);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return samples;
}

std::vector<const Sample*> split_of(const std::vector<Sample>& all, Split s) {
    std::vector<const Sample*> out;
    for (const auto& sample : all)
        if (sample.split == s) out.push_back(&sample);
    return out;
}

}  // namespace wdt

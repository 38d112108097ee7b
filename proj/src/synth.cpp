#include "wdt/synth.hpp"

#include <algorithm>
#include <cmath>

#include "wdt/image_io.hpp"
#include "wdt/rng.hpp"

namespace wdt {

void SynthConfig::validate() const {
    if (n_images < 1) fail(ErrorCategory::config, "synth.n_images must be >= 1");
    if (width < 4 || height < 4 || width % 2 || height % 2)
        fail(ErrorCategory::config, "synth image size must be even and >= 4");
    if (val_count + test_count >= n_images)
        fail(ErrorCategory::config, "synth split counts leave no training images");
    if (vessels_min > vessels_max || dots_min > dots_max ||
        dot_radius_min > dot_radius_max || dot_radius_min < 1 ||
        dot_darkening_min > dot_darkening_max || distractors_min > distractors_max)
        fail(ErrorCategory::config, "synth ranges must be non-empty");
    if (abnormal_fraction < 0.0 || abnormal_fraction > 1.0)
        fail(ErrorCategory::config, "synth.abnormal_fraction must be in [0,1]");
}

namespace {

void stamp_vessel(Plane& img, const Plane& base, Rng& rng, int W, int H) {
    const double p0x = rng.uniform_range(0, W), p0y = rng.uniform_range(0, H);
    const double p1x = rng.uniform_range(0, W), p1y = rng.uniform_range(0, H);
    const double p2x = rng.uniform_range(0, W), p2y = rng.uniform_range(0, H);
    const double width = rng.uniform_range(0.7, 1.6);
    const double dark = rng.uniform_range(0.25, 0.45);
    const int rr = static_cast<int>(std::ceil(width));
    const int steps = 300;
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const double u = 1.0 - t;
        const double px = u * u * p0x + 2 * u * t * p1x + t * t * p2x;
        const double py = u * u * p0y + 2 * u * t * p1y + t * t * p2y;
        const int x0 = static_cast<int>(std::lround(px));
        const int y0 = static_cast<int>(std::lround(py));
        for (int dy = -rr; dy <= rr; ++dy)
            for (int dx = -rr; dx <= rr; ++dx) {
                const int x = x0 + dx, y = y0 + dy;
                if (x < 0 || x >= W || y < 0 || y >= H) continue;
                if (dx * dx + dy * dy <= width * width)
                    img.at(y, x) = base.at(y, x) * (1.0 - dark);
            }
    }
}

}  // namespace

SynthReport generate_corpus(const SynthConfig& cfg,
                            const std::filesystem::path& out_dir) {
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    std::filesystem::create_directories(out_dir / "masks", ec);
    if (!std::filesystem::is_directory(out_dir / "images") ||
        !std::filesystem::is_directory(out_dir / "masks"))
        fail(ErrorCategory::io, "cannot create corpus directories under '" +
                                    out_dir.string() + "'");

    const int W = cfg.width, H = cfg.height;
    const int n_train = cfg.n_images - cfg.val_count - cfg.test_count;
    Rng master(cfg.seed);

    SynthReport report;
    std::vector<ManifestEntry> entries;
    int split_pos = 0;
    Split current_split = Split::train;
    int in_split_index = 0;

    for (int i = 0; i < cfg.n_images; ++i) {
        if (i < n_train) {
            current_split = Split::train;
            in_split_index = i;
        } else if (i < n_train + cfg.val_count) {
            current_split = Split::val;
            in_split_index = i - n_train;
        } else {
            current_split = Split::test;
            in_split_index = i - n_train - cfg.val_count;
        }
        (void)split_pos;

        Rng rng = master.child(static_cast<std::uint64_t>(i));

        // radial background
        const double cx = W / 2.0 + rng.uniform_range(-6, 6);
        const double cy = H / 2.0 + rng.uniform_range(-4, 4);
        const double lift = rng.uniform_range(-0.05, 0.05);
        Plane base(H, W);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double rx = (x - cx) / (W / 2.0);
                const double ry = (y - cy) / (H / 2.0);
                base.at(y, x) =
                    std::clamp(0.75 - 0.45 * (rx * rx + ry * ry) + lift, 0.05, 1.0);
            }
        Plane img = base;

        const int n_vessels = rng.uniform_int(cfg.vessels_min, cfg.vessels_max);
        for (int vtx = 0; vtx < n_vessels; ++vtx) stamp_vessel(img, base, rng, W, H);

        const int n_distract = rng.uniform_int(cfg.distractors_min, cfg.distractors_max);
        for (int d = 0; d < n_distract; ++d) {
            const double bx = rng.uniform_range(5, W - 5);
            const double by = rng.uniform_range(5, H - 5);
            const double sig = rng.uniform_range(1.5, 3.0);
            const double amp = rng.uniform_range(0.15, 0.3);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
                    img.at(y, x) += amp * std::exp(-d2 / (2.0 * sig * sig));
                }
        }
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                img.at(y, x) = std::clamp(img.at(y, x), 0.0, 1.0);

        // anomalies: small dark discs, mask = exactly their pixels
        const bool abnormal =
            std::floor((in_split_index + 1) * cfg.abnormal_fraction) >
            std::floor(in_split_index * cfg.abnormal_fraction);
        Mask mask(H, W);
        SynthImageInfo info;
        if (abnormal) {
            const Plane pre = img;
            const int n_dots = rng.uniform_int(cfg.dots_min, cfg.dots_max);
            for (int d = 0; d < n_dots; ++d) {
                const int rad = rng.uniform_int(cfg.dot_radius_min, cfg.dot_radius_max);
                const int x0 = rng.uniform_int(rad + 2, W - rad - 3);
                const int y0 = rng.uniform_int(rad + 2, H - rad - 3);
                const double drop =
                    rng.uniform_range(cfg.dot_darkening_min, cfg.dot_darkening_max);
                info.dots.push_back({x0, y0, rad});
                for (int dy = -rad; dy <= rad; ++dy)
                    for (int dx = -rad; dx <= rad; ++dx) {
                        if (dx * dx + dy * dy > rad * rad) continue;
                        const int x = x0 + dx, y = y0 + dy;
                        mask.at(y, x) = 1;
                        // keep at least ~2.5 8-bit levels below the pre-dot value
                        const double v = std::min(pre.at(y, x) * (1.0 - drop),
                                                  pre.at(y, x) - 2.5 / 255.0);
                        img.at(y, x) = std::max(v, 0.0);
                    }
            }
        }

        char name[32];
        std::snprintf(name, sizeof(name), "img_%03d", i);
        info.id = name;
        info.split = current_split;
        info.abnormal = abnormal;
        report.images.push_back(info);

        // fundus-like colour: V channel carries the pattern exactly
        RgbImage rgb{img, Plane(H, W), Plane(H, W), info.id};
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                rgb.g.at(y, x) = 0.55 * img.at(y, x);
                rgb.b.at(y, x) = 0.35 * img.at(y, x);
            }
        const std::string img_rel = std::string("images/") + name + ".png";
        save_png_rgb8(rgb, out_dir / img_rel);
        std::string mask_rel;
        if (abnormal) {
            mask_rel = std::string("masks/") + name + ".png";
            save_png_mask(mask, out_dir / mask_rel);
        }
        entries.push_back({info.id, img_rel, mask_rel, current_split});
    }

    report.manifest = out_dir / "manifest.csv";
    write_manifest(entries, report.manifest);
    return report;
}

}  // namespace wdt

#include "wdt/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wdt/config.hpp"
#include "wdt/image_io.hpp"

namespace wdt {
namespace {

using nlohmann::json;

struct Series {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;
};

// Minimal line-plot writer; axes are linear with 5 ticks per side.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Series>& series, bool marks = false) {
    const int W = 640, H = 420, L = 70, R = 20, T = 40, B = 55;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            xmin = std::min(xmin, x); xmax = std::max(xmax, x);
            ymin = std::min(ymin, y); ymax = std::max(ymax, y);
        }
    if (xmin > xmax) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax == xmin) { xmax = xmin + 1; }
    if (ymax == ymin) { ymax = ymin + 1; }
    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
       << "' font-family='sans-serif' font-size='12'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>"
       << title << "</text>\n";
    os << "<line x1='" << L << "' y1='" << H - B << "' x2='" << W - R << "' y2='"
       << H - B << "' stroke='black'/>\n";
    os << "<line x1='" << L << "' y1='" << T << "' x2='" << L << "' y2='" << H - B
       << "' stroke='black'/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double x = xmin + (xmax - xmin) * i / 5.0;
        const double y = ymin + (ymax - ymin) * i / 5.0;
        os << "<text x='" << px(x) << "' y='" << H - B + 18
           << "' text-anchor='middle'>" << std::setprecision(3) << x << "</text>\n";
        os << "<text x='" << L - 8 << "' y='" << py(y) + 4
           << "' text-anchor='end'>" << std::setprecision(3) << y << "</text>\n";
        os << "<line x1='" << L << "' y1='" << py(y) << "' x2='" << W - R << "' y2='"
           << py(y) << "' stroke='#dddddd'/>\n";
    }
    os << "<text x='" << (L + W - R) / 2 << "' y='" << H - 12
       << "' text-anchor='middle'>" << xlabel << "</text>\n";
    os << "<text x='16' y='" << (T + H - B) / 2
       << "' text-anchor='middle' transform='rotate(-90 16 " << (T + H - B) / 2
       << ")'>" << ylabel << "</text>\n";
    int li = 0;
    for (const auto& s : series) {
        os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
        for (auto [x, y] : s.points) os << px(x) << ',' << py(y) << ' ';
        os << "'/>\n";
        if (marks)
            for (auto [x, y] : s.points)
                os << "<circle cx='" << px(x) << "' cy='" << py(y)
                   << "' r='3' fill='" << s.color << "'/>\n";
        os << "<text x='" << W - R - 10 << "' y='" << T + 16 + 16 * li
           << "' text-anchor='end' fill='" << s.color << "'>" << s.label << "</text>\n";
        ++li;
    }
    os << "</svg>\n";
    std::ofstream(path) << os.str();
}

json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) fail(ErrorCategory::io, "missing eval artifact '" + p.string() + "'");
    json j;
    in >> j;
    return j;
}

void loss_curve(const std::filesystem::path& dir) {
    std::ifstream in(dir / "train_log.jsonl");
    if (!in) fail(ErrorCategory::io, "missing train_log.jsonl in " + dir.string());
    Series s{"loss", "#1f77b4", {}};
    Series lr{"lr (scaled)", "#ff7f0e", {}};
    std::string line;
    double lr_max = 0.0;
    std::vector<std::pair<double, double>> lrs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        s.points.push_back({j.at("step"), j.at("loss")});
        lrs.push_back({j.at("step"), j.at("lr")});
        lr_max = std::max(lr_max, lrs.back().second);
    }
    double loss_max = 0.0;
    for (auto& p : s.points) loss_max = std::max(loss_max, p.second);
    for (auto [x, y] : lrs)
        lr.points.push_back({x, lr_max > 0 ? y / lr_max * loss_max : 0.0});
    write_svg_plot(dir / "loss_curve.svg", "training loss", "step", "loss", {s, lr});
}

void roc_figure(const std::filesystem::path& dir) {
    const json rocs = read_json(dir / "roc_curves.json");
    std::vector<Series> series;
    const char* colors[2] = {"#1f77b4", "#d62728"};
    int i = 0;
    for (const char* level : {"pixel", "image"}) {
        Series s{std::string(level) + "-level", colors[i++], {}};
        for (const auto& p : rocs.at(level))
            s.points.push_back({p.at("fpr"), p.at("tpr")});
        series.push_back(std::move(s));
    }
    series.push_back({"chance", "#999999", {{0, 0}, {1, 1}}});
    write_svg_plot(dir / "roc_curves.svg", "ROC (test split)", "false positive rate",
                   "true positive rate", series);
}

void montage(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> maps;
    const auto adir = dir / "anomaly";
    if (std::filesystem::is_directory(adir))
        for (const auto& e : std::filesystem::directory_iterator(adir))
            if (e.path().extension() == ".png") maps.push_back(e.path());
    std::sort(maps.begin(), maps.end());
    if (maps.empty()) fail(ErrorCategory::io, "no anomaly heatmaps in " + adir.string());
    const RgbImage first = load_image(maps[0]);
    const int W = first.width(), H = first.height();
    const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(maps.size()))));
    const int rows = static_cast<int>((maps.size() + cols - 1) / cols);
    const int pad = 2;
    Plane sheet(rows * (H + pad) + pad, cols * (W + pad) + pad, 1.0);
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const RgbImage img = load_image(maps[i]);
        const int oy = pad + static_cast<int>(i) / cols * (H + pad);
        const int ox = pad + static_cast<int>(i) % cols * (W + pad);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                sheet.at(oy + y, ox + x) = img.r.at(y, x);
    }
    save_png_gray8(sheet, dir / "heatmap_montage.png");
}

std::string fmt_metric(const json& v) {
    if (v.is_null()) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v.get<double>();
    return os.str();
}

void summary(const std::filesystem::path& dir,
             const std::vector<std::filesystem::path>& all_runs) {
    const json m = read_json(dir / "metrics.json");
    std::ofstream out(dir / "summary.md");
    out << "# Run summary: " << dir.filename().string() << "\n\n";
    out << "| level | AUC | ACC | F1 | SEN | SPE | threshold |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const char* level : {"pixel", "image"}) {
        const json& r = m.at(level);
        out << "| " << level << " | " << fmt_metric(r.at("auc")) << " | "
            << fmt_metric(r.at("acc")) << " | " << fmt_metric(r.at("f1")) << " | "
            << fmt_metric(r.at("sen")) << " | " << fmt_metric(r.at("spe")) << " | "
            << fmt_metric(r.at("threshold")) << " |\n";
    }
    out << "\nConfusion counts (pixel): TP=" << m.at("pixel").at("tp")
        << " FP=" << m.at("pixel").at("fp") << " TN=" << m.at("pixel").at("tn")
        << " FN=" << m.at("pixel").at("fn") << "\n";
    out << "\nConfusion counts (image): TP=" << m.at("image").at("tp")
        << " FP=" << m.at("image").at("fp") << " TN=" << m.at("image").at("tn")
        << " FN=" << m.at("image").at("fn") << "\n";
    out << "\nHeatmap normalization: min=" << m.at("heatmap_normalization").at("min")
        << " max=" << m.at("heatmap_normalization").at("max") << "\n";

    // HSV plane variance, a cheap stand-in for per-channel information content
    RunConfig cfg;
    const auto resolved = dir / "config.resolved";
    if (std::filesystem::exists(resolved)) {
        load_config_file(cfg, resolved);
        if (std::filesystem::exists(cfg.manifest)) {
            const auto entries = read_manifest(cfg.manifest);
            const auto root = std::filesystem::path(cfg.manifest).parent_path();
            double var[3] = {0, 0, 0};
            int n = 0;
            for (const auto& e : entries) {
                const HsvImage hsv = decompose_hsv(load_image(root / e.image_path));
                const Plane* planes[3] = {&hsv.hue, &hsv.saturation, &hsv.value};
                for (int c = 0; c < 3; ++c) {
                    double mean = 0;
                    for (std::size_t i = 0; i < planes[c]->size(); ++i)
                        mean += planes[c]->data()[i];
                    mean /= static_cast<double>(planes[c]->size());
                    double v = 0;
                    for (std::size_t i = 0; i < planes[c]->size(); ++i) {
                        const double d = planes[c]->data()[i] - mean;
                        v += d * d;
                    }
                    var[c] += v / static_cast<double>(planes[c]->size());
                }
                ++n;
            }
            if (n > 0) {
                out << "\nHSV plane variance over the corpus (information-content "
                       "proxy):\n\n";
                out << "| plane | mean variance |\n|---|---|\n";
                const char* names[3] = {"H", "S", "V"};
                for (int c = 0; c < 3; ++c)
                    out << "| " << names[c] << " | " << var[c] / n << " |\n";
            }
        }
    }
    if (all_runs.size() > 1) {
        out << "\nSweep figure: delta_sweep.svg (" << all_runs.size() << " runs)\n";
    }
}

void sweep_plot(const std::vector<std::filesystem::path>& dirs) {
    Series px{"pixel AUC", "#1f77b4", {}}, im{"image AUC", "#d62728", {}};
    for (const auto& dir : dirs) {
        RunConfig cfg;
        load_config_file(cfg, dir / "config.resolved");
        const json m = read_json(dir / "metrics.json");
        const double dmax = cfg.condition.delta_max;
        if (!m.at("pixel").at("auc").is_null())
            px.points.push_back({dmax, m.at("pixel").at("auc")});
        if (!m.at("image").at("auc").is_null())
            im.points.push_back({dmax, m.at("image").at("auc")});
    }
    auto by_x = [](const auto& a, const auto& b) { return a.first < b.first; };
    std::sort(px.points.begin(), px.points.end(), by_x);
    std::sort(im.points.begin(), im.points.end(), by_x);
    write_svg_plot(dirs.front() / "delta_sweep.svg",
                   "AUC vs condition-noise ceiling", "delta_max", "AUC", {px, im},
                   true);
}

}  // namespace

void write_report(const std::vector<std::filesystem::path>& run_dirs) {
    if (run_dirs.empty()) fail(ErrorCategory::validation, "report needs >= 1 run dir");
    const auto& dir = run_dirs.front();
    loss_curve(dir);
    roc_figure(dir);
    montage(dir);
    summary(dir, run_dirs);
    if (run_dirs.size() > 1) sweep_plot(run_dirs);
}

}  // namespace wdt

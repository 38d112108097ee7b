#pragma once

#include <filesystem>
#include <vector>

namespace wdt {

// Renders loss curve, ROC curves and a heatmap montage for one evaluated run;
// with several runs, adds a delta_max-vs-AUC sweep plot. All figures are
// static files (SVG / PNG) plus summary.md in the first run directory.
void write_report(const std::vector<std::filesystem::path>& run_dirs);

}  // namespace wdt

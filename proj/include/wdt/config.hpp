#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "wdt/dataset.hpp"
#include "wdt/denoiser.hpp"
#include "wdt/inpaint.hpp"
#include "wdt/sampler.hpp"
#include "wdt/schedule.hpp"
#include "wdt/synth.hpp"
#include "wdt/trainer.hpp"

namespace wdt {

// Every tunable in one flat-nested key space ("section.key"). Unknown keys are
// rejected; the resolved set is serialized into each run directory.
struct RunConfig {
    // run
    std::string run_name = "run";
    std::string output_root = "runs";  // WDT_RUN_ROOT env overrides
    int workers = 4;
    // data
    std::string manifest = "corpus/manifest.csv";
    PreprocessConfig preprocess;
    // diffusion schedule
    int T = 1000;
    double beta_start = 0.00085;
    double beta_end = 0.012;
    int sampling_steps = 50;
    // conditioning
    ConditioningConfig condition;
    // denoiser
    DenoiserConfig denoiser;
    // training
    TrainConfig train;
    // sampler scalings
    SamplerCoeffs sampler;
    // pseudo-normal synthesis
    InpaintConfig inpaint;
    // detection
    bool signed_residual = false;   // positive-part residual instead of |.|
    int min_component = 0;          // prediction post-filter, 0 = off
    bool opening = false;           // 3x3 binary opening post-filter
    double pixel_thr_override = -1; // thresholds.*: <0 = select on validation
    double image_thr_override = -1;
    // eval
    std::uint64_t eval_seed = 1234;
    std::string eval_checkpoint = "best";
    // synth
    SynthConfig synth;
    std::string synth_out = "corpus";

    NoiseSchedule make_schedule() const {
        return build_schedule(T, beta_start, beta_end, sampling_steps);
    }
    void validate() const;
};

struct ConfigKey {
    std::string key;
    std::string type;  // int | real | bool | string | uint
    std::string description;
};

// Schema in declaration order (single source of truth for file parsing, CLI
// flags, documentation and config.resolved serialization).
const std::vector<ConfigKey>& config_schema();

// Current value of a key, formatted.
std::string get_config_value(const RunConfig& cfg, const std::string& key);
// Parse + assign; throws config errors on unknown key or bad value.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// `section.key = value` lines; '#' comments. Unknown keys rejected.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);
std::string serialize_config(const RunConfig& cfg);

}  // namespace wdt

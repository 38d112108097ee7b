#include "wdt/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace wdt {
namespace {

struct Binding {
    ConfigKey meta;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

int parse_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        fail(ErrorCategory::config, "key '" + key + "': invalid integer '" + v + "'");
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        fail(ErrorCategory::config, "key '" + key + "': invalid unsigned '" + v + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        fail(ErrorCategory::config, "key '" + key + "': invalid real '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    fail(ErrorCategory::config, "key '" + key + "': invalid bool '" + v + "'");
}

#define BIND_INT(KEY, FIELD, DESC)                                              \
    {{KEY, "int", DESC},                                                        \
     [](const RunConfig& c) { return std::to_string(c.FIELD); },                \
     [](RunConfig& c, const std::string& v) { c.FIELD = parse_int(KEY, v); }}

#define BIND_UINT(KEY, FIELD, DESC)                                             \
    {{KEY, "uint", DESC},                                                       \
     [](const RunConfig& c) { return std::to_string(c.FIELD); },                \
     [](RunConfig& c, const std::string& v) { c.FIELD = parse_uint(KEY, v); }}

#define BIND_REAL(KEY, FIELD, DESC)                                             \
    {{KEY, "real", DESC},                                                       \
     [](const RunConfig& c) { return fmt_real(c.FIELD); },                      \
     [](RunConfig& c, const std::string& v) { c.FIELD = parse_real(KEY, v); }}

#define BIND_BOOL(KEY, FIELD, DESC)                                             \
    {{KEY, "bool", DESC},                                                       \
     [](const RunConfig& c) { return c.FIELD ? "true" : "false"; },             \
     [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(KEY, v); }}

#define BIND_STR(KEY, FIELD, DESC)                                              \
    {{KEY, "string", DESC},                                                     \
     [](const RunConfig& c) { return c.FIELD; },                                \
     [](RunConfig& c, const std::string& v) { c.FIELD = v; }}

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> b = {
        BIND_STR("run.name", run_name, "run directory name under the output root"),
        BIND_STR("run.output_root", output_root,
                 "root for run directories (env WDT_RUN_ROOT overrides)"),
        BIND_INT("run.workers", workers, "worker threads for data and scoring"),
        BIND_STR("data.manifest", manifest, "dataset manifest CSV"),
        BIND_INT("data.clahe_tiles_x", preprocess.clahe_tiles_x, "CLAHE tile columns"),
        BIND_INT("data.clahe_tiles_y", preprocess.clahe_tiles_y, "CLAHE tile rows"),
        BIND_REAL("data.clahe_clip", preprocess.clahe_clip, "CLAHE clip limit"),
        BIND_INT("data.target_width", preprocess.target_width,
                 "resize target width (even)"),
        BIND_INT("data.target_height", preprocess.target_height,
                 "resize target height (even)"),
        BIND_INT("diffusion.T", T, "total diffusion timesteps"),
        BIND_REAL("diffusion.beta_start", beta_start, "first beta of the schedule"),
        BIND_REAL("diffusion.beta_end", beta_end, "last beta of the schedule"),
        BIND_INT("diffusion.sampling_steps", sampling_steps,
                 "reverse sampling sub-schedule length"),
        BIND_INT("condition.delta_max", condition.delta_max,
                 "max condition-noise timestep during training"),
        BIND_INT("condition.inference_delta", condition.inference_delta,
                 "condition-noise timestep at inference (0 = clean)"),
        BIND_INT("denoiser.depth", denoiser.depth, "transformer blocks"),
        BIND_INT("denoiser.hidden_dim", denoiser.hidden_dim, "token width"),
        BIND_INT("denoiser.num_heads", denoiser.num_heads, "attention heads"),
        BIND_INT("denoiser.patch_size", denoiser.patch_size,
                 "patch edge over the sub-band grid"),
        BIND_INT("denoiser.timestep_embed_dim", denoiser.timestep_embed_dim,
                 "sinusoidal timestep embedding width"),
        BIND_INT("train.epochs", train.epochs, "training epochs"),
        BIND_INT("train.batch_size", train.batch_size, "batch size"),
        BIND_REAL("train.lr_init", train.lr_init, "initial learning rate"),
        BIND_REAL("train.weight_decay", train.weight_decay, "decoupled weight decay"),
        BIND_REAL("train.grad_clip", train.grad_clip, "global gradient-norm clip"),
        BIND_UINT("train.seed", train.seed, "master training seed"),
        BIND_BOOL("train.noise_encoding", train.noise_encoding,
                  "tau: perturb the image condition during training"),
        BIND_BOOL("train.pixel_supervision", train.pixel_supervision,
                  "psi: train toward inpainted pseudo-normal targets"),
        BIND_INT("train.val_every", train.val_every, "epochs between validations"),
        BIND_REAL("sampler.sigma_data", sampler.sigma_data,
                  "boundary-scaling data deviation"),
        BIND_REAL("sampler.timestep_scaling", sampler.timestep_scaling,
                  "scaled-timestep factor in the boundary scalings"),
        BIND_INT("inpaint.radius", inpaint.radius, "inpainting radius in pixels"),
        BIND_BOOL("inpaint.dilate", inpaint.dilate_mask, "1-px mask dilation"),
        BIND_BOOL("detect.signed_residual", signed_residual,
                  "score positive residuals only instead of |residual|"),
        BIND_INT("detect.min_component", min_component,
                 "drop predicted components smaller than this (0 = off)"),
        BIND_BOOL("detect.opening", opening, "3x3 binary opening on predictions"),
        BIND_REAL("thresholds.pixel", pixel_thr_override,
                  "pixel threshold (< 0 selects on validation)"),
        BIND_REAL("thresholds.image", image_thr_override,
                  "image threshold (< 0 selects on validation)"),
        BIND_UINT("eval.seed", eval_seed, "base seed for inference noise"),
        BIND_STR("eval.checkpoint", eval_checkpoint,
                 "checkpoint to evaluate: 'best' or a file name"),
        BIND_INT("synth.n_images", synth.n_images, "corpus size"),
        BIND_INT("synth.width", synth.width, "corpus image width"),
        BIND_INT("synth.height", synth.height, "corpus image height"),
        BIND_INT("synth.val_count", synth.val_count, "validation image count"),
        BIND_INT("synth.test_count", synth.test_count, "test image count"),
        BIND_INT("synth.vessels_min", synth.vessels_min, "min vessels per image"),
        BIND_INT("synth.vessels_max", synth.vessels_max, "max vessels per image"),
        BIND_INT("synth.dots_min", synth.dots_min, "min anomaly dots per abnormal image"),
        BIND_INT("synth.dots_max", synth.dots_max, "max anomaly dots per abnormal image"),
        BIND_INT("synth.dot_radius_min", synth.dot_radius_min, "min dot radius"),
        BIND_INT("synth.dot_radius_max", synth.dot_radius_max, "max dot radius"),
        BIND_REAL("synth.dot_darkening_min", synth.dot_darkening_min,
                  "min dot contrast drop"),
        BIND_REAL("synth.dot_darkening_max", synth.dot_darkening_max,
                  "max dot contrast drop"),
        BIND_INT("synth.distractors_min", synth.distractors_min,
                 "min bright distractors per image"),
        BIND_INT("synth.distractors_max", synth.distractors_max,
                 "max bright distractors per image"),
        BIND_REAL("synth.abnormal_fraction", synth.abnormal_fraction,
                  "fraction of abnormal images"),
        BIND_UINT("synth.seed", synth.seed, "corpus generator seed"),
        BIND_STR("synth.out_dir", synth_out, "corpus output directory"),
    };
    return b;
}

const Binding& find_binding(const std::string& key) {
    for (const auto& b : bindings())
        if (b.meta.key == key) return b;
    fail(ErrorCategory::config, "unknown config key '" + key + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> ks;
        for (const auto& b : bindings()) ks.push_back(b.meta);
        return ks;
    }();
    return keys;
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
    return find_binding(key).get(cfg);
}

void set_config_value(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
    find_binding(key).set(cfg, value);
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::config, "cannot open config file '" + path.string() + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(ErrorCategory::config, path.string() + ":" + std::to_string(lineno) +
                                            ": expected 'key = value'");
        set_config_value(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    for (const auto& b : bindings())
        os << b.meta.key << " = " << b.get(cfg) << "\n";
    return os.str();
}

void RunConfig::validate() const {
    if (preprocess.target_width % 2 || preprocess.target_height % 2 ||
        preprocess.target_width < 2 || preprocess.target_height < 2)
        fail(ErrorCategory::config, "data.target dims must be even and >= 2");
    make_schedule();  // validates schedule parameters
    condition.validate(T);
    denoiser.validate();
    train.validate();
    inpaint.validate();
    synth.validate();
    if ((preprocess.target_height / 2) % denoiser.patch_size != 0 ||
        (preprocess.target_width / 2) % denoiser.patch_size != 0)
        fail(ErrorCategory::config,
             "sub-band dims (target/2) must be divisible by denoiser.patch_size");
    if (workers < 1) fail(ErrorCategory::config, "run.workers must be >= 1");
}

}  // namespace wdt

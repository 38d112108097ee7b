// wdt: wavelet-domain diffusion anomaly detection for fundus-like images.
// Subcommands: synth, synth-targets, train, infer, eval, report.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "wdt/config.hpp"
#include "wdt/image_io.hpp"
#include "wdt/inpaint.hpp"
#include "wdt/pipeline.hpp"
#include "wdt/report.hpp"
#include "wdt/synth.hpp"

namespace fs = std::filesystem;
using namespace wdt;

namespace {

struct CliState {
    RunConfig cfg;
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_options(CLI::App* cmd, CliState& st) {
    cmd->add_option("--config", st.config_file, "config file (key = value lines)")
        ->check(CLI::ExistingFile);
    for (const auto& key : config_schema()) {
        const std::string flag = "--" + key.key;
        cmd->add_option_function<std::string>(
               flag,
               [&st, k = key.key](const std::string& v) {
                   st.overrides.emplace_back(k, v);
               },
               key.description + " [" + key.type + "]");
    }
}

RunConfig resolve_config(CliState& st) {
    RunConfig cfg;
    if (!st.config_file.empty()) load_config_file(cfg, st.config_file);
    for (const auto& [k, v] : st.overrides) set_config_value(cfg, k, v);
    cfg.validate();
    return cfg;
}

int cmd_synth(const RunConfig& cfg) {
    const auto report = generate_corpus(cfg.synth, cfg.synth_out);
    const auto dir = run_dir_for(cfg);
    RunLock lock(dir);
    write_run_metadata(cfg, dir, report.manifest);
    int abnormal = 0;
    for (const auto& i : report.images) abnormal += i.abnormal;
    std::cout << "corpus: " << report.images.size() << " images (" << abnormal
              << " abnormal) at " << cfg.synth_out << "\n";
    std::cout << "manifest: " << report.manifest.string() << "\n";
    return 0;
}

int cmd_synth_targets(const RunConfig& cfg) {
    const auto dir = run_dir_for(cfg);
    RunLock lock(dir);
    write_run_metadata(cfg, dir, cfg.manifest);
    const auto samples = load_dataset(cfg.manifest, cfg.preprocess, cfg.workers);
    const auto root = fs::path(cfg.manifest).parent_path();
    fs::create_directories(root / "targets");
    int written = 0;
    for (const auto& s : samples) {
        const Plane vpn = synthesize_pseudo_normal(s, cfg.inpaint);
        save_png_gray16(vpn, root / "targets" / (s.id + ".png"));
        ++written;
    }
    std::cout << "pseudo-normal targets: " << written << " planes under "
              << (root / "targets").string() << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    const auto dir = run_dir_for(cfg);
    RunLock lock(dir);
    write_run_metadata(cfg, dir, cfg.manifest);
    const PreparedData data = prepare_data(cfg);
    const TrainArtifacts art = run_training(cfg, dir, data, &std::cout);
    std::cout << "best checkpoint: " << art.best_checkpoint.string() << " (epoch "
              << art.best_epoch << ", val pixel AUC " << art.best_val_auc << ")\n";
    return 0;
}

int cmd_infer(const RunConfig& cfg) {
    const auto dir = run_dir_for(cfg);
    RunLock lock(dir);
    const auto ckpt_path = dir / (cfg.eval_checkpoint == "best"
                                      ? std::string("best.bin")
                                      : cfg.eval_checkpoint);
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const PreparedData data = prepare_data(cfg);
    const auto out = run_inference(ckpt.params, data.test, cfg);
    fs::create_directories(dir / "recon");
    for (std::size_t i = 0; i < out.recons.size(); ++i) {
        save_png_rgb8(recompose_hsv(out.recons[i]),
                      dir / "recon" / (out.results[i].id + ".png"));
    }
    std::cout << "reconstructions: " << out.recons.size() << " under "
              << (dir / "recon").string() << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    const auto dir = run_dir_for(cfg);
    RunLock lock(dir);
    write_run_metadata(cfg, dir, cfg.manifest);
    const PreparedData data = prepare_data(cfg);
    const EvalArtifacts art = run_eval(cfg, dir, data, &std::cout);
    auto show = [](const MetricsReport& r) {
        std::cout << "  " << r.level << ": AUC "
                  << (r.auc ? std::to_string(*r.auc) : std::string("n/a")) << " ACC "
                  << r.acc << " F1 " << r.f1 << " SEN " << r.sen << " SPE " << r.spe
                  << "\n";
    };
    std::cout << "metrics written to " << (dir / "metrics.json").string() << "\n";
    show(art.metrics.pixel);
    show(art.metrics.image);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavelet-domain diffusion anomaly detection"};
    app.require_subcommand(1);

    CliState st;
    std::vector<std::string> report_dirs;

    CLI::App* synth = app.add_subcommand("synth", "generate the synthetic corpus");
    CLI::App* targets = app.add_subcommand(
        "synth-targets", "write pseudo-normal target planes for a manifest");
    CLI::App* train = app.add_subcommand("train", "train the denoiser");
    CLI::App* infer = app.add_subcommand("infer", "write reconstructions for the test split");
    CLI::App* eval = app.add_subcommand("eval", "score the test split and write metrics");
    CLI::App* report = app.add_subcommand("report", "render figures and a summary");
    for (CLI::App* cmd : {synth, targets, train, infer, eval})
        add_config_options(cmd, st);
    report->add_option("run_dirs", report_dirs, "evaluated run directories")
        ->expected(-1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // --help exits 0; usage errors exit nonzero
    }

    try {
        if (report->parsed()) {
            if (report_dirs.empty()) {
                std::cerr << "error: category=config message=report needs run dirs\n";
                return 2;
            }
            std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
            write_report(dirs);
            std::cout << "report written under " << dirs.front().string() << "\n";
            return 0;
        }
        RunConfig cfg = resolve_config(st);
        if (synth->parsed()) return cmd_synth(cfg);
        if (targets->parsed()) return cmd_synth_targets(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (infer->parsed()) return cmd_infer(cfg);
        if (eval->parsed()) return cmd_eval(cfg);
    } catch (const Error& e) {
        std::cerr << "error: category=" << to_string(e.category())
                  << " message=" << e.what() << "\n";
        return e.category() == ErrorCategory::config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: category=internal message=" << e.what() << "\n";
        return 1;
    }
    return 0;
}

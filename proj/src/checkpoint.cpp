#include "wdt/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace wdt {
namespace {

constexpr char kMagic[8] = {'W', 'D', 'T', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::ifstream& in) {
    const std::uint64_t n = read_u64(in);
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    return v;
}

void write_string(std::ofstream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
    const std::uint64_t n = read_u64(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write checkpoint '" + path.string() + "'");
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));

    const DenoiserConfig& c = ckpt.params.cfg;
    nlohmann::ordered_json meta = {
        {"config",
         {{"depth", c.depth},
          {"hidden_dim", c.hidden_dim},
          {"num_heads", c.num_heads},
          {"patch_size", c.patch_size},
          {"in_channels", c.in_channels},
          {"out_channels", c.out_channels},
          {"timestep_embed_dim", c.timestep_embed_dim}}},
        {"init_seed", ckpt.params.init_seed},
        {"epoch", ckpt.epoch},
        {"val_metric", ckpt.val_metric},
        {"adam_step", ckpt.adam.step},
    };
    write_string(out, meta.dump());
    write_doubles(out, ckpt.params.data);
    write_doubles(out, ckpt.adam.m);
    write_doubles(out, ckpt.adam.v);
    write_string(out, ckpt.rng_state);
    if (!out) fail(ErrorCategory::io, "checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open checkpoint '" + path.string() + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        fail(ErrorCategory::validation, "not a checkpoint file: " + path.string());
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion)
        fail(ErrorCategory::validation,
             "unsupported checkpoint version " + std::to_string(version));

    const auto meta = nlohmann::json::parse(read_string(in));
    const auto& jc = meta.at("config");
    DenoiserConfig cfg;
    cfg.depth = jc.at("depth");
    cfg.hidden_dim = jc.at("hidden_dim");
    cfg.num_heads = jc.at("num_heads");
    cfg.patch_size = jc.at("patch_size");
    cfg.in_channels = jc.at("in_channels");
    cfg.out_channels = jc.at("out_channels");
    cfg.timestep_embed_dim = jc.at("timestep_embed_dim");

    Checkpoint ckpt;
    ckpt.params.cfg = cfg;
    ckpt.params.layout = make_param_layout(cfg);
    ckpt.params.init_seed = meta.at("init_seed");
    ckpt.epoch = meta.at("epoch");
    ckpt.val_metric = meta.at("val_metric");
    ckpt.params.data = read_doubles(in);
    ckpt.adam.m = read_doubles(in);
    ckpt.adam.v = read_doubles(in);
    ckpt.adam.step = meta.at("adam_step");
    ckpt.rng_state = read_string(in);
    if (!in) fail(ErrorCategory::io, "truncated checkpoint: " + path.string());
    if (ckpt.params.data.size() != ckpt.params.layout.total)
        fail(ErrorCategory::validation, "checkpoint weight count mismatch");
    return ckpt;
}

}  // namespace wdt

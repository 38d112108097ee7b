#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wdt/grid.hpp"
#include "wdt/rng.hpp"

namespace wdt {

// Patchified transformer over the 8-channel concatenation of the noisy target
// stack and the condition stack, with timestep conditioning through adaptive
// layer-norm modulation. Predicts the 4-channel noise stack.
struct DenoiserConfig {
    int depth = 12;
    int hidden_dim = 384;
    int num_heads = 6;
    int patch_size = 5;
    int in_channels = 8;   // 4 target + 4 condition
    int out_channels = 4;  // noise prediction lives in sub-band space
    int timestep_embed_dim = 256;

    void validate() const;
    int head_dim() const { return hidden_dim / num_heads; }
};

// One named parameter tensor inside the flat weight vector.
struct ParamSegment {
    std::string name;
    std::size_t offset;
    std::size_t rows;  // output dim (1 for biases)
    std::size_t cols;
    bool is_bias;
    bool zero_init;

    std::size_t count() const { return rows * cols; }
};

struct ParamLayout {
    std::vector<ParamSegment> segments;
    std::size_t total = 0;

    const ParamSegment& find(const std::string& name) const;
};

ParamLayout make_param_layout(const DenoiserConfig& cfg);
std::size_t param_count(const DenoiserConfig& cfg);

struct DenoiserParams {
    DenoiserConfig cfg;
    ParamLayout layout;
    std::vector<double> data;
    std::uint64_t init_seed = 0;

    double* segment(const std::string& name) { return data.data() + layout.find(name).offset; }
    const double* segment(const std::string& name) const {
        return data.data() + layout.find(name).offset;
    }
};

// Deterministic init: truncated normal (std 0.02, +/-2 std) for projection
// weights, zeros for biases, modulation layers and the output projection, so a
// fresh model predicts exactly zero noise.
DenoiserParams init_params(const DenoiserConfig& cfg, std::uint64_t seed);

// Scratch space for one forward (and optional backward) pass over a single
// sample. Reusable across calls with the same config and grid.
class DenoiserWorkspace {
  public:
    DenoiserWorkspace(const DenoiserConfig& cfg, int grid_h, int grid_w,
                      bool store_for_backward);

    int subband_h() const { return h_; }
    int subband_w() const { return w_; }
    bool stores_backward() const { return store_; }

  private:
    friend class DenoiserNet;
    int h_, w_, tokens_;
    bool store_;
    // fixed tables
    std::vector<double> pos_embed;  // [tokens, D]
    // per-pass buffers (block-indexed when storing for backward)
    std::vector<double> patches, x0;
    std::vector<double> femb, tpre1, tpre_act, cvec, svec;
    std::vector<double> xs;          // block inputs (+ final input)
    std::vector<double> ada;         // per block 6D modulation
    std::vector<double> xn1, istd1, mod1, qkv, attn_p, attn_o, attn_out;
    std::vector<double> xn2, istd2, mod2, hmid, hact, mlp_out;
    std::vector<double> adaf, xnf, istdf, modf, ytok;
    // backward scratch
    std::vector<double> dx, dtok, dqkv, dhead, dps, dsvec, dcvec;
};

class DenoiserNet {
  public:
    // eps_out: out_channels * h * w. z_t/z_cond: 4 * h * w each.
    static void forward(const DenoiserParams& params, const double* z_t,
                        const double* z_cond, int t, DenoiserWorkspace& ws,
                        double* eps_out);

    // d_eps: gradient of the loss w.r.t. eps_out. Accumulates into grad
    // (same layout as params.data). Requires a workspace that stored the
    // forward pass.
    static void backward(const DenoiserParams& params, const double* d_eps,
                         DenoiserWorkspace& ws, std::vector<double>& grad);
};

// Convenience wrappers on stacks.
SubbandStack denoiser_forward(const DenoiserParams& params, const SubbandStack& z_t,
                              int t, const SubbandStack& z_cond);

}  // namespace wdt

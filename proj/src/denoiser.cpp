#include "wdt/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "wdt/kernels.hpp"

namespace wdt {

namespace {

constexpr double kLnEps = 1e-6;

using kernels::ops;

// y[Tk,out] = x[Tk,in] * W[out,in]^T + b
void linear_fwd(std::size_t tokens, std::size_t in, std::size_t out, const double* x,
                const double* w, const double* b, double* y) {
    ops().gemm_nt(tokens, out, in, x, w, y, false);
    for (std::size_t tk = 0; tk < tokens; ++tk)
        for (std::size_t j = 0; j < out; ++j) y[tk * out + j] += b[j];
}

// accumulates dW, db; optionally produces dx
void linear_bwd(std::size_t tokens, std::size_t in, std::size_t out, const double* x,
                const double* w, const double* dy, double* dw, double* db,
                double* dx) {
    ops().gemm_tn(out, in, tokens, dy, x, dw, true);
    for (std::size_t tk = 0; tk < tokens; ++tk)
        for (std::size_t j = 0; j < out; ++j) db[j] += dy[tk * out + j];
    if (dx) ops().gemm_nn(tokens, in, out, dy, w, dx, false);
}

// row-wise layer norm without affine params; stores normalized rows + 1/std
void layernorm_fwd(std::size_t tokens, std::size_t dim, const double* x, double* xn,
                   double* istd) {
    for (std::size_t tk = 0; tk < tokens; ++tk) {
        const double* r = x + tk * dim;
        double* o = xn + tk * dim;
        const double mu = ops().sum(dim, r) / static_cast<double>(dim);
        double var = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = r[j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(dim);
        const double is = 1.0 / std::sqrt(var + kLnEps);
        istd[tk] = is;
        for (std::size_t j = 0; j < dim; ++j) o[j] = (r[j] - mu) * is;
    }
}

// dx from dxn given stored xn and istd
void layernorm_bwd(std::size_t tokens, std::size_t dim, const double* xn,
                   const double* istd, const double* dxn, double* dx) {
    for (std::size_t tk = 0; tk < tokens; ++tk) {
        const double* n = xn + tk * dim;
        const double* g = dxn + tk * dim;
        double* o = dx + tk * dim;
        const double m1 = ops().sum(dim, g) / static_cast<double>(dim);
        const double m2 = ops().dot(dim, g, n) / static_cast<double>(dim);
        for (std::size_t j = 0; j < dim; ++j) o[j] = istd[tk] * (g[j] - m1 - n[j] * m2);
    }
}

// x*(1+scale) + shift, scale/shift broadcast over tokens
void modulate_fwd(std::size_t tokens, std::size_t dim, const double* xn,
                  const double* shift, const double* scale, double* out) {
    for (std::size_t tk = 0; tk < tokens; ++tk)
        for (std::size_t j = 0; j < dim; ++j)
            out[tk * dim + j] = xn[tk * dim + j] * (1.0 + scale[j]) + shift[j];
}

void modulate_bwd(std::size_t tokens, std::size_t dim, const double* xn,
                  const double* scale, const double* dmod, double* dxn,
                  double* dshift, double* dscale) {
    for (std::size_t tk = 0; tk < tokens; ++tk)
        for (std::size_t j = 0; j < dim; ++j) {
            const double g = dmod[tk * dim + j];
            dxn[tk * dim + j] = g * (1.0 + scale[j]);
            dshift[j] += g;
            dscale[j] += g * xn[tk * dim + j];
        }
}

inline double gelu_tanh(double x) {
    const double k = 0.7978845608028654;  // sqrt(2/pi)
    const double u = k * (x + 0.044715 * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

inline double gelu_tanh_grad(double x) {
    const double k = 0.7978845608028654;
    const double u = k * (x + 0.044715 * x * x * x);
    const double th = std::tanh(u);
    const double du = k * (1.0 + 3.0 * 0.044715 * x * x);
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu(double x) { return x * sigmoid(x); }
inline double silu_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

void softmax_rows(std::size_t rows, std::size_t cols, double* m) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = m + r * cols;
        const double mx = ops().max(cols, row);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        const double inv = 1.0 / sum;
        for (std::size_t c = 0; c < cols; ++c) row[c] *= inv;
    }
}

std::vector<double> sincos_axis(int positions, int dim) {
    // dim/2 frequencies, sin block then cos block
    std::vector<double> e(static_cast<std::size_t>(positions) * dim);
    const int half = dim / 2;
    for (int pos = 0; pos < positions; ++pos)
        for (int i = 0; i < half; ++i) {
            const double omega =
                1.0 / std::pow(10000.0, static_cast<double>(i) / half);
            e[static_cast<std::size_t>(pos) * dim + i] = std::sin(pos * omega);
            e[static_cast<std::size_t>(pos) * dim + half + i] = std::cos(pos * omega);
        }
    return e;
}

}  // namespace

void DenoiserConfig::validate() const {
    if (depth < 1) fail(ErrorCategory::config, "denoiser.depth must be >= 1");
    if (hidden_dim < 4 || hidden_dim % num_heads != 0)
        fail(ErrorCategory::config, "denoiser.hidden_dim must be divisible by num_heads");
    if (hidden_dim % 4 != 0)
        fail(ErrorCategory::config,
             "denoiser.hidden_dim must be divisible by 4 (2-D sin-cos grid)");
    if (num_heads < 1) fail(ErrorCategory::config, "denoiser.num_heads must be >= 1");
    if (patch_size < 1) fail(ErrorCategory::config, "denoiser.patch_size must be >= 1");
    if (in_channels != 8)
        fail(ErrorCategory::config, "denoiser.in_channels is fixed at 8");
    if (out_channels != 4)
        fail(ErrorCategory::config, "denoiser.out_channels is fixed at 4");
    if (timestep_embed_dim < 2 || timestep_embed_dim % 2 != 0)
        fail(ErrorCategory::config, "denoiser.timestep_embed_dim must be even");
}

const ParamSegment& ParamLayout::find(const std::string& name) const {
    for (const auto& s : segments)
        if (s.name == name) return s;
    fail(ErrorCategory::config, "unknown parameter segment '" + name + "'");
}

ParamLayout make_param_layout(const DenoiserConfig& cfg) {
    cfg.validate();
    const std::size_t D = cfg.hidden_dim;
    const std::size_t F = cfg.timestep_embed_dim;
    const std::size_t P = static_cast<std::size_t>(cfg.patch_size) * cfg.patch_size;
    ParamLayout l;
    auto add = [&](const std::string& name, std::size_t rows, std::size_t cols,
                   bool bias, bool zero) {
        l.segments.push_back({name, l.total, rows, cols, bias, zero});
        l.total += rows * cols;
    };
    add("patch_w", D, cfg.in_channels * P, false, false);
    add("patch_b", 1, D, true, true);
    add("tmlp1_w", D, F, false, false);
    add("tmlp1_b", 1, D, true, true);
    add("tmlp2_w", D, D, false, false);
    add("tmlp2_b", 1, D, true, true);
    for (int b = 0; b < cfg.depth; ++b) {
        const std::string pre = "block" + std::to_string(b) + ".";
        add(pre + "ada_w", 6 * D, D, false, true);
        add(pre + "ada_b", 1, 6 * D, true, true);
        add(pre + "qkv_w", 3 * D, D, false, false);
        add(pre + "qkv_b", 1, 3 * D, true, true);
        add(pre + "proj_w", D, D, false, false);
        add(pre + "proj_b", 1, D, true, true);
        add(pre + "fc1_w", 4 * D, D, false, false);
        add(pre + "fc1_b", 1, 4 * D, true, true);
        add(pre + "fc2_w", D, 4 * D, false, false);
        add(pre + "fc2_b", 1, D, true, true);
    }
    add("final.ada_w", 2 * D, D, false, true);
    add("final.ada_b", 1, 2 * D, true, true);
    add("final.out_w", cfg.out_channels * P, D, false, true);
    add("final.out_b", 1, cfg.out_channels * P, true, true);
    return l;
}

std::size_t param_count(const DenoiserConfig& cfg) {
    return make_param_layout(cfg).total;
}

DenoiserParams init_params(const DenoiserConfig& cfg, std::uint64_t seed) {
    DenoiserParams p;
    p.cfg = cfg;
    p.layout = make_param_layout(cfg);
    p.data.assign(p.layout.total, 0.0);
    p.init_seed = seed;
    Rng rng(seed);
    for (const auto& seg : p.layout.segments) {
        if (seg.is_bias || seg.zero_init) continue;
        double* w = p.data.data() + seg.offset;
        for (std::size_t i = 0; i < seg.count(); ++i) {
            // truncated normal, std 0.02, clipped at +/- 2 std by resampling
            double x;
            do {
                x = rng.normal();
            } while (std::fabs(x) > 2.0);
            w[i] = 0.02 * x;
        }
    }
    return p;
}

DenoiserWorkspace::DenoiserWorkspace(const DenoiserConfig& cfg, int grid_h,
                                     int grid_w, bool store_for_backward)
    : h_(grid_h), w_(grid_w), store_(store_for_backward) {
    cfg.validate();
    const int p = cfg.patch_size;
    if (grid_h % p != 0 || grid_w % p != 0)
        fail(ErrorCategory::shape, "sub-band dims must be divisible by patch_size");
    const int gh = grid_h / p, gw = grid_w / p;
    tokens_ = gh * gw;
    const std::size_t Tk = tokens_;
    const std::size_t D = cfg.hidden_dim;
    const std::size_t N = store_ ? cfg.depth : 1;
    const std::size_t P = static_cast<std::size_t>(p) * p;

    // fixed 2-D sin-cos table: y-axis embedding then x-axis, D/2 each
    pos_embed.assign(Tk * D, 0.0);
    const auto ey = sincos_axis(gh, cfg.hidden_dim / 2);
    const auto ex = sincos_axis(gw, cfg.hidden_dim / 2);
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            double* row = pos_embed.data() + (static_cast<std::size_t>(gy) * gw + gx) * D;
            std::memcpy(row, ey.data() + static_cast<std::size_t>(gy) * (D / 2),
                        sizeof(double) * (D / 2));
            std::memcpy(row + D / 2, ex.data() + static_cast<std::size_t>(gx) * (D / 2),
                        sizeof(double) * (D / 2));
        }

    patches.assign(Tk * cfg.in_channels * P, 0.0);
    x0.assign(Tk * D, 0.0);
    femb.assign(cfg.timestep_embed_dim, 0.0);
    tpre1.assign(D, 0.0);
    tpre_act.assign(D, 0.0);
    cvec.assign(D, 0.0);
    svec.assign(D, 0.0);
    xs.assign((N + 1) * Tk * D, 0.0);
    ada.assign(N * 6 * D, 0.0);
    xn1.assign(N * Tk * D, 0.0);
    istd1.assign(N * Tk, 0.0);
    mod1.assign(N * Tk * D, 0.0);
    qkv.assign(N * Tk * 3 * D, 0.0);
    attn_p.assign(N * cfg.num_heads * Tk * Tk, 0.0);
    attn_o.assign(N * Tk * D, 0.0);
    attn_out.assign(N * Tk * D, 0.0);
    xn2.assign(N * Tk * D, 0.0);
    istd2.assign(N * Tk, 0.0);
    mod2.assign(N * Tk * D, 0.0);
    hmid.assign(N * Tk * 4 * D, 0.0);
    hact.assign(N * Tk * 4 * D, 0.0);
    mlp_out.assign(N * Tk * D, 0.0);
    adaf.assign(2 * D, 0.0);
    xnf.assign(Tk * D, 0.0);
    istdf.assign(Tk, 0.0);
    modf.assign(Tk * D, 0.0);
    ytok.assign(Tk * cfg.out_channels * P, 0.0);
    if (store_) {
        dx.assign(Tk * D, 0.0);
        dtok.assign(Tk * 4 * D, 0.0);
        dqkv.assign(Tk * 3 * D, 0.0);
        dhead.assign(6 * Tk * (D / cfg.num_heads), 0.0);
        dps.assign(Tk * Tk, 0.0);
        dsvec.assign(D, 0.0);
        dcvec.assign(D, 0.0);
    }
}

namespace {

struct BlockParams {
    const double *ada_w, *ada_b, *qkv_w, *qkv_b, *proj_w, *proj_b, *fc1_w, *fc1_b,
        *fc2_w, *fc2_b;
};

BlockParams block_params(const DenoiserParams& p, int b) {
    const std::string pre = "block" + std::to_string(b) + ".";
    return {p.segment(pre + "ada_w"), p.segment(pre + "ada_b"),
            p.segment(pre + "qkv_w"), p.segment(pre + "qkv_b"),
            p.segment(pre + "proj_w"), p.segment(pre + "proj_b"),
            p.segment(pre + "fc1_w"), p.segment(pre + "fc1_b"),
            p.segment(pre + "fc2_w"), p.segment(pre + "fc2_b")};
}

struct BlockGrads {
    double *ada_w, *ada_b, *qkv_w, *qkv_b, *proj_w, *proj_b, *fc1_w, *fc1_b, *fc2_w,
        *fc2_b;
};

BlockGrads block_grads(const ParamLayout& l, std::vector<double>& g, int b) {
    const std::string pre = "block" + std::to_string(b) + ".";
    auto seg = [&](const std::string& n) { return g.data() + l.find(pre + n).offset; };
    return {seg("ada_w"), seg("ada_b"), seg("qkv_w"), seg("qkv_b"), seg("proj_w"),
            seg("proj_b"), seg("fc1_w"), seg("fc1_b"), seg("fc2_w"), seg("fc2_b")};
}

}  // namespace

void DenoiserNet::forward(const DenoiserParams& params, const double* z_t,
                          const double* z_cond, int t, DenoiserWorkspace& ws,
                          double* eps_out) {
    const DenoiserConfig& cfg = params.cfg;
    const int p = cfg.patch_size;
    const int gh = ws.h_ / p, gw = ws.w_ / p;
    const std::size_t Tk = ws.tokens_;
    const std::size_t D = cfg.hidden_dim;
    const std::size_t P = static_cast<std::size_t>(p) * p;
    const std::size_t in_dim = cfg.in_channels * P;
    const int nh = cfg.num_heads;
    const std::size_t dh = cfg.head_dim();
    const std::size_t plane = static_cast<std::size_t>(ws.h_) * ws.w_;

    // patchify the 8-channel input: token-major, channel-major within a token
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            double* tok = ws.patches.data() +
                          (static_cast<std::size_t>(gy) * gw + gx) * in_dim;
            for (int c = 0; c < cfg.in_channels; ++c) {
                const double* src = (c < 4 ? z_t + c * plane : z_cond + (c - 4) * plane);
                for (int py = 0; py < p; ++py)
                    for (int px = 0; px < p; ++px)
                        tok[c * P + py * p + px] =
                            src[static_cast<std::size_t>(gy * p + py) * ws.w_ + gx * p + px];
            }
        }

    linear_fwd(Tk, in_dim, D, ws.patches.data(), params.segment("patch_w"),
               params.segment("patch_b"), ws.x0.data());
    for (std::size_t i = 0; i < Tk * D; ++i) ws.x0[i] += ws.pos_embed[i];

    // timestep conditioning vector
    const int half = cfg.timestep_embed_dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        ws.femb[i] = std::cos(t * freq);
        ws.femb[half + i] = std::sin(t * freq);
    }
    linear_fwd(1, cfg.timestep_embed_dim, D, ws.femb.data(), params.segment("tmlp1_w"),
               params.segment("tmlp1_b"), ws.tpre1.data());
    for (std::size_t j = 0; j < D; ++j) ws.tpre_act[j] = silu(ws.tpre1[j]);
    linear_fwd(1, D, D, ws.tpre_act.data(), params.segment("tmlp2_w"),
               params.segment("tmlp2_b"), ws.cvec.data());
    for (std::size_t j = 0; j < D; ++j) ws.svec[j] = silu(ws.cvec[j]);

    std::memcpy(ws.xs.data(), ws.x0.data(), sizeof(double) * Tk * D);

    for (int b = 0; b < cfg.depth; ++b) {
        const std::size_t sb = ws.store_ ? b : 0;
        const BlockParams bp = block_params(params, b);
        double* x = ws.xs.data() + (ws.store_ ? b : 0) * Tk * D;
        double* x_next = ws.xs.data() + (ws.store_ ? b + 1 : 1) * Tk * D;
        double* adab = ws.ada.data() + sb * 6 * D;
        double* xn1 = ws.xn1.data() + sb * Tk * D;
        double* istd1 = ws.istd1.data() + sb * Tk;
        double* mod1 = ws.mod1.data() + sb * Tk * D;
        double* qkv = ws.qkv.data() + sb * Tk * 3 * D;
        double* probs = ws.attn_p.data() + sb * nh * Tk * Tk;
        double* attn_o = ws.attn_o.data() + sb * Tk * D;
        double* attn_out = ws.attn_out.data() + sb * Tk * D;
        double* xn2 = ws.xn2.data() + sb * Tk * D;
        double* istd2 = ws.istd2.data() + sb * Tk;
        double* mod2 = ws.mod2.data() + sb * Tk * D;
        double* hmid = ws.hmid.data() + sb * Tk * 4 * D;
        double* hact = ws.hact.data() + sb * Tk * 4 * D;
        double* mlp_out = ws.mlp_out.data() + sb * Tk * D;

        linear_fwd(1, D, 6 * D, ws.svec.data(), bp.ada_w, bp.ada_b, adab);
        const double* shift1 = adab;
        const double* scale1 = adab + D;
        const double* gate1 = adab + 2 * D;
        const double* shift2 = adab + 3 * D;
        const double* scale2 = adab + 4 * D;
        const double* gate2 = adab + 5 * D;

        layernorm_fwd(Tk, D, x, xn1, istd1);
        modulate_fwd(Tk, D, xn1, shift1, scale1, mod1);
        linear_fwd(Tk, D, 3 * D, mod1, bp.qkv_w, bp.qkv_b, qkv);

        // attention per head (contiguous copies of the strided head slices)
        std::vector<double> qh(Tk * dh), kh(Tk * dh), vh(Tk * dh), oh(Tk * dh);
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        for (int hix = 0; hix < nh; ++hix) {
            for (std::size_t tk = 0; tk < Tk; ++tk) {
                const double* row = qkv + tk * 3 * D;
                std::memcpy(qh.data() + tk * dh, row + hix * dh, sizeof(double) * dh);
                std::memcpy(kh.data() + tk * dh, row + D + hix * dh, sizeof(double) * dh);
                std::memcpy(vh.data() + tk * dh, row + 2 * D + hix * dh,
                            sizeof(double) * dh);
            }
            double* ph = probs + static_cast<std::size_t>(hix) * Tk * Tk;
            ops().gemm_nt(Tk, Tk, dh, qh.data(), kh.data(), ph, false);
            for (std::size_t i = 0; i < Tk * Tk; ++i) ph[i] *= scale;
            softmax_rows(Tk, Tk, ph);
            ops().gemm_nn(Tk, dh, Tk, ph, vh.data(), oh.data(), false);
            for (std::size_t tk = 0; tk < Tk; ++tk)
                std::memcpy(attn_o + tk * D + hix * dh, oh.data() + tk * dh,
                            sizeof(double) * dh);
        }
        linear_fwd(Tk, D, D, attn_o, bp.proj_w, bp.proj_b, attn_out);
        for (std::size_t tk = 0; tk < Tk; ++tk)
            for (std::size_t j = 0; j < D; ++j)
                x_next[tk * D + j] = x[tk * D + j] + gate1[j] * attn_out[tk * D + j];

        layernorm_fwd(Tk, D, x_next, xn2, istd2);
        modulate_fwd(Tk, D, xn2, shift2, scale2, mod2);
        linear_fwd(Tk, D, 4 * D, mod2, bp.fc1_w, bp.fc1_b, hmid);
        for (std::size_t i = 0; i < Tk * 4 * D; ++i) hact[i] = gelu_tanh(hmid[i]);
        linear_fwd(Tk, 4 * D, D, hact, bp.fc2_w, bp.fc2_b, mlp_out);
        for (std::size_t tk = 0; tk < Tk; ++tk)
            for (std::size_t j = 0; j < D; ++j)
                x_next[tk * D + j] += gate2[j] * mlp_out[tk * D + j];
        if (!ws.store_ && b + 1 < cfg.depth)
            std::memcpy(ws.xs.data(), x_next, sizeof(double) * Tk * D);
    }

    // final layer
    const double* xfin = ws.xs.data() + (ws.store_ ? cfg.depth : 1) * Tk * D;
    linear_fwd(1, D, 2 * D, ws.svec.data(), params.segment("final.ada_w"),
               params.segment("final.ada_b"), ws.adaf.data());
    layernorm_fwd(Tk, D, xfin, ws.xnf.data(), ws.istdf.data());
    modulate_fwd(Tk, D, ws.xnf.data(), ws.adaf.data(), ws.adaf.data() + D,
                 ws.modf.data());
    const std::size_t out_dim = cfg.out_channels * P;
    linear_fwd(Tk, D, out_dim, ws.modf.data(), params.segment("final.out_w"),
               params.segment("final.out_b"), ws.ytok.data());

    // unpatchify
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            const double* tok =
                ws.ytok.data() + (static_cast<std::size_t>(gy) * gw + gx) * out_dim;
            for (int c = 0; c < cfg.out_channels; ++c)
                for (int py = 0; py < p; ++py)
                    for (int px = 0; px < p; ++px)
                        eps_out[c * plane +
                                static_cast<std::size_t>(gy * p + py) * ws.w_ + gx * p +
                                px] = tok[c * P + py * p + px];
        }
}

void DenoiserNet::backward(const DenoiserParams& params, const double* d_eps,
                           DenoiserWorkspace& ws, std::vector<double>& grad) {
    if (!ws.store_)
        fail(ErrorCategory::validation,
             "backward requires a workspace that stored the forward pass");
    if (grad.size() != params.data.size())
        fail(ErrorCategory::shape, "gradient buffer size mismatch");
    const DenoiserConfig& cfg = params.cfg;
    const int p = cfg.patch_size;
    const int gh = ws.h_ / p, gw = ws.w_ / p;
    const std::size_t Tk = ws.tokens_;
    const std::size_t D = cfg.hidden_dim;
    const std::size_t P = static_cast<std::size_t>(p) * p;
    const std::size_t out_dim = cfg.out_channels * P;
    const std::size_t in_dim = cfg.in_channels * P;
    const int nh = cfg.num_heads;
    const std::size_t dh = cfg.head_dim();
    const std::size_t plane = static_cast<std::size_t>(ws.h_) * ws.w_;
    const ParamLayout& L = params.layout;
    auto gseg = [&](const std::string& n) { return grad.data() + L.find(n).offset; };

    // d ytok from d eps (re-patchify)
    std::vector<double> dytok(Tk * out_dim);
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            double* tok = dytok.data() + (static_cast<std::size_t>(gy) * gw + gx) * out_dim;
            for (int c = 0; c < cfg.out_channels; ++c)
                for (int py = 0; py < p; ++py)
                    for (int px = 0; px < p; ++px)
                        tok[c * P + py * p + px] =
                            d_eps[c * plane +
                                  static_cast<std::size_t>(gy * p + py) * ws.w_ + gx * p +
                                  px];
        }

    std::fill(ws.dsvec.begin(), ws.dsvec.end(), 0.0);
    double* dx = ws.dx.data();

    // final layer
    std::vector<double> dmod(Tk * D), dxn(Tk * D);
    linear_bwd(Tk, D, out_dim, ws.modf.data(), params.segment("final.out_w"),
               dytok.data(), gseg("final.out_w"), gseg("final.out_b"), dmod.data());
    std::vector<double> dadaf(2 * D, 0.0);
    modulate_bwd(Tk, D, ws.xnf.data(), ws.adaf.data() + D, dmod.data(), dxn.data(),
                 dadaf.data(), dadaf.data() + D);
    layernorm_bwd(Tk, D, ws.xnf.data(), ws.istdf.data(), dxn.data(), dx);
    // final ada linear: input svec
    ops().gemm_tn(2 * D, D, 1, dadaf.data(), ws.svec.data(), gseg("final.ada_w"), true);
    for (std::size_t j = 0; j < 2 * D; ++j) gseg("final.ada_b")[j] += dadaf[j];
    ops().gemm_nn(1, D, 2 * D, dadaf.data(), params.segment("final.ada_w"),
                  ws.dtok.data(), false);
    for (std::size_t j = 0; j < D; ++j) ws.dsvec[j] += ws.dtok[j];

    std::vector<double> qh(Tk * dh), kh(Tk * dh), vh(Tk * dh);
    std::vector<double> doh(Tk * dh), dqh(Tk * dh), dkh(Tk * dh), dvh(Tk * dh);
    std::vector<double> dada(6 * D);
    std::vector<double> dbranch(Tk * D), dwide(Tk * 4 * D);

    for (int b = cfg.depth - 1; b >= 0; --b) {
        const BlockParams bp = block_params(params, b);
        const BlockGrads bg = block_grads(L, grad, b);
        const std::size_t sb = b;
        const double* x = ws.xs.data() + sb * Tk * D;
        const double* x_mid = ws.xs.data() + (sb + 1) * Tk * D;  // x after attn residual (pre-mlp add was in place; x_mid holds final block output)
        const double* adab = ws.ada.data() + sb * 6 * D;
        const double* xn1 = ws.xn1.data() + sb * Tk * D;
        const double* istd1 = ws.istd1.data() + sb * Tk;
        const double* mod1 = ws.mod1.data() + sb * Tk * D;
        const double* qkv = ws.qkv.data() + sb * Tk * 3 * D;
        const double* probs = ws.attn_p.data() + sb * nh * Tk * Tk;
        const double* attn_o = ws.attn_o.data() + sb * Tk * D;
        const double* attn_out = ws.attn_out.data() + sb * Tk * D;
        const double* xn2 = ws.xn2.data() + sb * Tk * D;
        const double* istd2 = ws.istd2.data() + sb * Tk;
        const double* mod2 = ws.mod2.data() + sb * Tk * D;
        const double* hmid = ws.hmid.data() + sb * Tk * 4 * D;
        const double* hact = ws.hact.data() + sb * Tk * 4 * D;
        const double* mlp_out = ws.mlp_out.data() + sb * Tk * D;
        const double* gate1 = adab + 2 * D;
        const double* scale1 = adab + D;
        const double* gate2 = adab + 5 * D;
        const double* scale2 = adab + 4 * D;
        (void)x_mid;

        std::fill(dada.begin(), dada.end(), 0.0);
        double* dshift1 = dada.data();
        double* dscale1 = dada.data() + D;
        double* dgate1 = dada.data() + 2 * D;
        double* dshift2 = dada.data() + 3 * D;
        double* dscale2 = dada.data() + 4 * D;
        double* dgate2 = dada.data() + 5 * D;

        // mlp residual: x_out = x_mid + gate2 .* mlp_out
        for (std::size_t tk = 0; tk < Tk; ++tk)
            for (std::size_t j = 0; j < D; ++j) {
                const double g = dx[tk * D + j];
                dgate2[j] += g * mlp_out[tk * D + j];
                dbranch[tk * D + j] = g * gate2[j];
            }
        linear_bwd(Tk, 4 * D, D, hact, bp.fc2_w, dbranch.data(), bg.fc2_w, bg.fc2_b,
                   dwide.data());
        for (std::size_t i = 0; i < Tk * 4 * D; ++i) dwide[i] *= gelu_tanh_grad(hmid[i]);
        linear_bwd(Tk, D, 4 * D, mod2, bp.fc1_w, dwide.data(), bg.fc1_w, bg.fc1_b,
                   dmod.data());
        modulate_bwd(Tk, D, xn2, scale2, dmod.data(), dxn.data(), dshift2, dscale2);
        layernorm_bwd(Tk, D, xn2, istd2, dxn.data(), dbranch.data());
        for (std::size_t i = 0; i < Tk * D; ++i) dx[i] += dbranch[i];

        // attn residual: x_mid = x + gate1 .* attn_out
        for (std::size_t tk = 0; tk < Tk; ++tk)
            for (std::size_t j = 0; j < D; ++j) {
                const double g = dx[tk * D + j];
                dgate1[j] += g * attn_out[tk * D + j];
                dbranch[tk * D + j] = g * gate1[j];
            }
        linear_bwd(Tk, D, D, attn_o, bp.proj_w, dbranch.data(), bg.proj_w, bg.proj_b,
                   dmod.data());  // dmod = d attn_o here
        const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
        for (int hix = 0; hix < nh; ++hix) {
            for (std::size_t tk = 0; tk < Tk; ++tk) {
                const double* row = qkv + tk * 3 * D;
                std::memcpy(qh.data() + tk * dh, row + hix * dh, sizeof(double) * dh);
                std::memcpy(kh.data() + tk * dh, row + D + hix * dh, sizeof(double) * dh);
                std::memcpy(vh.data() + tk * dh, row + 2 * D + hix * dh,
                            sizeof(double) * dh);
                std::memcpy(doh.data() + tk * dh, dmod.data() + tk * D + hix * dh,
                            sizeof(double) * dh);
            }
            const double* ph = probs + static_cast<std::size_t>(hix) * Tk * Tk;
            double* dp = ws.dps.data();
            ops().gemm_nt(Tk, Tk, dh, doh.data(), vh.data(), dp, false);
            ops().gemm_tn(Tk, dh, Tk, ph, doh.data(), dvh.data(), false);
            for (std::size_t r = 0; r < Tk; ++r) {
                double* dpr = dp + r * Tk;
                const double* pr = ph + r * Tk;
                const double dotv = ops().dot(Tk, dpr, pr);
                for (std::size_t c2 = 0; c2 < Tk; ++c2)
                    dpr[c2] = pr[c2] * (dpr[c2] - dotv);
            }
            ops().gemm_nn(Tk, dh, Tk, dp, kh.data(), dqh.data(), false);
            ops().gemm_tn(Tk, dh, Tk, dp, qh.data(), dkh.data(), false);
            for (std::size_t tk = 0; tk < Tk; ++tk) {
                double* row = ws.dqkv.data() + tk * 3 * D;
                for (std::size_t j = 0; j < dh; ++j) {
                    row[hix * dh + j] = scale * dqh[tk * dh + j];
                    row[D + hix * dh + j] = scale * dkh[tk * dh + j];
                    row[2 * D + hix * dh + j] = dvh[tk * dh + j];
                }
            }
        }
        linear_bwd(Tk, D, 3 * D, mod1, bp.qkv_w, ws.dqkv.data(), bg.qkv_w, bg.qkv_b,
                   dmod.data());
        modulate_bwd(Tk, D, xn1, scale1, dmod.data(), dxn.data(), dshift1, dscale1);
        layernorm_bwd(Tk, D, xn1, istd1, dxn.data(), dbranch.data());
        for (std::size_t i = 0; i < Tk * D; ++i) dx[i] += dbranch[i];
        (void)x;

        // block ada linear
        ops().gemm_tn(6 * D, D, 1, dada.data(), ws.svec.data(), bg.ada_w, true);
        for (std::size_t j = 0; j < 6 * D; ++j) bg.ada_b[j] += dada[j];
        ops().gemm_nn(1, D, 6 * D, dada.data(), bp.ada_w, ws.dtok.data(), false);
        for (std::size_t j = 0; j < D; ++j) ws.dsvec[j] += ws.dtok[j];
    }

    // patch embedding
    linear_bwd(Tk, in_dim, D, ws.patches.data(), params.segment("patch_w"), dx,
               gseg("patch_w"), gseg("patch_b"), nullptr);

    // timestep MLP: svec = silu(cvec), cvec = tmlp2(silu(tmlp1(femb)))
    for (std::size_t j = 0; j < D; ++j)
        ws.dcvec[j] = ws.dsvec[j] * silu_grad(ws.cvec[j]);
    ops().gemm_tn(D, D, 1, ws.dcvec.data(), ws.tpre_act.data(), gseg("tmlp2_w"), true);
    for (std::size_t j = 0; j < D; ++j) gseg("tmlp2_b")[j] += ws.dcvec[j];
    ops().gemm_nn(1, D, D, ws.dcvec.data(), params.segment("tmlp2_w"), ws.dtok.data(),
                  false);
    for (std::size_t j = 0; j < D; ++j) ws.dtok[j] *= silu_grad(ws.tpre1[j]);
    ops().gemm_tn(D, cfg.timestep_embed_dim, 1, ws.dtok.data(), ws.femb.data(),
                  gseg("tmlp1_w"), true);
    for (std::size_t j = 0; j < D; ++j) gseg("tmlp1_b")[j] += ws.dtok[j];
}

SubbandStack denoiser_forward(const DenoiserParams& params, const SubbandStack& z_t,
                              int t, const SubbandStack& z_cond) {
    if (!z_t.same_shape(z_cond))
        fail(ErrorCategory::shape, "target and condition stacks must share one shape");
    DenoiserWorkspace ws(params.cfg, z_t.h, z_t.w, false);
    SubbandStack out(z_t.h, z_t.w, z_t.basis_id);
    DenoiserNet::forward(params, z_t.data.data(), z_cond.data.data(), t, ws,
                         out.data.data());
    return out;
}

}  // namespace wdt

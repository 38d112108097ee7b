#include "wdt/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace wdt {
namespace {

enum class PixState : std::uint8_t { known, band, inside };

constexpr double kInf = std::numeric_limits<double>::infinity();

struct HeapItem {
    double dist;
    int index;  // row-major pixel index; ties broken toward the smaller index
    bool operator>(const HeapItem& o) const {
        if (dist != o.dist) return dist > o.dist;
        return index > o.index;
    }
};

// Eikonal update from finalized neighbours on the 4-neighbourhood.
double solve_eikonal(int r, int c, int H, int W, const std::vector<double>& T,
                     const std::vector<PixState>& state) {
    auto axis_min = [&](int r0, int c0, int r1, int c1) {
        double m = kInf;
        if (r0 >= 0 && r0 < H && c0 >= 0 && c0 < W &&
            state[static_cast<std::size_t>(r0) * W + c0] == PixState::known)
            m = T[static_cast<std::size_t>(r0) * W + c0];
        if (r1 >= 0 && r1 < H && c1 >= 0 && c1 < W &&
            state[static_cast<std::size_t>(r1) * W + c1] == PixState::known)
            m = std::min(m, T[static_cast<std::size_t>(r1) * W + c1]);
        return m;
    };
    const double tx = axis_min(r, c - 1, r, c + 1);
    const double ty = axis_min(r - 1, c, r + 1, c);
    if (tx == kInf && ty == kInf) return kInf;
    if (tx == kInf) return ty + 1.0;
    if (ty == kInf) return tx + 1.0;
    const double d = tx - ty;
    if (std::fabs(d) >= 1.0) return std::min(tx, ty) + 1.0;
    return 0.5 * (tx + ty + std::sqrt(2.0 - d * d));
}

// One-sided gradient of the distance field at a finalized-or-band pixel.
void grad_T(int r, int c, int H, int W, const std::vector<double>& T,
            const std::vector<PixState>& state, double& gx, double& gy) {
    auto val = [&](int rr, int cc, bool& ok) {
        if (rr < 0 || rr >= H || cc < 0 || cc >= W) {
            ok = false;
            return 0.0;
        }
        const std::size_t i = static_cast<std::size_t>(rr) * W + cc;
        ok = T[i] != kInf;
        return T[i];
    };
    bool okp, okm;
    const double tc = T[static_cast<std::size_t>(r) * W + c];
    double tp = val(r, c + 1, okp), tm = val(r, c - 1, okm);
    if (okp && okm) gx = 0.5 * (tp - tm);
    else if (okp) gx = tp - tc;
    else if (okm) gx = tc - tm;
    else gx = 0.0;
    tp = val(r + 1, c, okp); tm = val(r - 1, c, okm);
    if (okp && okm) gy = 0.5 * (tp - tm);
    else if (okp) gy = tp - tc;
    else if (okm) gy = tc - tm;
    else gy = 0.0;
}

}  // namespace

Plane telea_inpaint(const Plane& v, const Mask& mask, const InpaintConfig& cfg,
                    InpaintTrace* trace) {
    cfg.validate();
    const int H = v.height(), W = v.width();
    if (mask.height != H || mask.width != W)
        fail(ErrorCategory::validation, "inpaint mask shape must match the plane");

    Mask m = mask;
    if (cfg.dilate_mask) {
        Mask d = mask;
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c)
                if (mask.at(r, c))
                    for (int dr = -1; dr <= 1; ++dr)
                        for (int dc = -1; dc <= 1; ++dc) {
                            const int rr = r + dr, cc = c + dc;
                            if (rr >= 0 && rr < H && cc >= 0 && cc < W) d.at(rr, cc) = 1;
                        }
        m = std::move(d);
    }

    const std::size_t npix = static_cast<std::size_t>(H) * W;
    std::size_t unknown = 0;
    for (auto b : m.data) unknown += b;
    if (unknown == npix)
        fail(ErrorCategory::degenerate_input,
             "inpaint mask covers the whole plane; no known boundary");
    Plane out = v;
    if (unknown == 0) return out;

    std::vector<double> T(npix, kInf);
    std::vector<PixState> state(npix, PixState::inside);
    for (std::size_t i = 0; i < npix; ++i)
        if (!m.data[i]) {
            state[i] = PixState::known;
            T[i] = 0.0;
        }

    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>> heap;
    auto push_band = [&](int r, int c) {
        const std::size_t i = static_cast<std::size_t>(r) * W + c;
        const double t = solve_eikonal(r, c, H, W, T, state);
        if (t < T[i]) {
            T[i] = t;
            heap.push({t, static_cast<int>(i)});
        }
        state[i] = PixState::band;
    };
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * W + c;
            if (state[i] != PixState::inside) continue;
            const bool adjacent_known =
                (r > 0 && state[i - W] == PixState::known) ||
                (r + 1 < H && state[i + W] == PixState::known) ||
                (c > 0 && state[i - 1] == PixState::known) ||
                (c + 1 < W && state[i + 1] == PixState::known);
            if (adjacent_known) push_band(r, c);
        }

    const int rad = cfg.radius;
    const double rad2 = static_cast<double>(rad) * rad;
    while (!heap.empty()) {
        const HeapItem item = heap.top();
        heap.pop();
        const std::size_t i = static_cast<std::size_t>(item.index);
        if (state[i] == PixState::known || item.dist != T[i]) continue;  // stale
        const int r = item.index / W, c = item.index % W;

        // Telea estimate from known pixels in the disc of radius `rad`
        double gx, gy;
        grad_T(r, c, H, W, T, state, gx, gy);
        const double gnorm = std::hypot(gx, gy);
        double wsum = 0.0, acc = 0.0, wsum_fallback = 0.0, acc_fallback = 0.0;
        for (int dr = -rad; dr <= rad; ++dr) {
            const int rr = r + dr;
            if (rr < 0 || rr >= H) continue;
            for (int dc = -rad; dc <= rad; ++dc) {
                const int cc = c + dc;
                if (cc < 0 || cc >= W || (dr == 0 && dc == 0)) continue;
                const double d2 = static_cast<double>(dr) * dr + static_cast<double>(dc) * dc;
                if (d2 > rad2) continue;
                const std::size_t j = static_cast<std::size_t>(rr) * W + cc;
                if (state[j] != PixState::known) continue;
                const double len = std::sqrt(d2);
                const double dst = 1.0 / d2;
                const double lev = 1.0 / (1.0 + std::fabs(T[j] - T[i]));
                double dir = 1.0;
                if (gnorm > 0.0)
                    dir = std::fabs((dc * gx + dr * gy) / (len * gnorm));
                const double w_fb = dst * lev;
                acc_fallback += w_fb * out.at(rr, cc);
                wsum_fallback += w_fb;
                const double w = dir * w_fb;
                acc += w * out.at(rr, cc);
                wsum += w;
            }
        }
        if (wsum > 0.0)
            out.at(r, c) = acc / wsum;
        else if (wsum_fallback > 0.0)
            out.at(r, c) = acc_fallback / wsum_fallback;
        // else: no known pixel in range; keep original value (isolated case)

        state[i] = PixState::known;
        if (trace) trace->steps.push_back({r, c, T[i]});

        // relax the 4-neighbours still unknown
        const int nr[4] = {r - 1, r + 1, r, r};
        const int nc[4] = {c, c, c - 1, c + 1};
        for (int k = 0; k < 4; ++k) {
            if (nr[k] < 0 || nr[k] >= H || nc[k] < 0 || nc[k] >= W) continue;
            const std::size_t j = static_cast<std::size_t>(nr[k]) * W + nc[k];
            if (state[j] == PixState::known) continue;
            const double t = solve_eikonal(nr[k], nc[k], H, W, T, state);
            if (t < T[j]) {
                T[j] = t;
                heap.push({t, static_cast<int>(j)});
            }
            state[j] = PixState::band;
        }
    }
    return out;
}

Plane synthesize_pseudo_normal(const Sample& s, const InpaintConfig& cfg) {
    if (s.label == 0 || !s.mask.any()) return s.image.value;
    Plane filled = telea_inpaint(s.image.value, s.mask, cfg);
    // compose (1-M).*V + M.*fill; outside-mask pixels stay bit-exact
    Plane out = s.image.value;
    const int H = out.height(), W = out.width();
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            if (s.mask.at(r, c)) out.at(r, c) = filled.at(r, c);
    return out;
}

}  // namespace wdt

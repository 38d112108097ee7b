#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace wdt::oracle {

namespace {

std::vector<double> alternating_flip(std::span<const double> h) {
    const std::size_t L = h.size();
    std::vector<double> g(L);
    for (std::size_t k = 0; k < L; ++k)
        g[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[L - 1 - k];
    return g;
}

// 1-D analysis: y[i] = sum_k f[k] x[(2i+k) mod n]
std::vector<double> conv_down(std::span<const double> x, std::span<const double> f) {
    const std::size_t n = x.size();
    std::vector<double> y(n / 2, 0.0);
    for (std::size_t i = 0; i < n / 2; ++i)
        for (std::size_t k = 0; k < f.size(); ++k)
            y[i] += f[k] * x[(2 * i + k) % n];
    return y;
}

}  // namespace

std::vector<Plane> dwt2_reference(const Plane& v, std::span<const double> lowpass) {
    const auto high = alternating_flip(lowpass);
    const int H = v.height(), W = v.width();
    const int h = H / 2, w = W / 2;
    // row pass
    Plane rl(H, w), rh(H, w);
    for (int r = 0; r < H; ++r) {
        std::vector<double> row(v.row(r), v.row(r) + W);
        const auto lo = conv_down(row, lowpass);
        const auto hi = conv_down(row, high);
        for (int c = 0; c < w; ++c) {
            rl.at(r, c) = lo[c];
            rh.at(r, c) = hi[c];
        }
    }
    // column pass
    std::vector<Plane> bands(4, Plane(h, w));
    for (int c = 0; c < w; ++c) {
        std::vector<double> cl(H), ch(H);
        for (int r = 0; r < H; ++r) {
            cl[r] = rl.at(r, c);
            ch[r] = rh.at(r, c);
        }
        const auto ll = conv_down(cl, lowpass);
        const auto lh = conv_down(cl, high);
        const auto hl = conv_down(ch, lowpass);
        const auto hh = conv_down(ch, high);
        for (int r = 0; r < h; ++r) {
            bands[0].at(r, c) = ll[r];
            bands[1].at(r, c) = lh[r];
            bands[2].at(r, c) = hl[r];
            bands[3].at(r, c) = hh[r];
        }
    }
    return bands;
}

namespace {

// 1-D synthesis: x[m] = sum_i ( lo[i] f_l[(m-2i) mod n] + hi[i] f_h[(m-2i) mod n] )
std::vector<double> up_conv(std::span<const double> lo, std::span<const double> hi,
                            std::span<const double> fl, std::span<const double> fh) {
    const std::size_t half = lo.size();
    const std::size_t n = 2 * half;
    std::vector<double> x(n, 0.0);
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t i = 0; i < half; ++i) {
            // every filter tap with (2i + k) == m (mod n); more than one wraps
            // when the filter is longer than the signal
            for (std::size_t k = (m + n - 2 * i % n) % n; k < fl.size(); k += n)
                x[m] += lo[i] * fl[k] + hi[i] * fh[k];
        }
    return x;
}

}  // namespace

Plane idwt2_reference(const std::vector<Plane>& bands,
                      std::span<const double> lowpass) {
    const auto high = alternating_flip(lowpass);
    const int h = bands[0].height(), w = bands[0].width();
    const int H = 2 * h, W = 2 * w;
    // undo columns
    Plane rl(H, w), rh(H, w);
    for (int c = 0; c < w; ++c) {
        std::vector<double> ll(h), lh(h), hl(h), hh(h);
        for (int r = 0; r < h; ++r) {
            ll[r] = bands[0].at(r, c);
            lh[r] = bands[1].at(r, c);
            hl[r] = bands[2].at(r, c);
            hh[r] = bands[3].at(r, c);
        }
        const auto colL = up_conv(ll, lh, lowpass, high);
        const auto colH = up_conv(hl, hh, lowpass, high);
        for (int r = 0; r < H; ++r) {
            rl.at(r, c) = colL[r];
            rh.at(r, c) = colH[r];
        }
    }
    // undo rows
    Plane out(H, W);
    for (int r = 0; r < H; ++r) {
        std::vector<double> lo(rl.row(r), rl.row(r) + w), hi(rh.row(r), rh.row(r) + w);
        const auto row = up_conv(lo, hi, lowpass, high);
        for (int c = 0; c < W; ++c) out.at(r, c) = row[c];
    }
    return out;
}

namespace {

int level_of(double v) {
    return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Plane global_hist_eq(const Plane& v) {
    std::vector<double> hist(256, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) hist[level_of(v.data()[i])] += 1.0;
    std::vector<double> map(256);
    double cum = 0.0;
    const double n = static_cast<double>(v.size());
    for (int l = 0; l < 256; ++l) {
        map[l] = (cum + 0.5 * hist[l]) / n;
        cum += hist[l];
    }
    Plane out(v.height(), v.width());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.data()[i] = map[level_of(v.data()[i])];
    return out;
}

std::vector<double> clahe_tile_map_reference(const Plane& v, int r0, int r1, int c0,
                                             int c1, double clip_limit) {
    std::vector<double> hist(256, 0.0);
    const double npix = static_cast<double>(r1 - r0) * (c1 - c0);
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) hist[level_of(v.at(r, c))] += 1.0;
    if (clip_limit > 0) {
        const double clip = clip_limit * npix / 256.0;
        double excess = 0.0;
        for (int l = 0; l < 256; ++l)
            if (hist[l] > clip) {
                excess += hist[l] - clip;
                hist[l] = clip;
            }
        for (int l = 0; l < 256; ++l) hist[l] += excess / 256.0;
    }
    std::vector<double> map(256);
    double cum = 0.0;
    for (int l = 0; l < 256; ++l) {
        map[l] = (cum + 0.5 * hist[l]) / npix;
        cum += hist[l];
    }
    return map;
}

Plane bilinear_reference(const Plane& src, int out_h, int out_w) {
    const int H = src.height(), W = src.width();
    Plane out(out_h, out_w);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const double sy = static_cast<double>(y) * (H - 1) / (out_h - 1);
            const double sx = static_cast<double>(x) * (W - 1) / (out_w - 1);
            const int y0 = std::min(static_cast<int>(sy), H - 2);
            const int x0 = std::min(static_cast<int>(sx), W - 2);
            const double fy = sy - y0, fx = sx - x0;
            out.at(y, x) = (1 - fy) * (1 - fx) * src.at(y0, x0) +
                           (1 - fy) * fx * src.at(y0, x0 + 1) +
                           fy * (1 - fx) * src.at(y0 + 1, x0) +
                           fy * fx * src.at(y0 + 1, x0 + 1);
        }
    return out;
}

void rgb_to_hsv_reference(double r, double g, double b, double& h, double& s,
                          double& v) {
    v = std::max(r, std::max(g, b));
    const double mn = std::min(r, std::min(g, b));
    const double c = v - mn;
    s = v > 0 ? c / v : 0.0;
    if (c <= 0) {
        h = 0.0;
        return;
    }
    if (v == r)
        h = (g - b) / c;
    else if (v == g)
        h = 2.0 + (b - r) / c;
    else
        h = 4.0 + (r - g) / c;
    h /= 6.0;
    if (h < 0) h += 1.0;
}

Plane harmonic_fill(const Plane& v, const Mask& mask, int max_iters, double tol) {
    const int H = v.height(), W = v.width();
    Plane cur = v;
    double known_mean = 0.0;
    std::size_t known = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (!mask.at(y, x)) {
                known_mean += v.at(y, x);
                ++known;
            }
    known_mean /= static_cast<double>(known);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (mask.at(y, x)) cur.at(y, x) = known_mean;

    for (int it = 0; it < max_iters; ++it) {
        double delta = 0.0;
        Plane next = cur;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (!mask.at(y, x)) continue;
                double acc = 0.0;
                int cnt = 0;
                const int ny[4] = {y - 1, y + 1, y, y};
                const int nx[4] = {x, x, x - 1, x + 1};
                for (int k = 0; k < 4; ++k)
                    if (ny[k] >= 0 && ny[k] < H && nx[k] >= 0 && nx[k] < W) {
                        acc += cur.at(ny[k], nx[k]);
                        ++cnt;
                    }
                next.at(y, x) = acc / cnt;
                delta = std::max(delta, std::fabs(next.at(y, x) - cur.at(y, x)));
            }
        cur = std::move(next);
        if (delta < tol) break;
    }
    return cur;
}

double pairwise_auc(std::span<const double> scores, std::span<const int> labels) {
    double num = 0.0;
    std::size_t npos = 0, nneg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        ++npos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j]) num += 1.0;
            else if (scores[i] == scores[j]) num += 0.5;
        }
    }
    for (int l : labels) nneg += l == 0;
    return num / (static_cast<double>(npos) * static_cast<double>(nneg));
}

double variance_two_pass(std::span<const double> xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / static_cast<double>(xs.size());
}

std::vector<long double> alpha_bar_longdouble(std::span<const double> betas) {
    std::vector<long double> out(betas.size());
    long double prod = 1.0L;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        prod *= (1.0L - static_cast<long double>(betas[i]));
        out[i] = prod;
    }
    return out;
}

}  // namespace wdt::oracle

#include "wdt/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wdt {
namespace {

void check_same_shape(const Plane& a, const Plane& b, const char* what) {
    if (!a.same_shape(b)) fail(ErrorCategory::shape, what);
}

int quantize255(double v) {
    const long q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<int>(q);
}

}  // namespace

HsvImage decompose_hsv(const RgbImage& rgb) {
    check_same_shape(rgb.r, rgb.g, "rgb planes must share one shape");
    check_same_shape(rgb.r, rgb.b, "rgb planes must share one shape");
    const int H = rgb.height(), W = rgb.width();
    HsvImage out{Plane(H, W), Plane(H, W), Plane(H, W), rgb.source_id};
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double r = rgb.r.at(y, x), g = rgb.g.at(y, x), b = rgb.b.at(y, x);
            const double v = std::max({r, g, b});
            const double mn = std::min({r, g, b});
            const double c = v - mn;
            double h = 0.0;
            if (c > 0.0) {
                if (v == r)
                    h = std::fmod((g - b) / c, 6.0);
                else if (v == g)
                    h = (b - r) / c + 2.0;
                else
                    h = (r - g) / c + 4.0;
                h /= 6.0;
                if (h < 0.0) h += 1.0;
            }
            out.hue.at(y, x) = h;
            out.saturation.at(y, x) = v > 0.0 ? c / v : 0.0;
            out.value.at(y, x) = v;
        }
    }
    return out;
}

RgbImage recompose_hsv(const HsvImage& hsv) {
    check_same_shape(hsv.hue, hsv.saturation, "hsv planes must share one shape");
    check_same_shape(hsv.hue, hsv.value, "hsv planes must share one shape");
    const int H = hsv.height(), W = hsv.width();
    RgbImage out{Plane(H, W), Plane(H, W), Plane(H, W), hsv.source_id};
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double h6 = hsv.hue.at(y, x) * 6.0;
            const double s = hsv.saturation.at(y, x);
            const double v = hsv.value.at(y, x);
            const double c = v * s;
            const double xval = c * (1.0 - std::fabs(std::fmod(h6, 2.0) - 1.0));
            const double m = v - c;
            double r = 0, g = 0, b = 0;
            switch (static_cast<int>(h6) % 6) {
                case 0: r = c; g = xval; break;
                case 1: r = xval; g = c; break;
                case 2: g = c; b = xval; break;
                case 3: g = xval; b = c; break;
                case 4: r = xval; b = c; break;
                default: r = c; b = xval; break;
            }
            out.r.at(y, x) = r + m;
            out.g.at(y, x) = g + m;
            out.b.at(y, x) = b + m;
        }
    }
    return out;
}

namespace {

constexpr int kBins = 256;

// Histogram of one tile, clipped and redistributed, then turned into a
// midpoint-CDF mapping table in [0,1].
std::vector<double> tile_map(const Plane& v, int r0, int r1, int c0, int c1,
                             double clip_limit) {
    std::vector<double> hist(kBins, 0.0);
    const double npix = static_cast<double>(r1 - r0) * (c1 - c0);
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) hist[quantize255(v.at(r, c))] += 1.0;

    if (clip_limit > 0.0) {
        const double clip = clip_limit * npix / kBins;
        double excess = 0.0;
        for (auto& hb : hist) {
            if (hb > clip) {
                excess += hb - clip;
                hb = clip;
            }
        }
        const double add = excess / kBins;  // one uniform pass, no re-clip
        for (auto& hb : hist) hb += add;
    }

    std::vector<double> map(kBins);
    double cum = 0.0;
    for (int i = 0; i < kBins; ++i) {
        map[i] = (cum + 0.5 * hist[i]) / npix;
        cum += hist[i];
    }
    return map;
}

}  // namespace

std::vector<std::vector<double>> clahe_tile_maps(const Plane& value, int tiles_x,
                                                 int tiles_y, double clip_limit) {
    const int H = value.height(), W = value.width();
    if (tiles_x < 1 || tiles_y < 1)
        fail(ErrorCategory::config, "clahe tile grid must be >= 1x1");
    if (tiles_x > W || tiles_y > H)
        fail(ErrorCategory::config, "clahe tile grid larger than image");
    std::vector<std::vector<double>> maps;
    maps.reserve(static_cast<std::size_t>(tiles_x) * tiles_y);
    for (int ty = 0; ty < tiles_y; ++ty) {
        const int r0 = static_cast<int>(static_cast<long long>(ty) * H / tiles_y);
        const int r1 = static_cast<int>(static_cast<long long>(ty + 1) * H / tiles_y);
        for (int tx = 0; tx < tiles_x; ++tx) {
            const int c0 = static_cast<int>(static_cast<long long>(tx) * W / tiles_x);
            const int c1 = static_cast<int>(static_cast<long long>(tx + 1) * W / tiles_x);
            maps.push_back(tile_map(value, r0, r1, c0, c1, clip_limit));
        }
    }
    return maps;
}

Plane clahe(const Plane& value, int tiles_x, int tiles_y, double clip_limit) {
    const int H = value.height(), W = value.width();
    const auto maps = clahe_tile_maps(value, tiles_x, tiles_y, clip_limit);

    // tile centers under the uniform fractional partition
    const double tile_h = static_cast<double>(H) / tiles_y;
    const double tile_w = static_cast<double>(W) / tiles_x;

    Plane out(H, W);
    for (int y = 0; y < H; ++y) {
        const double gy = (y + 0.5) / tile_h - 0.5;
        int ty0 = static_cast<int>(std::floor(gy));
        double fy = gy - ty0;
        if (ty0 < 0) { ty0 = 0; fy = 0.0; }
        if (ty0 >= tiles_y - 1) { ty0 = tiles_y - 1; fy = 0.0; }
        const int ty1 = std::min(ty0 + 1, tiles_y - 1);
        for (int x = 0; x < W; ++x) {
            const double gx = (x + 0.5) / tile_w - 0.5;
            int tx0 = static_cast<int>(std::floor(gx));
            double fx = gx - tx0;
            if (tx0 < 0) { tx0 = 0; fx = 0.0; }
            if (tx0 >= tiles_x - 1) { tx0 = tiles_x - 1; fx = 0.0; }
            const int tx1 = std::min(tx0 + 1, tiles_x - 1);

            const int level = quantize255(value.at(y, x));
            const double m00 = maps[static_cast<std::size_t>(ty0) * tiles_x + tx0][level];
            const double m01 = maps[static_cast<std::size_t>(ty0) * tiles_x + tx1][level];
            const double m10 = maps[static_cast<std::size_t>(ty1) * tiles_x + tx0][level];
            const double m11 = maps[static_cast<std::size_t>(ty1) * tiles_x + tx1][level];
            out.at(y, x) = (1 - fy) * ((1 - fx) * m00 + fx * m01) +
                           fy * ((1 - fx) * m10 + fx * m11);
        }
    }
    return out;
}

Plane resize_bilinear(const Plane& src, int out_h, int out_w) {
    if (out_h < 2 || out_w < 2 || out_h % 2 != 0 || out_w % 2 != 0)
        fail(ErrorCategory::config, "resize target dims must be even and >= 2");
    const int H = src.height(), W = src.width();
    if (H == out_h && W == out_w) return src;

    const double sy = out_h > 1 ? static_cast<double>(H - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(W - 1) / (out_w - 1) : 0.0;

    // horizontal pass
    Plane tmp(H, out_w);
    std::vector<int> x0(out_w);
    std::vector<double> fx(out_w);
    for (int x = 0; x < out_w; ++x) {
        const double s = x * sx;
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, 0, std::max(W - 2, 0));
        x0[x] = i;
        fx[x] = W > 1 ? std::clamp(s - i, 0.0, 1.0) : 0.0;
    }
    for (int y = 0; y < H; ++y) {
        const double* r = src.row(y);
        double* t = tmp.row(y);
        for (int x = 0; x < out_w; ++x) {
            const int i = x0[x];
            t[x] = fx[x] > 0.0 ? (1.0 - fx[x]) * r[i] + fx[x] * r[i + 1] : r[i];
        }
    }
    // vertical pass
    Plane out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        const double s = y * sy;
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, 0, std::max(H - 2, 0));
        const double f = H > 1 ? std::clamp(s - i, 0.0, 1.0) : 0.0;
        const double* ra = tmp.row(i);
        const double* rb = tmp.row(std::min(i + 1, H - 1));
        double* o = out.row(y);
        for (int x = 0; x < out_w; ++x) o[x] = (1.0 - f) * ra[x] + f * rb[x];
    }
    return out;
}

Mask resize_mask_nearest(const Mask& src, int out_h, int out_w) {
    if (out_h < 2 || out_w < 2 || out_h % 2 != 0 || out_w % 2 != 0)
        fail(ErrorCategory::config, "resize target dims must be even and >= 2");
    if (src.height == out_h && src.width == out_w) return src;
    const double sy = out_h > 1 ? static_cast<double>(src.height - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(src.width - 1) / (out_w - 1) : 0.0;
    Mask out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        const int iy = std::clamp(static_cast<int>(std::lround(y * sy)), 0, src.height - 1);
        for (int x = 0; x < out_w; ++x) {
            const int ix = std::clamp(static_cast<int>(std::lround(x * sx)), 0, src.width - 1);
            out.at(y, x) = src.at(iy, ix) ? 1 : 0;
        }
    }
    return out;
}

}  // namespace wdt

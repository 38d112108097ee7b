#include "wdt/wavelet.hpp"

#include <cstddef>

namespace wdt {
namespace {

// Orthonormal Daubechies analysis lowpass taps (sum = sqrt(2), unit energy).
const std::vector<std::vector<double>> kDaubechies = {
    // db1
    {0.70710678118654752, 0.70710678118654752},
    // db2
    {-0.12940952255126038, 0.22414386804201338, 0.83651630373780791,
     0.48296291314453414},
    // db3
    {0.035226291885709537, -0.085441273882026662, -0.13501102001025459,
     0.45987750211849157, 0.80689150931109258, 0.33267055295008262},
    // db4
    {-0.010597401785069032, 0.032883011666885200, 0.030841381835560764,
     -0.18703481171909308, -0.027983769416859854, 0.63088076792985891,
     0.71484657055291565, 0.23037781330889650},
    // db5
    {0.0033357252854737713, -0.012580751999081999, -0.0062414902127982743,
     0.077571493840045714, -0.032244869584638375, -0.24229488706638203,
     0.13842814590132073, 0.72430852843777293, 0.60382926979718967,
     0.16010239797419291},
    // db6
    {-0.0010773010853084796, 0.0047772575109455106, 0.00055384220116149614,
     -0.031582039317486030, 0.027522865530305729, 0.097501605587323049,
     -0.12976686756726194, -0.22626469396543982, 0.31525035170919763,
     0.75113390802109535, 0.49462389039845309, 0.11154074335010946},
    // db7
    {0.00035371379997452025, -0.0018016407040474909, 0.00042957797292136652,
     0.012550998556099841, -0.016574541630666881, -0.038029936935014414,
     0.080612609151083072, 0.071309219266830265, -0.22403618499387498,
     -0.14390600392856498, 0.46978228740519312, 0.72913209084623512,
     0.39653931948191731, 0.077852054085009179},
    // db8
    {-0.00011747678412476953, 0.00067544940645056937, -0.00039174037337694705,
     -0.0048703529934515743, 0.0087460940474057767, 0.013981027917398282,
     -0.044088253930794752, -0.017369301001807546, 0.12874742662047846,
     0.00047248457391328277, -0.28401554296154693, -0.015829105256349306,
     0.58535468365420671, 0.67563073629728981, 0.31287159091429997,
     0.054415842243104010},
};

std::vector<WaveletFilter> build_filters() {
    std::vector<WaveletFilter> fs;
    for (std::size_t n = 0; n < kDaubechies.size(); ++n) {
        WaveletFilter f;
        f.id = "db" + std::to_string(n + 1);
        f.lowpass = kDaubechies[n];
        const std::size_t L = f.lowpass.size();
        f.highpass.resize(L);
        // alternating flip: g[k] = (-1)^k h[L-1-k]
        for (std::size_t k = 0; k < L; ++k)
            f.highpass[k] = (k % 2 == 0 ? 1.0 : -1.0) * f.lowpass[L - 1 - k];
        fs.push_back(std::move(f));
    }
    return fs;
}

void check_even(int n, const char* what) {
    if (n < 2 || n % 2 != 0)
        fail(ErrorCategory::dimension,
             std::string(what) + " must be even and >= 2, got " + std::to_string(n));
}

}  // namespace

const WaveletFilter& wavelet_filter(const std::string& basis_id) {
    static const std::vector<WaveletFilter> filters = build_filters();
    for (const auto& f : filters)
        if (f.id == basis_id) return f;
    fail(ErrorCategory::config, "unsupported wavelet basis '" + basis_id +
                                    "' (supported: db1..db8)");
}

void dwt1d(std::span<const double> x, const WaveletFilter& f, double* out_low,
           double* out_high) {
    const std::size_t n = x.size();
    const std::size_t L = f.lowpass.size();
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double lo = 0.0, hi = 0.0;
        std::size_t idx = 2 * i;
        for (std::size_t k = 0; k < L; ++k) {
            const double xv = x[idx];
            lo += f.lowpass[k] * xv;
            hi += f.highpass[k] * xv;
            if (++idx == n) idx = 0;
        }
        out_low[i] = lo;
        out_high[i] = hi;
    }
}

void idwt1d(std::span<const double> low, std::span<const double> high,
            const WaveletFilter& f, double* out) {
    const std::size_t half = low.size();
    const std::size_t n = 2 * half;
    const std::size_t L = f.lowpass.size();
    for (std::size_t m = 0; m < n; ++m) out[m] = 0.0;
    // transpose of the analysis: scatter each coefficient pair back
    for (std::size_t i = 0; i < half; ++i) {
        std::size_t idx = 2 * i;
        const double lo = low[i], hi = high[i];
        for (std::size_t k = 0; k < L; ++k) {
            out[idx] += f.lowpass[k] * lo + f.highpass[k] * hi;
            if (++idx == n) idx = 0;
        }
    }
}

SubbandStack dwt_forward(const Plane& v, const std::string& basis_id) {
    const WaveletFilter& f = wavelet_filter(basis_id);
    const int H = v.height(), W = v.width();
    check_even(H, "plane height");
    check_even(W, "plane width");
    const int h = H / 2, w = W / 2;

    // rows first: each row of length W -> [low | high]
    Plane rlo(H, w), rhi(H, w);
    for (int r = 0; r < H; ++r)
        dwt1d({v.row(r), static_cast<std::size_t>(W)}, f, rlo.row(r), rhi.row(r));

    // columns of each half
    SubbandStack s(h, w, basis_id);
    std::vector<double> col(H), clo(h), chi(h);
    auto col_pass = [&](const Plane& src, std::span<double> top,
                        std::span<double> bot) {
        for (int c = 0; c < w; ++c) {
            for (int r = 0; r < H; ++r) col[r] = src.at(r, c);
            dwt1d(col, f, clo.data(), chi.data());
            for (int r = 0; r < h; ++r) {
                top[static_cast<std::size_t>(r) * w + c] = clo[r];
                bot[static_cast<std::size_t>(r) * w + c] = chi[r];
            }
        }
    };
    col_pass(rlo, s.channel(0), s.channel(1));  // LL, LH
    col_pass(rhi, s.channel(2), s.channel(3));  // HL, HH
    return s;
}

Plane idwt_inverse(const SubbandStack& s) {
    if (s.h <= 0 || s.w <= 0 || s.data.size() != 4 * s.channel_size())
        fail(ErrorCategory::shape, "sub-band stack must hold 4 equal channels");
    const WaveletFilter& f = wavelet_filter(s.basis_id);
    const int h = s.h, w = s.w;
    const int H = 2 * h, W = 2 * w;

    // undo the column pass, rebuilding the row-transform halves
    Plane rlo(H, w), rhi(H, w);
    std::vector<double> clo(h), chi(h), col(H);
    auto col_unpass = [&](std::span<const double> top, std::span<const double> bot,
                          Plane& dst) {
        for (int c = 0; c < w; ++c) {
            for (int r = 0; r < h; ++r) {
                clo[r] = top[static_cast<std::size_t>(r) * w + c];
                chi[r] = bot[static_cast<std::size_t>(r) * w + c];
            }
            idwt1d(clo, chi, f, col.data());
            for (int r = 0; r < H; ++r) dst.at(r, c) = col[r];
        }
    };
    col_unpass(s.channel(0), s.channel(1), rlo);
    col_unpass(s.channel(2), s.channel(3), rhi);

    // undo the row pass
    Plane out(H, W);
    for (int r = 0; r < H; ++r)
        idwt1d({rlo.row(r), static_cast<std::size_t>(w)},
               {rhi.row(r), static_cast<std::size_t>(w)}, f, out.row(r));
    return out;
}

std::array<std::span<const double>, 4> split_stack(const SubbandStack& s) {
    if (s.data.size() != 4 * s.channel_size())
        fail(ErrorCategory::shape, "sub-band stack must hold 4 equal channels");
    return {s.channel(0), s.channel(1), s.channel(2), s.channel(3)};
}

SubbandStack concat_stack(const Plane& ll, const Plane& lh, const Plane& hl,
                          const Plane& hh, const std::string& basis_id) {
    if (!ll.same_shape(lh) || !ll.same_shape(hl) || !ll.same_shape(hh))
        fail(ErrorCategory::shape, "sub-band channels must share one shape");
    SubbandStack s(ll.height(), ll.width(), basis_id);
    const Plane* src[4] = {&ll, &lh, &hl, &hh};
    for (int c = 0; c < 4; ++c) {
        auto dst = s.channel(c);
        const double* p = src[c]->data();
        for (std::size_t i = 0; i < s.channel_size(); ++i) dst[i] = p[i];
    }
    return s;
}

}  // namespace wdt

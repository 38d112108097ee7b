#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace wdt {

// Deterministic RNG with self-contained distributions. std:: distribution
// objects are implementation-defined, so uniform/normal draws are derived
// from the raw mt19937_64 stream directly; streams reproduce bit-exactly for
// a given seed on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform integer in [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller, one cached value
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    void fill_normal(double* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = normal();
    }

    // Independent child stream for parallel work items; deterministic in
    // (constructor seed, index), unaffected by draws made on the parent.
    Rng child(std::uint64_t index) const {
        return Rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    // Engine state for checkpointing (textual, bit-exact round trip).
    std::string save_state() const;
    void load_state(const std::string& s);

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace wdt

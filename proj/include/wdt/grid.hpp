#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wdt/error.hpp"

namespace wdt {

// Row-major 2-D grid of doubles. The workhorse value type for image planes
// and wavelet sub-bands.
class Plane {
  public:
    Plane() = default;
    Plane(int height, int width, double fill = 0.0)
        : h_(height), w_(width), data_(static_cast<std::size_t>(height) * width, fill) {
        if (height <= 0 || width <= 0)
            fail(ErrorCategory::dimension, "plane dimensions must be positive");
    }

    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * w_ + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * w_ + c]; }

    double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * w_; }
    const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * w_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Plane& o) const { return h_ == o.h_ && w_ == o.w_; }

    bool operator==(const Plane& o) const = default;

  private:
    int h_ = 0;
    int w_ = 0;
    std::vector<double> data_;
};

// Binary mask, 1 = lesion pixel.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data) n += v;
        return n;
    }
    bool any() const { return count() > 0; }
    bool operator==(const Mask& o) const = default;
};

// Four equally shaped sub-band channels stored contiguously as [LL, LH, HL, HH].
// LL carries the coarse approximation; LH/HL/HH the detail bands.
struct SubbandStack {
    int h = 0;  // per-channel height
    int w = 0;  // per-channel width
    std::string basis_id;
    std::vector<double> data;  // 4 * h * w

    SubbandStack() = default;
    SubbandStack(int h_, int w_, std::string basis)
        : h(h_), w(w_), basis_id(std::move(basis)),
          data(static_cast<std::size_t>(4) * h_ * w_, 0.0) {}

    std::size_t channel_size() const { return static_cast<std::size_t>(h) * w; }
    std::size_t size() const { return data.size(); }

    std::span<double> channel(int i) {
        return {data.data() + i * channel_size(), channel_size()};
    }
    std::span<const double> channel(int i) const {
        return {data.data() + i * channel_size(), channel_size()};
    }

    bool same_shape(const SubbandStack& o) const { return h == o.h && w == o.w; }
};

}  // namespace wdt

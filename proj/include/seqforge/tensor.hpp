#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "seqforge/error.hpp"

namespace seqforge {
namespace nn {

// Dense float32 array in NCHW layout. All network math runs on this type;
// checkpoints store the raw little-endian payload.
class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int c, int h, int w, float fill = 0.f)
        : shape_{n, c, h, w}, data_(size_t(n) * c * h * w, fill) {
        if (n < 1 || c < 1 || h < 1 || w < 1) throw Error("Tensor: invalid shape");
    }

    static Tensor zeros_like(const Tensor& o) {
        return Tensor(o.n(), o.c(), o.h(), o.w(), 0.f);
    }

    int n() const { return shape_[0]; }
    int c() const { return shape_[1]; }
    int h() const { return shape_[2]; }
    int w() const { return shape_[3]; }
    const std::array<int, 4>& shape() const { return shape_; }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    size_t numel() const { return data_.size(); }
    bool defined() const { return !data_.empty(); }

    float& operator()(int n, int c, int y, int x) {
        return data_[((size_t(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }
    float operator()(int n, int c, int y, int x) const {
        return data_[((size_t(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }
    float& operator[](size_t i) { return data_[i]; }
    float operator[](size_t i) const { return data_[i]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    // Per-sample plane view: channels x (h*w) starting at sample n.
    float* sample(int n) { return data_.data() + size_t(n) * shape_[1] * shape_[2] * shape_[3]; }
    const float* sample(int n) const {
        return data_.data() + size_t(n) * shape_[1] * shape_[2] * shape_[3];
    }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(0.f); }

    std::string shape_str() const {
        return std::to_string(shape_[0]) + "x" + std::to_string(shape_[1]) + "x" +
               std::to_string(shape_[2]) + "x" + std::to_string(shape_[3]);
    }

private:
    std::array<int, 4> shape_{0, 0, 0, 0};
    std::vector<float> data_;
};

// Channel concatenation along dim 1 and its adjoint.
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& g, int c_a, Tensor& ga, Tensor& gb);

}  // namespace nn
}  // namespace seqforge

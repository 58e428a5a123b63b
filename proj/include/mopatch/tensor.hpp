#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mopatch/common.hpp"

namespace mopatch {

// Dense f32 tensor, row-major.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) { data.assign(size_t(numel(shape)), 0.0f); }
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != size_t(numel(shape))) fail("tensor: data length does not match shape");
    }

    static int64_t numel(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d <= 0) fail("tensor: nonpositive dimension");
            n *= d;
        }
        return n;
    }

    int64_t size() const { return int64_t(data.size()); }
    int rank() const { return int(shape.size()); }
    int dim(int i) const { return shape[size_t(i)]; }
    // rows/cols treating the last axis as columns
    int64_t rows() const { return size() / cols(); }
    int64_t cols() const { return shape.empty() ? 1 : shape.back(); }

    void fill(float v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

}  // namespace mopatch

// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mpnas {

// Dense row-major float32 tensor. All model math in this project is float32;
// shapes are NHWC for images and [N, C] for flattened features.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float v);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    float& operator[](size_t i) { return data_[i]; }
    float operator[](size_t i) const { return data_[i]; }

    void fill(float v);
    void zero() { fill(0.f); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    // Throws NumericsError naming `what` if any element is NaN/Inf.
    void check_finite(const std::string& what) const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

size_t shape_product(const std::vector<int>& shape);

}  // namespace mpnas

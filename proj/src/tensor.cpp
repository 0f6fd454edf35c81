// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/tensor.hpp"

#include <cmath>
#include <sstream>

#include "mpnas/errors.hpp"

namespace mpnas {

size_t shape_product(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        require<ShapeError>(d > 0, "tensor dimensions must be positive");
        n *= static_cast<size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(shape_product(shape_), 0.f);
}

Tensor Tensor::full(std::vector<int> shape, float v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

void Tensor::fill(float v) {
    for (auto& x : data_) x = v;
}

bool Tensor::all_finite() const {
    for (float x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void Tensor::check_finite(const std::string& what) const {
    if (!all_finite()) {
        throw NumericsError("non-finite value in " + what);
    }
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ",";
        os << shape_[i];
    }
    os << "]";
    return os.str();
}

}  // namespace mpnas

// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mpnas {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid search-space spec, config, or path.
class SpecError : public Error {
public:
    using Error::Error;
};

// Tensor shape / dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

// NaN/Inf encountered in a forward or backward pass.
class NumericsError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

template <class E = Error>
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw E(msg);
}

}  // namespace mpnas

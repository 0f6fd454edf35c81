// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mpnas/tensor.hpp"

namespace mpnas {

// A named trainable tensor with its gradient buffer. Layers hold shared
// pointers so that graphs instantiated from the super-network alias the
// same underlying storage.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter(std::string n, std::vector<int> shape)
        : name(std::move(n)), value(shape), grad(std::move(shape)) {}
};

using ParamPtr = std::shared_ptr<Parameter>;

// Fan-in scaled uniform init: U(-sqrt(3/fan_in), +sqrt(3/fan_in)), seeded
// per parameter name so initialization is independent of allocation order.
void init_fan_in_uniform(Parameter& p, int fan_in, uint64_t seed);

// Runtime multiply-accumulate counter. Layers report the trip count of their
// inner MAC loops when a CountingScope is active; used as the independent
// oracle against the analytic FLOPS formulas.
namespace macs {

extern thread_local bool g_enabled;
extern thread_local unsigned long long g_count;

inline void add(unsigned long long n) {
    if (g_enabled) g_count += n;
}

class CountingScope {
public:
    CountingScope() : prev_enabled_(g_enabled), prev_count_(g_count) {
        g_enabled = true;
        g_count = 0;
    }
    ~CountingScope() {
        g_enabled = prev_enabled_;
        g_count = prev_count_;
    }
    unsigned long long value() const { return g_count; }

private:
    bool prev_enabled_;
    unsigned long long prev_count_;
};

}  // namespace macs

// Element-level activity mask per parameter: 1 where the layer reads the
// element in forward(). Prefix-sliced layers mark only their active slice.
using ActiveMask = std::unordered_map<const Parameter*, std::vector<uint8_t>>;

class Layer {
public:
    virtual ~Layer() = default;

    // Caches whatever backward() needs.
    virtual Tensor forward(const Tensor& in) = 0;
    // Accumulates into parameter gradient buffers and returns the input grad.
    virtual Tensor backward(const Tensor& grad_out) = 0;

    virtual void collect_params(std::vector<ParamPtr>& out) const { (void)out; }
    virtual void mark_active(ActiveMask& mask) const { (void)mask; }
    virtual std::string name() const = 0;
};

// 1x1 convolution over NHWC, stride 1. Weight [out_max, in_max] used as the
// leading [out_c, in_c] slice.
class PointwiseConv : public Layer {
public:
    PointwiseConv(ParamPtr w, ParamPtr b, int in_c, int out_c);
    Tensor forward(const Tensor& in) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamPtr>& out) const override;
    void mark_active(ActiveMask& mask) const override;
    std::string name() const override { return "pointwise_conv"; }

private:
    ParamPtr w_, b_;
    int in_c_, out_c_;
    Tensor cached_in_;
};

// Depthwise k x k convolution, "same" zero padding, stride 1 or 2.
// Weight [c_max, k, k] used as the leading [c, k, k] slice.
class DepthwiseConv : public Layer {
public:
    DepthwiseConv(ParamPtr w, ParamPtr b, int channels, int kernel, int stride);
    Tensor forward(const Tensor& in) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamPtr>& out) const override;
    void mark_active(ActiveMask& mask) const override;
    std::string name() const override { return "depthwise_conv"; }

private:
    ParamPtr w_, b_;
    int c_, k_, stride_;
    Tensor cached_in_;
};

// Squeeze-and-Excite: global pool -> dense c->mid + relu -> dense mid->c +
// hard-sigmoid gate, output = input * gate (per channel).
class SqueezeExcite : public Layer {
public:
    SqueezeExcite(ParamPtr w1, ParamPtr b1, ParamPtr w2, ParamPtr b2, int channels, int mid);
    Tensor forward(const Tensor& in) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamPtr>& out) const override;
    void mark_active(ActiveMask& mask) const override;
    std::string name() const override { return "squeeze_excite"; }

private:
    ParamPtr w1_, b1_, w2_, b2_;
    int c_, mid_;
    Tensor cached_in_, pooled_, a1_, z1_, a2_, gate_;
};

class HardSwish : public Layer {
public:
    Tensor forward(const Tensor& in) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "hard_swish"; }

private:
    Tensor cached_in_;
};

class Relu : public Layer {
public:
    Tensor forward(const Tensor& in) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "relu"; }

private:
    Tensor cached_in_;
};

// [N,H,W,C] -> [N,C] spatial mean.
class GlobalAveragePool : public Layer {
public:
    Tensor forward(const Tensor& in) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "global_average_pool"; }

private:
    std::vector<int> cached_shape_;
};

// Fully connected [N, in] -> [N, out]. Weight [out_max, in_max] sliced.
class Dense : public Layer {
public:
    Dense(ParamPtr w, ParamPtr b, int in_c, int out_c);
    Tensor forward(const Tensor& in) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamPtr>& out) const override;
    void mark_active(ActiveMask& mask) const override;
    std::string name() const override { return "dense"; }

private:
    ParamPtr w_, b_;
    int in_c_, out_c_;
    Tensor cached_in_;
};

// y = x + body(x). Requires body to preserve shape.
class Residual : public Layer {
public:
    explicit Residual(std::vector<std::unique_ptr<Layer>> body) : body_(std::move(body)) {}
    Tensor forward(const Tensor& in) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamPtr>& out) const override;
    void mark_active(ActiveMask& mask) const override;
    std::string name() const override { return "residual"; }

private:
    std::vector<std::unique_ptr<Layer>> body_;
};

}  // namespace mpnas

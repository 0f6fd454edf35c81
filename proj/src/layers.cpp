// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/layers.hpp"

#include <algorithm>
#include <cmath>

#include "mpnas/errors.hpp"
#include "mpnas/rng.hpp"

namespace mpnas {

namespace macs {
thread_local bool g_enabled = false;
thread_local unsigned long long g_count = 0;
}  // namespace macs

void init_fan_in_uniform(Parameter& p, int fan_in, uint64_t seed) {
    require(fan_in > 0, "init: fan_in must be positive");
    Rng rng(Rng::derive(seed, p.name));
    const float limit = std::sqrt(3.f / static_cast<float>(fan_in));
    for (size_t i = 0; i < p.value.size(); ++i) {
        p.value[i] = rng.uniform(-limit, limit);
    }
}

namespace {

void mark_range(ActiveMask& mask, const ParamPtr& p, size_t begin, size_t end) {
    auto& m = mask[p.get()];
    if (m.size() != p->value.size()) m.assign(p->value.size(), 0);
    for (size_t i = begin; i < end && i < m.size(); ++i) m[i] = 1;
}

// Marks the leading [rows, cols] slice of a [rows_max, cols_max] matrix.
void mark_matrix(ActiveMask& mask, const ParamPtr& p, int rows, int cols, int cols_max) {
    auto& m = mask[p.get()];
    if (m.size() != p->value.size()) m.assign(p->value.size(), 0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            m[static_cast<size_t>(r) * cols_max + c] = 1;
        }
    }
}

float hard_sigmoid(float x) { return std::clamp(x + 3.f, 0.f, 6.f) / 6.f; }
float hard_sigmoid_grad(float x) { return (x > -3.f && x < 3.f) ? (1.f / 6.f) : 0.f; }

}  // namespace

// ------------------------------ PointwiseConv -------------------------------

PointwiseConv::PointwiseConv(ParamPtr w, ParamPtr b, int in_c, int out_c)
    : w_(std::move(w)), b_(std::move(b)), in_c_(in_c), out_c_(out_c) {
    require<SpecError>(in_c_ > 0 && out_c_ > 0, "pointwise_conv: channel counts must be positive");
    require<SpecError>(w_->value.rank() == 2, "pointwise_conv: weight must be 2-D");
    require<SpecError>(w_->value.dim(0) >= out_c_ && w_->value.dim(1) >= in_c_,
                       "pointwise_conv: active slice exceeds weight tensor");
}

Tensor PointwiseConv::forward(const Tensor& in) {
    require<ShapeError>(in.rank() == 4 && in.dim(3) == in_c_,
                        "pointwise_conv: expected NHWC input with " + std::to_string(in_c_) +
                            " channels, got " + in.shape_str());
    cached_in_ = in;
    const int n_pix = in.dim(0) * in.dim(1) * in.dim(2);
    const int in_max = w_->value.dim(1);
    Tensor out({in.dim(0), in.dim(1), in.dim(2), out_c_});
    const float* x = in.data();
    const float* w = w_->value.data();
    float* y = out.data();
    for (int p = 0; p < n_pix; ++p) {
        const float* xp = x + static_cast<size_t>(p) * in_c_;
        float* yp = y + static_cast<size_t>(p) * out_c_;
        for (int o = 0; o < out_c_; ++o) {
            const float* wo = w + static_cast<size_t>(o) * in_max;
            float acc = b_ ? b_->value[static_cast<size_t>(o)] : 0.f;
            for (int i = 0; i < in_c_; ++i) acc += xp[i] * wo[i];
            macs::add(static_cast<unsigned long long>(in_c_));
            yp[o] = acc;
        }
    }
    return out;
}

Tensor PointwiseConv::backward(const Tensor& grad_out) {
    require<ShapeError>(grad_out.rank() == 4 && grad_out.dim(3) == out_c_,
                        "pointwise_conv backward: gradient shape mismatch");
    const Tensor& in = cached_in_;
    require<Error>(!in.empty(), "pointwise_conv: backward before forward");
    const int n_pix = in.dim(0) * in.dim(1) * in.dim(2);
    const int in_max = w_->value.dim(1);
    Tensor grad_in(in.shape());
    const float* x = in.data();
    const float* g = grad_out.data();
    const float* w = w_->value.data();
    float* gw = w_->grad.data();
    float* gx = grad_in.data();
    for (int p = 0; p < n_pix; ++p) {
        const float* xp = x + static_cast<size_t>(p) * in_c_;
        const float* gp = g + static_cast<size_t>(p) * out_c_;
        float* gxp = gx + static_cast<size_t>(p) * in_c_;
        for (int o = 0; o < out_c_; ++o) {
            const float go = gp[o];
            const float* wo = w + static_cast<size_t>(o) * in_max;
            float* gwo = gw + static_cast<size_t>(o) * in_max;
            for (int i = 0; i < in_c_; ++i) {
                gwo[i] += go * xp[i];
                gxp[i] += go * wo[i];
            }
            if (b_) b_->grad[static_cast<size_t>(o)] += go;
        }
    }
    return grad_in;
}

void PointwiseConv::collect_params(std::vector<ParamPtr>& out) const {
    out.push_back(w_);
    if (b_) out.push_back(b_);
}

void PointwiseConv::mark_active(ActiveMask& mask) const {
    mark_matrix(mask, w_, out_c_, in_c_, w_->value.dim(1));
    if (b_) mark_range(mask, b_, 0, static_cast<size_t>(out_c_));
}

// ------------------------------ DepthwiseConv -------------------------------

DepthwiseConv::DepthwiseConv(ParamPtr w, ParamPtr b, int channels, int kernel, int stride)
    : w_(std::move(w)), b_(std::move(b)), c_(channels), k_(kernel), stride_(stride) {
    require<SpecError>(c_ > 0, "depthwise_conv: channel count must be positive");
    require<SpecError>(k_ > 0 && k_ % 2 == 1, "depthwise_conv: kernel must be odd and positive");
    require<SpecError>(stride_ == 1 || stride_ == 2, "depthwise_conv: stride must be 1 or 2");
    require<SpecError>(w_->value.rank() == 3 && w_->value.dim(1) == k_ && w_->value.dim(2) == k_,
                       "depthwise_conv: weight must be [c,k,k]");
    require<SpecError>(w_->value.dim(0) >= c_, "depthwise_conv: active slice exceeds weight tensor");
}

Tensor DepthwiseConv::forward(const Tensor& in) {
    require<ShapeError>(in.rank() == 4 && in.dim(3) == c_,
                        "depthwise_conv: expected NHWC input with " + std::to_string(c_) +
                            " channels, got " + in.shape_str());
    cached_in_ = in;
    const int n = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int oh = (h + stride_ - 1) / stride_;
    const int ow = (w + stride_ - 1) / stride_;
    // "same" padding: pad so out = ceil(in / stride), extra on the bottom/right.
    const int pad_h = std::max(0, (oh - 1) * stride_ + k_ - h);
    const int pad_w = std::max(0, (ow - 1) * stride_ + k_ - w);
    const int pt = pad_h / 2, pl = pad_w / 2;
    Tensor out({n, oh, ow, c_});
    const float* x = in.data();
    const float* wt = w_->value.data();
    float* y = out.data();
    for (int b = 0; b < n; ++b) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                float* yp = y + (((static_cast<size_t>(b) * oh + oy) * ow + ox) * c_);
                for (int ch = 0; ch < c_; ++ch) {
                    float acc = b_ ? b_->value[static_cast<size_t>(ch)] : 0.f;
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ - pt + ky;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ - pl + kx;
                            // Out-of-range taps read the zero padding.
                            const float xv =
                                (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                    ? x[(((static_cast<size_t>(b) * h + iy) * w + ix) * c_) + ch]
                                    : 0.f;
                            acc += xv * wt[(static_cast<size_t>(ch) * k_ + ky) * k_ + kx];
                        }
                    }
                    macs::add(static_cast<unsigned long long>(k_) * k_);
                    yp[ch] = acc;
                }
            }
        }
    }
    return out;
}

Tensor DepthwiseConv::backward(const Tensor& grad_out) {
    const Tensor& in = cached_in_;
    require<Error>(!in.empty(), "depthwise_conv: backward before forward");
    const int n = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int oh = (h + stride_ - 1) / stride_;
    const int ow = (w + stride_ - 1) / stride_;
    require<ShapeError>(grad_out.rank() == 4 && grad_out.dim(1) == oh && grad_out.dim(2) == ow &&
                            grad_out.dim(3) == c_,
                        "depthwise_conv backward: gradient shape mismatch");
    const int pad_h = std::max(0, (oh - 1) * stride_ + k_ - h);
    const int pad_w = std::max(0, (ow - 1) * stride_ + k_ - w);
    const int pt = pad_h / 2, pl = pad_w / 2;
    Tensor grad_in(in.shape());
    const float* x = in.data();
    const float* g = grad_out.data();
    const float* wt = w_->value.data();
    float* gw = w_->grad.data();
    float* gx = grad_in.data();
    for (int b = 0; b < n; ++b) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const float* gp = g + (((static_cast<size_t>(b) * oh + oy) * ow + ox) * c_);
                for (int ch = 0; ch < c_; ++ch) {
                    const float go = gp[ch];
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ - pt + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ - pl + kx;
                            if (ix < 0 || ix >= w) continue;
                            const size_t xi = (((static_cast<size_t>(b) * h + iy) * w + ix) * c_) + ch;
                            const size_t wi = (static_cast<size_t>(ch) * k_ + ky) * k_ + kx;
                            gw[wi] += go * x[xi];
                            gx[xi] += go * wt[wi];
                        }
                    }
                    if (b_) b_->grad[static_cast<size_t>(ch)] += go;
                }
            }
        }
    }
    return grad_in;
}

void DepthwiseConv::collect_params(std::vector<ParamPtr>& out) const {
    out.push_back(w_);
    if (b_) out.push_back(b_);
}

void DepthwiseConv::mark_active(ActiveMask& mask) const {
    mark_range(mask, w_, 0, static_cast<size_t>(c_) * k_ * k_);
    if (b_) mark_range(mask, b_, 0, static_cast<size_t>(c_));
}

// ------------------------------ SqueezeExcite -------------------------------

SqueezeExcite::SqueezeExcite(ParamPtr w1, ParamPtr b1, ParamPtr w2, ParamPtr b2, int channels,
                             int mid)
    : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)),
      c_(channels), mid_(mid) {
    require<SpecError>(c_ > 0 && mid_ > 0, "squeeze_excite: channel counts must be positive");
    require<SpecError>(w1_->value.dim(0) >= mid_ && w1_->value.dim(1) >= c_,
                       "squeeze_excite: fc1 slice exceeds weight tensor");
    require<SpecError>(w2_->value.dim(0) >= c_ && w2_->value.dim(1) >= mid_,
                       "squeeze_excite: fc2 slice exceeds weight tensor");
}

Tensor SqueezeExcite::forward(const Tensor& in) {
    require<ShapeError>(in.rank() == 4 && in.dim(3) == c_,
                        "squeeze_excite: expected NHWC input with " + std::to_string(c_) +
                            " channels, got " + in.shape_str());
    cached_in_ = in;
    const int n = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int hw = h * w;
    const int c_max = w1_->value.dim(1);
    const int mid_max = w2_->value.dim(1);

    pooled_ = Tensor({n, c_});
    const float* x = in.data();
    for (int b = 0; b < n; ++b) {
        float* pb = pooled_.data() + static_cast<size_t>(b) * c_;
        for (int p = 0; p < hw; ++p) {
            const float* xp = x + ((static_cast<size_t>(b) * hw) + p) * c_;
            for (int ch = 0; ch < c_; ++ch) pb[ch] += xp[ch];
        }
        macs::add(static_cast<unsigned long long>(hw) * c_);
        for (int ch = 0; ch < c_; ++ch) pb[ch] /= static_cast<float>(hw);
    }

    a1_ = Tensor({n, mid_});
    z1_ = Tensor({n, mid_});
    for (int b = 0; b < n; ++b) {
        const float* pb = pooled_.data() + static_cast<size_t>(b) * c_;
        for (int m = 0; m < mid_; ++m) {
            const float* wm = w1_->value.data() + static_cast<size_t>(m) * c_max;
            float acc = b1_ ? b1_->value[static_cast<size_t>(m)] : 0.f;
            for (int ch = 0; ch < c_; ++ch) acc += pb[ch] * wm[ch];
            macs::add(static_cast<unsigned long long>(c_));
            a1_[static_cast<size_t>(b) * mid_ + m] = acc;
            z1_[static_cast<size_t>(b) * mid_ + m] = std::max(0.f, acc);
        }
    }

    a2_ = Tensor({n, c_});
    gate_ = Tensor({n, c_});
    for (int b = 0; b < n; ++b) {
        const float* zb = z1_.data() + static_cast<size_t>(b) * mid_;
        for (int ch = 0; ch < c_; ++ch) {
            const float* wc = w2_->value.data() + static_cast<size_t>(ch) * mid_max;
            float acc = b2_ ? b2_->value[static_cast<size_t>(ch)] : 0.f;
            for (int m = 0; m < mid_; ++m) acc += zb[m] * wc[m];
            macs::add(static_cast<unsigned long long>(mid_));
            a2_[static_cast<size_t>(b) * c_ + ch] = acc;
            gate_[static_cast<size_t>(b) * c_ + ch] = hard_sigmoid(acc);
        }
    }

    Tensor out(in.shape());
    float* y = out.data();
    for (int b = 0; b < n; ++b) {
        const float* gb = gate_.data() + static_cast<size_t>(b) * c_;
        for (int p = 0; p < hw; ++p) {
            const size_t base = ((static_cast<size_t>(b) * hw) + p) * c_;
            for (int ch = 0; ch < c_; ++ch) y[base + ch] = x[base + ch] * gb[ch];
        }
        macs::add(static_cast<unsigned long long>(hw) * c_);
    }
    return out;
}

Tensor SqueezeExcite::backward(const Tensor& grad_out) {
    const Tensor& in = cached_in_;
    require<Error>(!in.empty(), "squeeze_excite: backward before forward");
    require<ShapeError>(grad_out.same_shape(in), "squeeze_excite backward: gradient shape mismatch");
    const int n = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int hw = h * w;
    const int c_max = w1_->value.dim(1);
    const int mid_max = w2_->value.dim(1);

    Tensor grad_in(in.shape());
    Tensor grad_gate({n, c_});
    const float* x = in.data();
    const float* g = grad_out.data();
    float* gx = grad_in.data();
    for (int b = 0; b < n; ++b) {
        const float* gateb = gate_.data() + static_cast<size_t>(b) * c_;
        float* ggb = grad_gate.data() + static_cast<size_t>(b) * c_;
        for (int p = 0; p < hw; ++p) {
            const size_t base = ((static_cast<size_t>(b) * hw) + p) * c_;
            for (int ch = 0; ch < c_; ++ch) {
                gx[base + ch] += g[base + ch] * gateb[ch];
                ggb[ch] += g[base + ch] * x[base + ch];
            }
        }
    }

    Tensor grad_z1({n, mid_});
    for (int b = 0; b < n; ++b) {
        const float* ggb = grad_gate.data() + static_cast<size_t>(b) * c_;
        const float* zb = z1_.data() + static_cast<size_t>(b) * mid_;
        float* gzb = grad_z1.data() + static_cast<size_t>(b) * mid_;
        for (int ch = 0; ch < c_; ++ch) {
            const float ga2 = ggb[ch] * hard_sigmoid_grad(a2_[static_cast<size_t>(b) * c_ + ch]);
            if (b2_) b2_->grad[static_cast<size_t>(ch)] += ga2;
            const float* wc = w2_->value.data() + static_cast<size_t>(ch) * mid_max;
            float* gwc = w2_->grad.data() + static_cast<size_t>(ch) * mid_max;
            for (int m = 0; m < mid_; ++m) {
                gwc[m] += ga2 * zb[m];
                gzb[m] += ga2 * wc[m];
            }
        }
    }

    Tensor grad_pooled({n, c_});
    for (int b = 0; b < n; ++b) {
        const float* pb = pooled_.data() + static_cast<size_t>(b) * c_;
        float* gpb = grad_pooled.data() + static_cast<size_t>(b) * c_;
        for (int m = 0; m < mid_; ++m) {
            const float ga1 =
                (a1_[static_cast<size_t>(b) * mid_ + m] > 0.f)
                    ? grad_z1[static_cast<size_t>(b) * mid_ + m]
                    : 0.f;
            if (b1_) b1_->grad[static_cast<size_t>(m)] += ga1;
            const float* wm = w1_->value.data() + static_cast<size_t>(m) * c_max;
            float* gwm = w1_->grad.data() + static_cast<size_t>(m) * c_max;
            for (int ch = 0; ch < c_; ++ch) {
                gwm[ch] += ga1 * pb[ch];
                gpb[ch] += ga1 * wm[ch];
            }
        }
    }

    const float inv_hw = 1.f / static_cast<float>(hw);
    for (int b = 0; b < n; ++b) {
        const float* gpb = grad_pooled.data() + static_cast<size_t>(b) * c_;
        for (int p = 0; p < hw; ++p) {
            const size_t base = ((static_cast<size_t>(b) * hw) + p) * c_;
            for (int ch = 0; ch < c_; ++ch) gx[base + ch] += gpb[ch] * inv_hw;
        }
    }
    return grad_in;
}

void SqueezeExcite::collect_params(std::vector<ParamPtr>& out) const {
    out.push_back(w1_);
    if (b1_) out.push_back(b1_);
    out.push_back(w2_);
    if (b2_) out.push_back(b2_);
}

void SqueezeExcite::mark_active(ActiveMask& mask) const {
    mark_matrix(mask, w1_, mid_, c_, w1_->value.dim(1));
    mark_matrix(mask, w2_, c_, mid_, w2_->value.dim(1));
    if (b1_) mark_range(mask, b1_, 0, static_cast<size_t>(mid_));
    if (b2_) mark_range(mask, b2_, 0, static_cast<size_t>(c_));
}

// ------------------------------ Activations ---------------------------------

Tensor HardSwish::forward(const Tensor& in) {
    cached_in_ = in;
    Tensor out(in.shape());
    for (size_t i = 0; i < in.size(); ++i) {
        const float x = in[i];
        out[i] = x * (std::clamp(x + 3.f, 0.f, 6.f) / 6.f);
    }
    return out;
}

Tensor HardSwish::backward(const Tensor& grad_out) {
    require<Error>(!cached_in_.empty(), "hard_swish: backward before forward");
    require<ShapeError>(grad_out.same_shape(cached_in_), "hard_swish backward: shape mismatch");
    Tensor grad_in(cached_in_.shape());
    for (size_t i = 0; i < grad_in.size(); ++i) {
        const float x = cached_in_[i];
        float d;
        if (x <= -3.f) {
            d = 0.f;
        } else if (x >= 3.f) {
            d = 1.f;
        } else {
            d = (2.f * x + 3.f) / 6.f;
        }
        grad_in[i] = grad_out[i] * d;
    }
    return grad_in;
}

Tensor Relu::forward(const Tensor& in) {
    cached_in_ = in;
    Tensor out(in.shape());
    for (size_t i = 0; i < in.size(); ++i) out[i] = std::max(0.f, in[i]);
    return out;
}

Tensor Relu::backward(const Tensor& grad_out) {
    require<Error>(!cached_in_.empty(), "relu: backward before forward");
    require<ShapeError>(grad_out.same_shape(cached_in_), "relu backward: shape mismatch");
    Tensor grad_in(cached_in_.shape());
    for (size_t i = 0; i < grad_in.size(); ++i) {
        grad_in[i] = cached_in_[i] > 0.f ? grad_out[i] : 0.f;
    }
    return grad_in;
}

// ------------------------------ Pool / Dense --------------------------------

Tensor GlobalAveragePool::forward(const Tensor& in) {
    require<ShapeError>(in.rank() == 4, "global_average_pool: expected NHWC input");
    cached_shape_ = in.shape();
    const int n = in.dim(0), hw = in.dim(1) * in.dim(2), c = in.dim(3);
    Tensor out({n, c});
    const float* x = in.data();
    for (int b = 0; b < n; ++b) {
        float* ob = out.data() + static_cast<size_t>(b) * c;
        for (int p = 0; p < hw; ++p) {
            const float* xp = x + ((static_cast<size_t>(b) * hw) + p) * c;
            for (int ch = 0; ch < c; ++ch) ob[ch] += xp[ch];
        }
        macs::add(static_cast<unsigned long long>(hw) * c);
        for (int ch = 0; ch < c; ++ch) ob[ch] /= static_cast<float>(hw);
    }
    return out;
}

Tensor GlobalAveragePool::backward(const Tensor& grad_out) {
    require<Error>(!cached_shape_.empty(), "global_average_pool: backward before forward");
    const int n = cached_shape_[0], hw = cached_shape_[1] * cached_shape_[2], c = cached_shape_[3];
    require<ShapeError>(grad_out.rank() == 2 && grad_out.dim(0) == n && grad_out.dim(1) == c,
                        "global_average_pool backward: gradient shape mismatch");
    Tensor grad_in(cached_shape_);
    const float inv_hw = 1.f / static_cast<float>(hw);
    float* gx = grad_in.data();
    for (int b = 0; b < n; ++b) {
        const float* gb = grad_out.data() + static_cast<size_t>(b) * c;
        for (int p = 0; p < hw; ++p) {
            float* gp = gx + ((static_cast<size_t>(b) * hw) + p) * c;
            for (int ch = 0; ch < c; ++ch) gp[ch] = gb[ch] * inv_hw;
        }
    }
    return grad_in;
}

Dense::Dense(ParamPtr w, ParamPtr b, int in_c, int out_c)
    : w_(std::move(w)), b_(std::move(b)), in_c_(in_c), out_c_(out_c) {
    require<SpecError>(in_c_ > 0 && out_c_ > 0, "dense: feature counts must be positive");
    require<SpecError>(w_->value.dim(0) >= out_c_ && w_->value.dim(1) >= in_c_,
                       "dense: active slice exceeds weight tensor");
}

Tensor Dense::forward(const Tensor& in) {
    require<ShapeError>(in.rank() == 2 && in.dim(1) == in_c_,
                        "dense: expected [N," + std::to_string(in_c_) + "] input, got " +
                            in.shape_str());
    cached_in_ = in;
    const int n = in.dim(0);
    const int in_max = w_->value.dim(1);
    Tensor out({n, out_c_});
    for (int b = 0; b < n; ++b) {
        const float* xb = in.data() + static_cast<size_t>(b) * in_c_;
        float* yb = out.data() + static_cast<size_t>(b) * out_c_;
        for (int o = 0; o < out_c_; ++o) {
            const float* wo = w_->value.data() + static_cast<size_t>(o) * in_max;
            float acc = b_ ? b_->value[static_cast<size_t>(o)] : 0.f;
            for (int i = 0; i < in_c_; ++i) acc += xb[i] * wo[i];
            macs::add(static_cast<unsigned long long>(in_c_));
            yb[o] = acc;
        }
    }
    return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const Tensor& in = cached_in_;
    require<Error>(!in.empty(), "dense: backward before forward");
    require<ShapeError>(grad_out.rank() == 2 && grad_out.dim(0) == in.dim(0) &&
                            grad_out.dim(1) == out_c_,
                        "dense backward: gradient shape mismatch");
    const int n = in.dim(0);
    const int in_max = w_->value.dim(1);
    Tensor grad_in(in.shape());
    for (int b = 0; b < n; ++b) {
        const float* xb = in.data() + static_cast<size_t>(b) * in_c_;
        const float* gb = grad_out.data() + static_cast<size_t>(b) * out_c_;
        float* gxb = grad_in.data() + static_cast<size_t>(b) * in_c_;
        for (int o = 0; o < out_c_; ++o) {
            const float go = gb[o];
            const float* wo = w_->value.data() + static_cast<size_t>(o) * in_max;
            float* gwo = w_->grad.data() + static_cast<size_t>(o) * in_max;
            for (int i = 0; i < in_c_; ++i) {
                gwo[i] += go * xb[i];
                gxb[i] += go * wo[i];
            }
            if (b_) b_->grad[static_cast<size_t>(o)] += go;
        }
    }
    return grad_in;
}

void Dense::collect_params(std::vector<ParamPtr>& out) const {
    out.push_back(w_);
    if (b_) out.push_back(b_);
}

void Dense::mark_active(ActiveMask& mask) const {
    mark_matrix(mask, w_, out_c_, in_c_, w_->value.dim(1));
    if (b_) mark_range(mask, b_, 0, static_cast<size_t>(out_c_));
}

// ------------------------------ Residual ------------------------------------

Tensor Residual::forward(const Tensor& in) {
    Tensor y = in;
    for (auto& l : body_) y = l->forward(y);
    require<ShapeError>(y.same_shape(in), "residual: body must preserve shape");
    for (size_t i = 0; i < y.size(); ++i) y[i] += in[i];
    return y;
}

Tensor Residual::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = body_.rbegin(); it != body_.rend(); ++it) g = (*it)->backward(g);
    require<ShapeError>(g.same_shape(grad_out), "residual backward: shape mismatch");
    for (size_t i = 0; i < g.size(); ++i) g[i] += grad_out[i];
    return g;
}

void Residual::collect_params(std::vector<ParamPtr>& out) const {
    for (const auto& l : body_) l->collect_params(out);
}

void Residual::mark_active(ActiveMask& mask) const {
    for (const auto& l : body_) l->mark_active(mask);
}

}  // namespace mpnas

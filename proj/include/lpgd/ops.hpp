#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include "lpgd/autograd.hpp"
#include "lpgd/tensor.hpp"

namespace lpgd {

namespace detail {

inline int div_floor(int a, int b) {
  int q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

/// Valid output range [lo, hi) along one axis so that ow*stride + off lands
/// inside [0, extent).
inline void valid_range(int off, int stride, int extent, int out_extent, int& lo, int& hi) {
  lo = std::max(0, div_floor(-off + stride - 1, stride));
  hi = std::min(out_extent, div_floor(extent - 1 - off, stride) + 1);
  if (hi < lo) hi = lo;
}

struct ConvDims {
  int B, Cin, H, W, Cout, kh, kw, Ho, Wo, stride, dilation, padding;
};

inline ConvDims conv_dims(const Tensor& input, const Tensor& weight, const Tensor* bias,
                          int stride, int dilation, int padding) {
  if (input.rank() != 4) throw std::invalid_argument("conv2d: input must be 4-D, got " + shape_str(input.shape()));
  if (weight.rank() != 4) throw std::invalid_argument("conv2d: weight must be 4-D, got " + shape_str(weight.shape()));
  ConvDims d{};
  d.B = input.dim(0);
  d.Cin = input.dim(1);
  d.H = input.dim(2);
  d.W = input.dim(3);
  d.Cout = weight.dim(0);
  d.kh = weight.dim(2);
  d.kw = weight.dim(3);
  d.stride = stride;
  d.dilation = dilation;
  d.padding = padding;
  if (weight.dim(1) != d.Cin)
    throw std::invalid_argument("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                                " input channels, input has " + std::to_string(d.Cin));
  if (d.kh % 2 == 0 || d.kw % 2 == 0) throw std::invalid_argument("conv2d: kernel extents must be odd");
  if (stride < 1 || dilation < 1 || padding < 0) throw std::invalid_argument("conv2d: bad stride/dilation/padding");
  if (bias && bias->defined() && (bias->rank() != 1 || bias->dim(0) != d.Cout))
    throw std::invalid_argument("conv2d: bias must be [Cout]");
  d.Ho = (d.H + 2 * padding - dilation * (d.kh - 1) - 1) / stride + 1;
  d.Wo = (d.W + 2 * padding - dilation * (d.kw - 1) - 1) / stride + 1;
  if (d.H + 2 * padding < dilation * (d.kh - 1) + 1 || d.W + 2 * padding < dilation * (d.kw - 1) + 1 ||
      d.Ho < 1 || d.Wo < 1)
    throw std::invalid_argument("conv2d: non-positive output extent");
  return d;
}

inline void conv_forward(const ConvDims& d, const float* in, const float* w, const float* bias, float* out) {
  const std::int64_t in_plane = static_cast<std::int64_t>(d.H) * d.W;
  const std::int64_t out_plane = static_cast<std::int64_t>(d.Ho) * d.Wo;
  for (int b = 0; b < d.B; ++b) {
    for (int co = 0; co < d.Cout; ++co) {
      float* op = out + (static_cast<std::int64_t>(b) * d.Cout + co) * out_plane;
      const float bv = bias ? bias[co] : 0.0f;
      std::fill(op, op + out_plane, bv);
      for (int ci = 0; ci < d.Cin; ++ci) {
        const float* ip = in + (static_cast<std::int64_t>(b) * d.Cin + ci) * in_plane;
        const float* wp = w + (static_cast<std::int64_t>(co) * d.Cin + ci) * d.kh * d.kw;
        for (int kh = 0; kh < d.kh; ++kh) {
          for (int kw = 0; kw < d.kw; ++kw) {
            const float wv = wp[kh * d.kw + kw];
            const int off = kw * d.dilation - d.padding;
            int lo, hi;
            valid_range(off, d.stride, d.W, d.Wo, lo, hi);
            for (int oh = 0; oh < d.Ho; ++oh) {
              const int ih = oh * d.stride - d.padding + kh * d.dilation;
              if (ih < 0 || ih >= d.H) continue;
              const float* irow = ip + static_cast<std::int64_t>(ih) * d.W;
              float* orow = op + static_cast<std::int64_t>(oh) * d.Wo;
              if (d.stride == 1) {
                const float* irp = irow + off;
                for (int ow = lo; ow < hi; ++ow) orow[ow] += wv * irp[ow];
              } else {
                for (int ow = lo; ow < hi; ++ow) orow[ow] += wv * irow[ow * d.stride + off];
              }
            }
          }
        }
      }
    }
  }
}

inline void conv_backward(const ConvDims& d, const float* in, const float* w, const float* gout,
                          float* gin, float* gw, float* gbias) {
  const std::int64_t in_plane = static_cast<std::int64_t>(d.H) * d.W;
  const std::int64_t out_plane = static_cast<std::int64_t>(d.Ho) * d.Wo;
  for (int b = 0; b < d.B; ++b) {
    for (int co = 0; co < d.Cout; ++co) {
      const float* gop = gout + (static_cast<std::int64_t>(b) * d.Cout + co) * out_plane;
      if (gbias) {
        double s = 0.0;
        for (std::int64_t i = 0; i < out_plane; ++i) s += gop[i];
        gbias[co] += static_cast<float>(s);
      }
      for (int ci = 0; ci < d.Cin; ++ci) {
        const float* ip = in + (static_cast<std::int64_t>(b) * d.Cin + ci) * in_plane;
        float* gip = gin ? gin + (static_cast<std::int64_t>(b) * d.Cin + ci) * in_plane : nullptr;
        const float* wp = w + (static_cast<std::int64_t>(co) * d.Cin + ci) * d.kh * d.kw;
        float* gwp = gw ? gw + (static_cast<std::int64_t>(co) * d.Cin + ci) * d.kh * d.kw : nullptr;
        for (int kh = 0; kh < d.kh; ++kh) {
          for (int kw = 0; kw < d.kw; ++kw) {
            const float wv = wp[kh * d.kw + kw];
            const int off = kw * d.dilation - d.padding;
            int lo, hi;
            valid_range(off, d.stride, d.W, d.Wo, lo, hi);
            double wacc = 0.0;
            for (int oh = 0; oh < d.Ho; ++oh) {
              const int ih = oh * d.stride - d.padding + kh * d.dilation;
              if (ih < 0 || ih >= d.H) continue;
              const float* irow = ip + static_cast<std::int64_t>(ih) * d.W;
              const float* gorow = gop + static_cast<std::int64_t>(oh) * d.Wo;
              if (gwp) {
                if (d.stride == 1) {
                  const float* irp = irow + off;
                  for (int ow = lo; ow < hi; ++ow) wacc += static_cast<double>(gorow[ow]) * irp[ow];
                } else {
                  for (int ow = lo; ow < hi; ++ow) wacc += static_cast<double>(gorow[ow]) * irow[ow * d.stride + off];
                }
              }
              if (gip) {
                float* girow = gip + static_cast<std::int64_t>(ih) * d.W;
                if (d.stride == 1) {
                  float* girp = girow + off;
                  for (int ow = lo; ow < hi; ++ow) girp[ow] += wv * gorow[ow];
                } else {
                  for (int ow = lo; ow < hi; ++ow) girow[ow * d.stride + off] += wv * gorow[ow];
                }
              }
            }
            if (gwp) gwp[kh * d.kw + kw] += static_cast<float>(wacc);
          }
        }
      }
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d

class Conv2dNode : public Node {
 public:
  Conv2dNode(Tensor input, Tensor weight, Tensor bias, Tensor out, detail::ConvDims dims)
      : input_(std::move(input)), weight_(std::move(weight)), bias_(std::move(bias)), out_(std::move(out)), dims_(dims) {}

  void backward() override {
    detail::conv_backward(dims_, input_.data(), weight_.data(), out_.grad(),
                          input_.requires_grad() ? input_.grad() : nullptr,
                          weight_.requires_grad() ? weight_.grad() : nullptr,
                          bias_.defined() && bias_.requires_grad() ? bias_.grad() : nullptr);
  }
  const char* name() const override { return "conv2d"; }

 private:
  Tensor input_, weight_, bias_, out_;
  detail::ConvDims dims_;
};

/// 2-D cross-correlation with zero padding. bias may be nullptr.
inline Tensor conv2d(Tape* tape, const Tensor& input, const Tensor& weight, const Tensor* bias,
                     int stride = 1, int dilation = 1, int padding = 0) {
  const detail::ConvDims d = detail::conv_dims(input, weight, bias, stride, dilation, padding);
  Tensor out(Shape{d.B, d.Cout, d.Ho, d.Wo});
  detail::conv_forward(d, input.data(), weight.data(), bias ? bias->data() : nullptr, out.data());
  LPGD_DCHECK_FINITE(out, "conv2d");
  if (detail::track(tape, {&input, &weight, bias})) {
    out.set_requires_grad(true);
    tape->record<Conv2dNode>(input, weight, bias ? *bias : Tensor(), out, d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// nearest-neighbor up/down sampling

class NearestUpsampleNode : public Node {
 public:
  NearestUpsampleNode(Tensor in, Tensor out, int factor) : in_(std::move(in)), out_(std::move(out)), factor_(factor) {}
  void backward() override {
    const int B = in_.dim(0), C = in_.dim(1), H = in_.dim(2), W = in_.dim(3);
    const int Wo = W * factor_;
    float* gin = in_.grad();
    const float* gout = out_.grad();
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const std::int64_t ibase = (static_cast<std::int64_t>(b) * C + c) * H * W;
        const std::int64_t obase = (static_cast<std::int64_t>(b) * C + c) * H * W * factor_ * factor_;
        for (int oh = 0; oh < H * factor_; ++oh) {
          const float* gorow = gout + obase + static_cast<std::int64_t>(oh) * Wo;
          float* girow = gin + ibase + static_cast<std::int64_t>(oh / factor_) * W;
          for (int ow = 0; ow < Wo; ++ow) girow[ow / factor_] += gorow[ow];
        }
      }
  }
  const char* name() const override { return "nearest_upsample"; }

 private:
  Tensor in_, out_;
  int factor_;
};

/// out[b,c,i,j] = in[b,c, i/factor, j/factor].
inline Tensor nearest_upsample(Tape* tape, const Tensor& input, int factor) {
  if (input.rank() != 4) throw std::invalid_argument("nearest_upsample: input must be 4-D");
  if (factor < 1) throw std::invalid_argument("nearest_upsample: factor must be >= 1");
  const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  Tensor out(Shape{B, C, H * factor, W * factor});
  const float* in = input.data();
  float* o = out.data();
  const int Wo = W * factor;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const std::int64_t ibase = (static_cast<std::int64_t>(b) * C + c) * H * W;
      const std::int64_t obase = (static_cast<std::int64_t>(b) * C + c) * H * W * factor * factor;
      for (int oh = 0; oh < H * factor; ++oh) {
        const float* irow = in + ibase + static_cast<std::int64_t>(oh / factor) * W;
        float* orow = o + obase + static_cast<std::int64_t>(oh) * Wo;
        for (int ow = 0; ow < Wo; ++ow) orow[ow] = irow[ow / factor];
      }
    }
  if (detail::track(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record<NearestUpsampleNode>(input, out, factor);
  }
  return out;
}

class DownsampleNearestNode : public Node {
 public:
  DownsampleNearestNode(Tensor in, Tensor out, int factor) : in_(std::move(in)), out_(std::move(out)), factor_(factor) {}
  void backward() override {
    const int B = out_.dim(0), C = out_.dim(1), Ho = out_.dim(2), Wo = out_.dim(3);
    const int W = Wo * factor_;
    float* gin = in_.grad();
    const float* gout = out_.grad();
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Ho; ++oh)
          for (int ow = 0; ow < Wo; ++ow) {
            const std::int64_t oi = ((static_cast<std::int64_t>(b) * C + c) * Ho + oh) * Wo + ow;
            const std::int64_t ii = ((static_cast<std::int64_t>(b) * C + c) * (Ho * factor_) + oh * factor_) * W + ow * factor_;
            gin[ii] += gout[oi];
          }
  }
  const char* name() const override { return "downsample_nearest"; }

 private:
  Tensor in_, out_;
  int factor_;
};

/// Picks the top-left element of each factor x factor block; factor must
/// divide both spatial extents.
inline Tensor downsample_nearest(Tape* tape, const Tensor& input, int factor) {
  if (input.rank() != 4) throw std::invalid_argument("downsample_nearest: input must be 4-D");
  if (factor < 1) throw std::invalid_argument("downsample_nearest: factor must be >= 1");
  const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (H % factor != 0 || W % factor != 0)
    throw std::invalid_argument("downsample_nearest: factor " + std::to_string(factor) + " does not divide extents " +
                                shape_str(input.shape()));
  const int Ho = H / factor, Wo = W / factor;
  Tensor out(Shape{B, C, Ho, Wo});
  const float* in = input.data();
  float* o = out.data();
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int oh = 0; oh < Ho; ++oh) {
        const float* irow = in + ((static_cast<std::int64_t>(b) * C + c) * H + oh * factor) * W;
        float* orow = o + ((static_cast<std::int64_t>(b) * C + c) * Ho + oh) * Wo;
        for (int ow = 0; ow < Wo; ++ow) orow[ow] = irow[ow * factor];
      }
  if (detail::track(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record<DownsampleNearestNode>(input, out, factor);
  }
  return out;
}

// ---------------------------------------------------------------------------
// elementwise activations

class EluNode : public Node {
 public:
  EluNode(Tensor in, Tensor out) : in_(std::move(in)), out_(std::move(out)) {}
  void backward() override {
    const float* o = out_.data();
    const float* go = out_.grad();
    float* gi = in_.grad();
    for (std::int64_t i = 0, n = out_.size(); i < n; ++i) gi[i] += go[i] * (o[i] > 0.0f ? 1.0f : o[i] + 1.0f);
  }
  const char* name() const override { return "elu"; }

 private:
  Tensor in_, out_;
};

/// elu(x) = x for x > 0, exp(x) - 1 otherwise.
inline Tensor elu(Tape* tape, const Tensor& input) {
  Tensor out(input.shape());
  const float* x = input.data();
  float* o = out.data();
  for (std::int64_t i = 0, n = input.size(); i < n; ++i) o[i] = x[i] > 0.0f ? x[i] : std::expm1(x[i]);
  if (detail::track(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record<EluNode>(input, out);
  }
  return out;
}

class SigmoidNode : public Node {
 public:
  SigmoidNode(Tensor in, Tensor out) : in_(std::move(in)), out_(std::move(out)) {}
  void backward() override {
    const float* s = out_.data();
    const float* go = out_.grad();
    float* gi = in_.grad();
    for (std::int64_t i = 0, n = out_.size(); i < n; ++i) gi[i] += go[i] * s[i] * (1.0f - s[i]);
  }
  const char* name() const override { return "sigmoid"; }

 private:
  Tensor in_, out_;
};

inline Tensor sigmoid(Tape* tape, const Tensor& input) {
  Tensor out(input.shape());
  const float* x = input.data();
  float* o = out.data();
  for (std::int64_t i = 0, n = input.size(); i < n; ++i) o[i] = 1.0f / (1.0f + std::exp(-x[i]));
  if (detail::track(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record<SigmoidNode>(input, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// concat / slice

class ConcatNode : public Node {
 public:
  ConcatNode(std::vector<Tensor> ins, Tensor out, int axis) : ins_(std::move(ins)), out_(std::move(out)), axis_(axis) {}
  void backward() override {
    const Shape& os = out_.shape();
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis_; ++i) outer *= os[static_cast<std::size_t>(i)];
    for (int i = axis_ + 1; i < out_.rank(); ++i) inner *= os[static_cast<std::size_t>(i)];
    const std::int64_t out_axis = os[static_cast<std::size_t>(axis_)];
    const float* go = out_.grad();
    std::int64_t axis_off = 0;
    for (Tensor& in : ins_) {
      const std::int64_t a = in.dim(axis_);
      if (in.requires_grad()) {
        float* gi = in.grad();
        for (std::int64_t o = 0; o < outer; ++o) {
          const float* src = go + (o * out_axis + axis_off) * inner;
          float* dst = gi + o * a * inner;
          for (std::int64_t i = 0, n = a * inner; i < n; ++i) dst[i] += src[i];
        }
      }
      axis_off += a;
    }
  }
  const char* name() const override { return "concat"; }

 private:
  std::vector<Tensor> ins_;
  Tensor out_;
  int axis_;
};

inline Tensor concat(Tape* tape, const std::vector<Tensor>& tensors, int axis) {
  if (tensors.empty()) throw std::invalid_argument("concat: no inputs");
  const int rank = tensors[0].rank();
  if (axis < 0 || axis >= rank) throw std::invalid_argument("concat: axis out of range");
  std::int64_t axis_total = 0;
  for (const Tensor& t : tensors) {
    if (t.rank() != rank) throw std::invalid_argument("concat: rank mismatch");
    for (int i = 0; i < rank; ++i)
      if (i != axis && t.dim(i) != tensors[0].dim(i))
        throw std::invalid_argument("concat: shape mismatch on non-concat axis: " + shape_str(t.shape()) + " vs " +
                                    shape_str(tensors[0].shape()));
    axis_total += t.dim(axis);
  }
  Shape os = tensors[0].shape();
  os[static_cast<std::size_t>(axis)] = static_cast<int>(axis_total);
  Tensor out(os);
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= os[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < rank; ++i) inner *= os[static_cast<std::size_t>(i)];
  float* o = out.data();
  std::int64_t axis_off = 0;
  for (const Tensor& t : tensors) {
    const std::int64_t a = t.dim(axis);
    const float* src = t.data();
    for (std::int64_t ou = 0; ou < outer; ++ou) {
      float* dst = o + (ou * axis_total + axis_off) * inner;
      const float* s = src + ou * a * inner;
      std::copy(s, s + a * inner, dst);
    }
    axis_off += a;
  }
  bool track = false;
  if (tape)
    for (const Tensor& t : tensors) track = track || t.requires_grad();
  if (track) {
    out.set_requires_grad(true);
    tape->record<ConcatNode>(tensors, out, axis);
  }
  return out;
}

class SliceChannelsNode : public Node {
 public:
  SliceChannelsNode(Tensor in, Tensor out, int c0) : in_(std::move(in)), out_(std::move(out)), c0_(c0) {}
  void backward() override {
    const int B = in_.dim(0), C = in_.dim(1);
    const std::int64_t plane = static_cast<std::int64_t>(in_.dim(2)) * in_.dim(3);
    const int Cs = out_.dim(1);
    float* gi = in_.grad();
    const float* go = out_.grad();
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < Cs; ++c) {
        float* dst = gi + (static_cast<std::int64_t>(b) * C + c0_ + c) * plane;
        const float* src = go + (static_cast<std::int64_t>(b) * Cs + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) dst[i] += src[i];
      }
  }
  const char* name() const override { return "slice_channels"; }

 private:
  Tensor in_, out_;
  int c0_;
};

/// Channels [c0, c1) of a 4-D tensor.
inline Tensor slice_channels(Tape* tape, const Tensor& input, int c0, int c1) {
  if (input.rank() != 4) throw std::invalid_argument("slice_channels: input must be 4-D");
  const int B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (c0 < 0 || c1 <= c0 || c1 > C) throw std::invalid_argument("slice_channels: bad channel range");
  Tensor out(Shape{B, c1 - c0, H, W});
  const std::int64_t plane = static_cast<std::int64_t>(H) * W;
  for (int b = 0; b < B; ++b)
    for (int c = c0; c < c1; ++c) {
      const float* src = input.data() + (static_cast<std::int64_t>(b) * C + c) * plane;
      float* dst = out.data() + (static_cast<std::int64_t>(b) * (c1 - c0) + (c - c0)) * plane;
      std::copy(src, src + plane, dst);
    }
  if (detail::track(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record<SliceChannelsNode>(input, out, c0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// arithmetic

class AddNode : public Node {
 public:
  AddNode(Tensor a, Tensor b, Tensor out) : a_(std::move(a)), b_(std::move(b)), out_(std::move(out)) {}
  void backward() override {
    const float* go = out_.grad();
    const std::int64_t n = out_.size();
    if (a_.requires_grad()) {
      float* g = a_.grad();
      for (std::int64_t i = 0; i < n; ++i) g[i] += go[i];
    }
    if (b_.requires_grad()) {
      float* g = b_.grad();
      for (std::int64_t i = 0; i < n; ++i) g[i] += go[i];
    }
  }
  const char* name() const override { return "add"; }

 private:
  Tensor a_, b_, out_;
};

inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b))
    throw std::invalid_argument("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  const float* pa = a.data();
  const float* pb = b.data();
  float* o = out.data();
  for (std::int64_t i = 0, n = a.size(); i < n; ++i) o[i] = pa[i] + pb[i];
  if (detail::track(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record<AddNode>(a, b, out);
  }
  return out;
}

class MulNode : public Node {
 public:
  MulNode(Tensor a, Tensor b, Tensor out) : a_(std::move(a)), b_(std::move(b)), out_(std::move(out)) {}
  void backward() override {
    const float* go = out_.grad();
    const std::int64_t n = out_.size();
    if (a_.requires_grad()) {
      float* g = a_.grad();
      const float* pb = b_.data();
      for (std::int64_t i = 0; i < n; ++i) g[i] += go[i] * pb[i];
    }
    if (b_.requires_grad()) {
      float* g = b_.grad();
      const float* pa = a_.data();
      for (std::int64_t i = 0; i < n; ++i) g[i] += go[i] * pa[i];
    }
  }
  const char* name() const override { return "mul"; }

 private:
  Tensor a_, b_, out_;
};

inline Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b))
    throw std::invalid_argument("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  const float* pa = a.data();
  const float* pb = b.data();
  float* o = out.data();
  for (std::int64_t i = 0, n = a.size(); i < n; ++i) o[i] = pa[i] * pb[i];
  if (detail::track(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record<MulNode>(a, b, out);
  }
  return out;
}

class ScalarAffineNode : public Node {
 public:
  ScalarAffineNode(Tensor in, Tensor out, float scale) : in_(std::move(in)), out_(std::move(out)), scale_(scale) {}
  void backward() override {
    const float* go = out_.grad();
    float* gi = in_.grad();
    for (std::int64_t i = 0, n = out_.size(); i < n; ++i) gi[i] += go[i] * scale_;
  }
  const char* name() const override { return "scalar_affine"; }

 private:
  Tensor in_, out_;
  float scale_;
};

inline Tensor scalar_mul(Tape* tape, const Tensor& input, float s) {
  Tensor out(input.shape());
  const float* x = input.data();
  float* o = out.data();
  for (std::int64_t i = 0, n = input.size(); i < n; ++i) o[i] = x[i] * s;
  if (detail::track(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record<ScalarAffineNode>(input, out, s);
  }
  return out;
}

inline Tensor scalar_add(Tape* tape, const Tensor& input, float s) {
  Tensor out(input.shape());
  const float* x = input.data();
  float* o = out.data();
  for (std::int64_t i = 0, n = input.size(); i < n; ++i) o[i] = x[i] + s;
  if (detail::track(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record<ScalarAffineNode>(input, out, 1.0f);
  }
  return out;
}

class SumNode : public Node {
 public:
  SumNode(Tensor in, Tensor out) : in_(std::move(in)), out_(std::move(out)) {}
  void backward() override {
    const float g = out_.grad()[0];
    float* gi = in_.grad();
    for (std::int64_t i = 0, n = in_.size(); i < n; ++i) gi[i] += g;
  }
  const char* name() const override { return "sum"; }

 private:
  Tensor in_, out_;
};

/// Sum of all elements as a scalar tensor; accumulates in double.
inline Tensor sum(Tape* tape, const Tensor& input) {
  double acc = 0.0;
  const float* x = input.data();
  for (std::int64_t i = 0, n = input.size(); i < n; ++i) acc += x[i];
  Tensor out = Tensor::scalar(static_cast<float>(acc));
  if (detail::track(tape, {&input})) {
    out.set_requires_grad(true);
    tape->record<SumNode>(input, out);
  }
  return out;
}

}  // namespace lpgd

// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdnas/nn/ops.hpp"

#include <algorithm>
#include <cstddef>

#include "fdnas/error.hpp"

namespace fdnas {
namespace {

using std::ptrdiff_t;
using std::size_t;

struct Spatial {
  size_t channels;
  size_t height;
  size_t width;
  size_t plane() const { return height * width; }
  size_t numel() const { return channels * height * width; }
};

// Valid output range [lo, hi) for a tap displaced by `d` along an axis of size n.
inline void tap_range(ptrdiff_t d, size_t n, size_t& lo, size_t& hi) {
  lo = d < 0 ? static_cast<size_t>(-d) : 0;
  hi = d > 0 ? (static_cast<size_t>(d) >= n ? 0 : n - static_cast<size_t>(d)) : n;
  if (lo > hi) lo = hi;
}

// Pointer to row r + dy, column x0 + dx of a plane; caller guarantees the
// position lies inside the plane.
template <typename T>
inline T* shifted(T* plane, size_t r, ptrdiff_t dy, size_t W, size_t x0, ptrdiff_t dx) {
  return plane + static_cast<size_t>(static_cast<ptrdiff_t>(r) + dy) * W +
         static_cast<size_t>(static_cast<ptrdiff_t>(x0) + dx);
}

// --- full convolution, stride 1, same padding -------------------------------

void conv_forward(const double* x, Spatial in, const double* w, const double* b, size_t cout,
                  size_t k, double* y) {
  const ptrdiff_t pad = static_cast<ptrdiff_t>(k / 2);
  const size_t H = in.height, W = in.width;
  for (size_t co = 0; co < cout; ++co) {
    double* yc = y + co * in.plane();
    std::fill(yc, yc + in.plane(), b[co]);
    for (size_t ci = 0; ci < in.channels; ++ci) {
      const double* xc = x + ci * in.plane();
      for (size_t ky = 0; ky < k; ++ky) {
        const ptrdiff_t dy = static_cast<ptrdiff_t>(ky) - pad;
        size_t y0, y1;
        tap_range(dy, H, y0, y1);
        for (size_t kx = 0; kx < k; ++kx) {
          const ptrdiff_t dx = static_cast<ptrdiff_t>(kx) - pad;
          size_t x0, x1;
          tap_range(dx, W, x0, x1);
          if (x0 == x1) continue;
          const double wv = w[((co * in.channels + ci) * k + ky) * k + kx];
          for (size_t r = y0; r < y1; ++r) {
            double* out = yc + r * W + x0;
            const double* src = shifted(xc, r, dy, W, x0, dx);
            for (size_t c = 0; c < x1 - x0; ++c) out[c] += wv * src[c];
          }
        }
      }
    }
  }
}

void conv_backward(const double* x, Spatial in, const double* w, size_t cout, size_t k,
                   const double* g, double* dx, double* dw, double* db) {
  const ptrdiff_t pad = static_cast<ptrdiff_t>(k / 2);
  const size_t H = in.height, W = in.width;
  for (size_t co = 0; co < cout; ++co) {
    const double* gc = g + co * in.plane();
    if (db) {
      double s = 0.0;
      for (size_t i = 0; i < in.plane(); ++i) s += gc[i];
      db[co] += s;
    }
    for (size_t ci = 0; ci < in.channels; ++ci) {
      const double* xc = x + ci * in.plane();
      double* dxc = dx ? dx + ci * in.plane() : nullptr;
      for (size_t ky = 0; ky < k; ++ky) {
        const ptrdiff_t dy = static_cast<ptrdiff_t>(ky) - pad;
        size_t y0, y1;
        tap_range(dy, H, y0, y1);
        for (size_t kx = 0; kx < k; ++kx) {
          const ptrdiff_t dxo = static_cast<ptrdiff_t>(kx) - pad;
          size_t x0, x1;
          tap_range(dxo, W, x0, x1);
          if (x0 == x1) continue;
          const size_t widx = ((co * in.channels + ci) * k + ky) * k + kx;
          const double wv = w[widx];
          const size_t n = x1 - x0;
          double acc = 0.0;
          for (size_t r = y0; r < y1; ++r) {
            const double* grow = gc + r * W + x0;
            if (dw) {
              const double* src = shifted(xc, r, dy, W, x0, dxo);
              for (size_t c = 0; c < n; ++c) acc += grow[c] * src[c];
            }
            if (dxc) {
              double* dst = shifted(dxc, r, dy, W, x0, dxo);
              for (size_t c = 0; c < n; ++c) dst[c] += wv * grow[c];
            }
          }
          if (dw) dw[widx] += acc;
        }
      }
    }
  }
}

// --- depthwise convolution -------------------------------------------------

void depthwise_forward(const double* x, Spatial in, const double* w, const double* b, size_t k,
                       double* y) {
  const ptrdiff_t pad = static_cast<ptrdiff_t>(k / 2);
  const size_t H = in.height, W = in.width;
  for (size_t ch = 0; ch < in.channels; ++ch) {
    double* yc = y + ch * in.plane();
    const double* xc = x + ch * in.plane();
    std::fill(yc, yc + in.plane(), b[ch]);
    for (size_t ky = 0; ky < k; ++ky) {
      const ptrdiff_t dy = static_cast<ptrdiff_t>(ky) - pad;
      size_t y0, y1;
      tap_range(dy, H, y0, y1);
      for (size_t kx = 0; kx < k; ++kx) {
        const ptrdiff_t dx = static_cast<ptrdiff_t>(kx) - pad;
        size_t x0, x1;
        tap_range(dx, W, x0, x1);
        if (x0 == x1) continue;
        const double wv = w[(ch * k + ky) * k + kx];
        for (size_t r = y0; r < y1; ++r) {
          double* out = yc + r * W + x0;
          const double* src = shifted(xc, r, dy, W, x0, dx);
          for (size_t c = 0; c < x1 - x0; ++c) out[c] += wv * src[c];
        }
      }
    }
  }
}

void depthwise_backward(const double* x, Spatial in, const double* w, size_t k, const double* g,
                        double* dx, double* dw, double* db) {
  const ptrdiff_t pad = static_cast<ptrdiff_t>(k / 2);
  const size_t H = in.height, W = in.width;
  for (size_t ch = 0; ch < in.channels; ++ch) {
    const double* gc = g + ch * in.plane();
    const double* xc = x + ch * in.plane();
    double* dxc = dx ? dx + ch * in.plane() : nullptr;
    if (db) {
      double s = 0.0;
      for (size_t i = 0; i < in.plane(); ++i) s += gc[i];
      db[ch] += s;
    }
    for (size_t ky = 0; ky < k; ++ky) {
      const ptrdiff_t dy = static_cast<ptrdiff_t>(ky) - pad;
      size_t y0, y1;
      tap_range(dy, H, y0, y1);
      for (size_t kx = 0; kx < k; ++kx) {
        const ptrdiff_t dxo = static_cast<ptrdiff_t>(kx) - pad;
        size_t x0, x1;
        tap_range(dxo, W, x0, x1);
        if (x0 == x1) continue;
        const size_t widx = (ch * k + ky) * k + kx;
        const double wv = w[widx];
        const size_t n = x1 - x0;
        double acc = 0.0;
        for (size_t r = y0; r < y1; ++r) {
          const double* grow = gc + r * W + x0;
          if (dw) {
            const double* src = shifted(xc, r, dy, W, x0, dxo);
            for (size_t c = 0; c < n; ++c) acc += grow[c] * src[c];
          }
          if (dxc) {
            double* dst = shifted(dxc, r, dy, W, x0, dxo);
            for (size_t c = 0; c < n; ++c) dst[c] += wv * grow[c];
          }
        }
        if (dw) dw[widx] += acc;
      }
    }
  }
}

// --- 1x1 convolution -------------------------------------------------------

void pointwise_forward(const double* x, size_t cin, size_t plane, const double* w, const double* b,
                       size_t cout, double* y) {
  for (size_t co = 0; co < cout; ++co) {
    double* yc = y + co * plane;
    std::fill(yc, yc + plane, b[co]);
    for (size_t ci = 0; ci < cin; ++ci) {
      const double wv = w[co * cin + ci];
      const double* xc = x + ci * plane;
      for (size_t i = 0; i < plane; ++i) yc[i] += wv * xc[i];
    }
  }
}

void pointwise_backward(const double* x, size_t cin, size_t plane, const double* w, size_t cout,
                        const double* g, double* dx, double* dw, double* db) {
  for (size_t co = 0; co < cout; ++co) {
    const double* gc = g + co * plane;
    if (db) {
      double s = 0.0;
      for (size_t i = 0; i < plane; ++i) s += gc[i];
      db[co] += s;
    }
    for (size_t ci = 0; ci < cin; ++ci) {
      const double* xc = x + ci * plane;
      if (dw) {
        double acc = 0.0;
        for (size_t i = 0; i < plane; ++i) acc += gc[i] * xc[i];
        dw[co * cin + ci] += acc;
      }
      if (dx) {
        const double wv = w[co * cin + ci];
        double* dxc = dx + ci * plane;
        for (size_t i = 0; i < plane; ++i) dxc[i] += wv * gc[i];
      }
    }
  }
}

// --- average pooling -------------------------------------------------------

void avgpool_forward(const double* x, Spatial in, size_t k, size_t stride, Spatial out, double* y) {
  const ptrdiff_t pad = stride == 1 ? static_cast<ptrdiff_t>(k / 2) : 0;
  const double scale = 1.0 / static_cast<double>(k * k);
  for (size_t ch = 0; ch < in.channels; ++ch) {
    const double* xc = x + ch * in.plane();
    double* yc = y + ch * out.plane();
    for (size_t r = 0; r < out.height; ++r) {
      for (size_t c = 0; c < out.width; ++c) {
        double s = 0.0;
        for (size_t ky = 0; ky < k; ++ky) {
          ptrdiff_t iy = static_cast<ptrdiff_t>(r * stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<ptrdiff_t>(in.height)) continue;
          for (size_t kx = 0; kx < k; ++kx) {
            ptrdiff_t ix = static_cast<ptrdiff_t>(c * stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<ptrdiff_t>(in.width)) continue;
            s += xc[static_cast<size_t>(iy) * in.width + static_cast<size_t>(ix)];
          }
        }
        yc[r * out.width + c] = s * scale;
      }
    }
  }
}

void avgpool_backward(Spatial in, size_t k, size_t stride, Spatial out, const double* g, double* dx) {
  const ptrdiff_t pad = stride == 1 ? static_cast<ptrdiff_t>(k / 2) : 0;
  const double scale = 1.0 / static_cast<double>(k * k);
  for (size_t ch = 0; ch < in.channels; ++ch) {
    double* dxc = dx + ch * in.plane();
    const double* gc = g + ch * out.plane();
    for (size_t r = 0; r < out.height; ++r) {
      for (size_t c = 0; c < out.width; ++c) {
        const double gv = gc[r * out.width + c] * scale;
        for (size_t ky = 0; ky < k; ++ky) {
          ptrdiff_t iy = static_cast<ptrdiff_t>(r * stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<ptrdiff_t>(in.height)) continue;
          for (size_t kx = 0; kx < k; ++kx) {
            ptrdiff_t ix = static_cast<ptrdiff_t>(c * stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<ptrdiff_t>(in.width)) continue;
            dxc[static_cast<size_t>(iy) * in.width + static_cast<size_t>(ix)] += gv;
          }
        }
      }
    }
  }
}

void relu_inplace(Tensor& t) {
  for (double& v : t.values()) v = v > 0.0 ? v : 0.0;
}

// g <- g * [post > 0]
void relu_mask(std::span<double> g, std::span<const double> post) {
  for (size_t i = 0; i < g.size(); ++i) {
    if (!(post[i] > 0.0)) g[i] = 0.0;
  }
}

Spatial spatial_of(const Shape& example) { return {example[0], example[1], example[2]}; }

void check_params(const OpKind& op, std::span<const Tensor> params, const Shape& in) {
  const auto expected = op_param_shapes(op, in);
  if (expected.size() != params.size()) {
    throw ShapeError(op_name(op) + ": expected " + std::to_string(expected.size()) +
                     " parameter tensors, got " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < expected.size(); ++i) {
    if (params[i].shape() != expected[i]) {
      throw ShapeError(op_name(op) + ": parameter " + std::to_string(i) + " has shape " +
                       shape_str(params[i].shape()) + ", expected " + shape_str(expected[i]));
    }
  }
}

}  // namespace

Shape example_shape(const Tensor& batch) {
  if (batch.rank() < 2) throw ShapeError("batched tensor needs rank >= 2, got " + shape_str(batch.shape()));
  return Shape(batch.shape().begin() + 1, batch.shape().end());
}

Shape with_batch(std::size_t batch, const Shape& example) {
  Shape s{batch};
  s.insert(s.end(), example.begin(), example.end());
  return s;
}

std::vector<std::uint8_t> OpCache::activation_pattern() const {
  std::vector<std::uint8_t> bits;
  for (size_t slot : relu_slots) {
    for (double v : saved[slot].values()) bits.push_back(v > 0.0 ? 1 : 0);
  }
  return bits;
}

OpForward op_forward(const OpKind& op, std::span<const Tensor> params, const Tensor& input) {
  const Shape in = example_shape(input);
  const Shape out = op_output_shape(op, in);
  check_params(op, params, in);
  require_finite(input, "operation input");

  const size_t B = input.dim(0);
  OpForward result;
  result.cache.kind = op.index();
  result.cache.input_shape = input.shape();
  result.cache.output_shape = with_batch(B, out);
  Tensor y(result.cache.output_shape);

  if (std::holds_alternative<Identity>(op)) {
    y = input;
  } else if (std::holds_alternative<Zero>(op)) {
    // already zero
  } else if (const auto* d = std::get_if<Dense>(&op)) {
    const size_t F = shape_numel(in), O = d->out_features;
    const double* W = params[0].data();
    const double* bias = params[1].data();
    for (size_t b = 0; b < B; ++b) {
      const double* x = input.data() + b * F;
      double* yb = y.data() + b * O;
      for (size_t o = 0; o < O; ++o) {
        const double* wr = W + o * F;
        double s = bias[o];
        for (size_t f = 0; f < F; ++f) s += wr[f] * x[f];
        yb[o] = s;
      }
    }
    result.cache.saved.push_back(input);
  } else if (const auto* c = std::get_if<Conv>(&op)) {
    const Spatial si = spatial_of(in);
    const Spatial so = spatial_of(out);
    for (size_t b = 0; b < B; ++b) {
      conv_forward(input.data() + b * si.numel(), si, params[0].data(), params[1].data(), c->channels,
                   c->kernel, y.data() + b * so.numel());
    }
    if (c->relu) relu_inplace(y);
    result.cache.saved.push_back(input);
    result.cache.saved.push_back(y);
    if (c->relu) result.cache.relu_slots.push_back(1);
  } else if (const auto* d = std::get_if<DepthwiseSepConv>(&op)) {
    const Spatial si = spatial_of(in);
    const size_t mid = si.channels * d->expansion;
    const Spatial sm{mid, si.height, si.width};
    const Spatial so = spatial_of(out);
    const bool expand = d->expansion > 1;
    const size_t p = expand ? 2 : 0;  // index of depthwise weights
    result.cache.saved.push_back(input);
    Tensor h1;
    if (expand) {
      h1 = Tensor(with_batch(B, {mid, si.height, si.width}));
      for (size_t b = 0; b < B; ++b) {
        pointwise_forward(input.data() + b * si.numel(), si.channels, si.plane(), params[0].data(),
                          params[1].data(), mid, h1.data() + b * sm.numel());
      }
      relu_inplace(h1);
    }
    const Tensor& dw_in = expand ? h1 : input;
    Tensor h2(with_batch(B, {mid, si.height, si.width}));
    for (size_t b = 0; b < B; ++b) {
      depthwise_forward(dw_in.data() + b * sm.numel(), sm, params[p].data(), params[p + 1].data(),
                        d->kernel, h2.data() + b * sm.numel());
    }
    relu_inplace(h2);
    for (size_t b = 0; b < B; ++b) {
      pointwise_forward(h2.data() + b * sm.numel(), mid, sm.plane(), params[p + 2].data(),
                        params[p + 3].data(), d->channels, y.data() + b * so.numel());
    }
    if (si.channels == d->channels) {
      for (size_t i = 0; i < y.size(); ++i) y[i] += input[i];
    }
    if (expand) {
      result.cache.saved.push_back(std::move(h1));
      result.cache.relu_slots.push_back(1);
    }
    result.cache.saved.push_back(std::move(h2));
    result.cache.relu_slots.push_back(result.cache.saved.size() - 1);
  } else if (const auto* a = std::get_if<AvgPool>(&op)) {
    const Spatial si = spatial_of(in);
    const Spatial so = spatial_of(out);
    for (size_t b = 0; b < B; ++b) {
      avgpool_forward(input.data() + b * si.numel(), si, a->kernel, a->stride, so, y.data() + b * so.numel());
    }
  }
  result.output = std::move(y);
  return result;
}

OpBackward op_backward(const OpKind& op, std::span<const Tensor> params, const OpCache& cache,
                       const Tensor& grad_out, GradRequest request) {
  if (cache.kind != op.index()) {
    throw ArgumentError("op_backward: cache was produced by a different operation kind");
  }
  if (grad_out.shape() != cache.output_shape) {
    throw ShapeError("op_backward: gradient shape " + shape_str(grad_out.shape()) +
                     " does not match cached output " + shape_str(cache.output_shape));
  }
  const Shape in(cache.input_shape.begin() + 1, cache.input_shape.end());
  check_params(op, params, in);
  const bool want_input = request != GradRequest::kParamsOnly;
  const bool want_params = request != GradRequest::kInputOnly;
  const size_t B = cache.input_shape[0];

  OpBackward result;
  if (want_input) result.grad_input = Tensor(cache.input_shape);
  if (want_params) {
    for (const Tensor& p : params) result.grad_params.emplace_back(p.shape());
  }

  if (std::holds_alternative<Identity>(op)) {
    if (want_input) result.grad_input = grad_out;
  } else if (std::holds_alternative<Zero>(op)) {
    // no dependence on the input
  } else if (const auto* d = std::get_if<Dense>(&op)) {
    const Tensor& x = cache.saved.at(0);
    const size_t F = shape_numel(in), O = d->out_features;
    const double* W = params[0].data();
    for (size_t b = 0; b < B; ++b) {
      const double* xb = x.data() + b * F;
      const double* gb = grad_out.data() + b * O;
      for (size_t o = 0; o < O; ++o) {
        const double g = gb[o];
        if (want_params) {
          double* dwr = result.grad_params[0].data() + o * F;
          for (size_t f = 0; f < F; ++f) dwr[f] += g * xb[f];
          result.grad_params[1][o] += g;
        }
        if (want_input) {
          const double* wr = W + o * F;
          double* dx = result.grad_input.data() + b * F;
          for (size_t f = 0; f < F; ++f) dx[f] += wr[f] * g;
        }
      }
    }
  } else if (const auto* c = std::get_if<Conv>(&op)) {
    const Tensor& x = cache.saved.at(0);
    const Spatial si = spatial_of(in);
    const Spatial so{c->channels, si.height, si.width};
    Tensor g = grad_out;
    if (c->relu) relu_mask(g.values(), cache.saved.at(1).values());
    for (size_t b = 0; b < B; ++b) {
      conv_backward(x.data() + b * si.numel(), si, params[0].data(), c->channels, c->kernel,
                    g.data() + b * so.numel(), want_input ? result.grad_input.data() + b * si.numel() : nullptr,
                    want_params ? result.grad_params[0].data() : nullptr,
                    want_params ? result.grad_params[1].data() : nullptr);
    }
  } else if (const auto* d = std::get_if<DepthwiseSepConv>(&op)) {
    const Spatial si = spatial_of(in);
    const size_t mid = si.channels * d->expansion;
    const Spatial sm{mid, si.height, si.width};
    const Spatial so{d->channels, si.height, si.width};
    const bool expand = d->expansion > 1;
    const size_t p = expand ? 2 : 0;
    const Tensor& x = cache.saved.at(0);
    const Tensor& h2 = cache.saved.at(expand ? 2 : 1);
    const Tensor* h1 = expand ? &cache.saved.at(1) : nullptr;
    auto grad_ptr = [&](size_t i) { return want_params ? result.grad_params[i].data() : nullptr; };

    // projection
    Tensor g2(h2.shape());
    for (size_t b = 0; b < B; ++b) {
      pointwise_backward(h2.data() + b * sm.numel(), mid, sm.plane(), params[p + 2].data(), d->channels,
                         grad_out.data() + b * so.numel(), g2.data() + b * sm.numel(), grad_ptr(p + 2),
                         grad_ptr(p + 3));
    }
    relu_mask(g2.values(), h2.values());
    // depthwise; its input gradient is needed whenever something sits below it
    const bool need_dw_input = expand || want_input;
    Tensor g1;
    if (need_dw_input) g1 = Tensor(expand ? h1->shape() : x.shape());
    const Tensor& dw_in = expand ? *h1 : x;
    for (size_t b = 0; b < B; ++b) {
      depthwise_backward(dw_in.data() + b * sm.numel(), sm, params[p].data(), d->kernel,
                         g2.data() + b * sm.numel(), need_dw_input ? g1.data() + b * sm.numel() : nullptr,
                         grad_ptr(p), grad_ptr(p + 1));
    }
    if (expand) {
      relu_mask(g1.values(), h1->values());
      for (size_t b = 0; b < B; ++b) {
        pointwise_backward(x.data() + b * si.numel(), si.channels, si.plane(), params[0].data(), mid,
                           g1.data() + b * sm.numel(),
                           want_input ? result.grad_input.data() + b * si.numel() : nullptr, grad_ptr(0),
                           grad_ptr(1));
      }
    } else if (want_input) {
      result.grad_input = std::move(g1);
    }
    if (want_input && si.channels == d->channels) {
      for (size_t i = 0; i < grad_out.size(); ++i) result.grad_input[i] += grad_out[i];
    }
  } else if (const auto* a = std::get_if<AvgPool>(&op)) {
    if (want_input) {
      const Spatial si = spatial_of(in);
      const Shape out(cache.output_shape.begin() + 1, cache.output_shape.end());
      const Spatial so = spatial_of(out);
      for (size_t b = 0; b < B; ++b) {
        avgpool_backward(si, a->kernel, a->stride, so, grad_out.data() + b * so.numel(),
                         result.grad_input.data() + b * si.numel());
      }
    }
  }
  return result;
}

}  // namespace fdnas

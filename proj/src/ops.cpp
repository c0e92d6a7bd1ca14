// Copyright 2026 The ATEN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aten/ops.hpp"

#include <algorithm>
#include <cmath>

#include "aten/cost.hpp"

namespace aten {

int conv_output_extent(int in, int kernel, const ConvGeometry& g) {
  const int pad = g.resolved_pad(kernel);
  return (in + 2 * pad - g.dilation * (kernel - 1) - 1) / g.stride + 1;
}

namespace {

struct ConvDims {
  int cin, h, w, cout, kh, kw, ho, wo, pad_y, pad_x;
};

ConvDims check_conv(const Tensor& input, const Tensor& weight,
                    const Tensor* bias, const ConvGeometry& g) {
  require_rank(input, 3, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  if (g.stride < 1 || g.dilation < 1) {
    throw ContractViolation("conv2d: stride and dilation must be >= 1");
  }
  ConvDims d{};
  d.cin = input.dim(0);
  d.h = input.dim(1);
  d.w = input.dim(2);
  d.cout = weight.dim(0);
  d.kh = weight.dim(2);
  d.kw = weight.dim(3);
  if (weight.dim(1) != d.cin) {
    throw ContractViolation("conv2d: kernel expects " +
                            std::to_string(weight.dim(1)) +
                            " input channels, got " + std::to_string(d.cin));
  }
  if (bias && !bias->empty() &&
      (bias->rank() != 1 || bias->dim(0) != d.cout)) {
    throw ContractViolation("conv2d: bias length must equal out channels");
  }
  d.pad_y = g.resolved_pad(d.kh);
  d.pad_x = g.resolved_pad(d.kw);
  if (g.dilation * (d.kh - 1) >= d.h + 2 * d.pad_y ||
      g.dilation * (d.kw - 1) >= d.w + 2 * d.pad_x) {
    throw ContractViolation("conv2d: dilated kernel larger than padded input");
  }
  d.ho = (d.h + 2 * d.pad_y - g.dilation * (d.kh - 1) - 1) / g.stride + 1;
  d.wo = (d.w + 2 * d.pad_x - g.dilation * (d.kw - 1) - 1) / g.stride + 1;
  return d;
}

// Range of output columns ox for which ox*stride - pad + offset lies in
// [0, extent).
void valid_range(int out_extent, int in_extent, int stride, int pad,
                 int offset, int* lo, int* hi) {
  // ox*stride >= pad - offset
  const int need = pad - offset;
  int first = need <= 0 ? 0 : (need + stride - 1) / stride;
  // ox*stride <= in_extent - 1 + pad - offset
  const int lim = in_extent - 1 + pad - offset;
  int last = lim < 0 ? -1 : lim / stride;
  *lo = std::max(first, 0);
  *hi = std::min(last + 1, out_extent);
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias,
              const ConvGeometry& g) {
  const ConvDims d = check_conv(input, weight, bias, g);
  require_finite(input, "conv2d");
  Tensor out({d.cout, d.ho, d.wo});
  const int s = g.stride;
  const int dil = g.dilation;
  const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t out_plane = static_cast<std::size_t>(d.ho) * d.wo;
  const double* in = input.data();
  const double* wt = weight.data();
  for (int co = 0; co < d.cout; ++co) {
    double* o = out.data() + co * out_plane;
    if (bias && !bias->empty()) std::fill(o, o + out_plane, (*bias)[co]);
    for (int ci = 0; ci < d.cin; ++ci) {
      const double* ip = in + ci * in_plane;
      for (int ky = 0; ky < d.kh; ++ky) {
        int oy_lo, oy_hi;
        valid_range(d.ho, d.h, s, d.pad_y, ky * dil, &oy_lo, &oy_hi);
        for (int kx = 0; kx < d.kw; ++kx) {
          const double wv =
              wt[((static_cast<std::size_t>(co) * d.cin + ci) * d.kh + ky) * d.kw + kx];
          int ox_lo, ox_hi;
          valid_range(d.wo, d.w, s, d.pad_x, kx * dil, &ox_lo, &ox_hi);
          const int xoff = kx * dil - d.pad_x;
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const int iy = oy * s - d.pad_y + ky * dil;
            const double* irow = ip + static_cast<std::size_t>(iy) * d.w;
            double* orow = o + static_cast<std::size_t>(oy) * d.wo;
            if (s == 1) {
              const double* src = irow + xoff;
              for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * src[ox];
            } else {
              for (int ox = ox_lo; ox < ox_hi; ++ox) {
                orow[ox] += wv * irow[ox * s + xoff];
              }
            }
          }
        }
      }
    }
  }
  record_macs(static_cast<std::uint64_t>(d.cout) * d.cin * d.kh * d.kw *
              out_plane);
  return out;
}

Tensor conv2d(const Tensor& input, const ConvKernel& kernel) {
  return conv2d(input, kernel.weight,
                kernel.bias.empty() ? nullptr : &kernel.bias, kernel.geometry);
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                          bool has_bias, const ConvGeometry& g,
                          const Tensor& grad_output) {
  const ConvDims d = check_conv(input, weight, nullptr, g);
  if (grad_output.dims() != Shape{d.cout, d.ho, d.wo}) {
    throw ContractViolation("conv2d_backward: grad shape mismatch");
  }
  ConvGrads grads{Tensor(input.dims()), Tensor(weight.dims()), Tensor()};
  const int s = g.stride;
  const int dil = g.dilation;
  const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t out_plane = static_cast<std::size_t>(d.ho) * d.wo;
  const double* in = input.data();
  const double* wt = weight.data();
  const double* go = grad_output.data();
  double* gi = grads.input.data();
  double* gw = grads.weight.data();
  for (int co = 0; co < d.cout; ++co) {
    const double* gplane = go + co * out_plane;
    for (int ci = 0; ci < d.cin; ++ci) {
      const double* ip = in + ci * in_plane;
      double* gip = gi + ci * in_plane;
      for (int ky = 0; ky < d.kh; ++ky) {
        int oy_lo, oy_hi;
        valid_range(d.ho, d.h, s, d.pad_y, ky * dil, &oy_lo, &oy_hi);
        for (int kx = 0; kx < d.kw; ++kx) {
          const std::size_t widx =
              ((static_cast<std::size_t>(co) * d.cin + ci) * d.kh + ky) * d.kw + kx;
          const double wv = wt[widx];
          int ox_lo, ox_hi;
          valid_range(d.wo, d.w, s, d.pad_x, kx * dil, &ox_lo, &ox_hi);
          const int xoff = kx * dil - d.pad_x;
          double acc = 0.0;
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const int iy = oy * s - d.pad_y + ky * dil;
            const double* irow = ip + static_cast<std::size_t>(iy) * d.w;
            double* girow = gip + static_cast<std::size_t>(iy) * d.w;
            const double* grow = gplane + static_cast<std::size_t>(oy) * d.wo;
            if (s == 1) {
              const double* src = irow + xoff;
              double* dst = girow + xoff;
              for (int ox = ox_lo; ox < ox_hi; ++ox) {
                acc += grow[ox] * src[ox];
                dst[ox] += wv * grow[ox];
              }
            } else {
              for (int ox = ox_lo; ox < ox_hi; ++ox) {
                acc += grow[ox] * irow[ox * s + xoff];
                girow[ox * s + xoff] += wv * grow[ox];
              }
            }
          }
          gw[widx] += acc;
        }
      }
    }
  }
  if (has_bias) {
    grads.bias = Tensor({d.cout});
    for (int co = 0; co < d.cout; ++co) {
      double acc = 0.0;
      const double* gplane = go + co * out_plane;
      for (std::size_t i = 0; i < out_plane; ++i) acc += gplane[i];
      grads.bias[co] = acc;
    }
  }
  record_macs(2ull * d.cout * d.cin * d.kh * d.kw * out_plane);
  return grads;
}

namespace {

// Clamped bilinear tap for one output position.
struct Tap {
  std::size_t i00, i01, i10, i11;
  double fx, fy;
  bool clamped_x, clamped_y;
};

Tap make_tap(double x, double y, int h, int w) {
  Tap t{};
  t.clamped_x = x < 0.0 || x > w - 1;
  t.clamped_y = y < 0.0 || y > h - 1;
  const double xc = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const double yc = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(xc));
  const int y0 = static_cast<int>(std::floor(yc));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  t.fx = xc - x0;
  t.fy = yc - y0;
  t.i00 = static_cast<std::size_t>(y0) * w + x0;
  t.i01 = static_cast<std::size_t>(y0) * w + x1;
  t.i10 = static_cast<std::size_t>(y1) * w + x0;
  t.i11 = static_cast<std::size_t>(y1) * w + x1;
  return t;
}

inline double lerp_exact(double a, double b, double f) {
  return f == 0.0 ? a : a + f * (b - a);
}

inline double tap_value(const double* p, const Tap& t) {
  const double top = lerp_exact(p[t.i00], p[t.i01], t.fx);
  if (t.fy == 0.0) return top;
  const double bottom = lerp_exact(p[t.i10], p[t.i11], t.fx);
  return top + t.fy * (bottom - top);
}

void check_coords(const Tensor& input, const Tensor& coords) {
  require_rank(input, 3, "bilinear_sample input");
  require_rank(coords, 3, "bilinear_sample coords");
  if (coords.dim(0) != 2) {
    throw ContractViolation("bilinear_sample: coords must have 2 channels, got " +
                            shape_to_string(coords.dims()));
  }
}

}  // namespace

Tensor bilinear_sample(const Tensor& input, const Tensor& coords) {
  check_coords(input, coords);
  require_finite(input, "bilinear_sample input");
  require_finite(coords, "bilinear_sample coords");
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int ho = coords.dim(1), wo = coords.dim(2);
  const std::size_t n = static_cast<std::size_t>(ho) * wo;
  std::vector<Tap> taps(n);
  for (std::size_t i = 0; i < n; ++i) {
    taps[i] = make_tap(coords[i], coords[n + i], h, w);
  }
  Tensor out({c, ho, wo});
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  for (int ch = 0; ch < c; ++ch) {
    const double* p = input.data() + ch * in_plane;
    double* o = out.data() + ch * n;
    for (std::size_t i = 0; i < n; ++i) o[i] = tap_value(p, taps[i]);
  }
  record_macs(4ull * c * n);
  return out;
}

SampleGrads bilinear_sample_backward(const Tensor& input, const Tensor& coords,
                                     const Tensor& grad_output) {
  check_coords(input, coords);
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int ho = coords.dim(1), wo = coords.dim(2);
  if (grad_output.dims() != Shape{c, ho, wo}) {
    throw ContractViolation("bilinear_sample_backward: grad shape mismatch");
  }
  const std::size_t n = static_cast<std::size_t>(ho) * wo;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  SampleGrads g{Tensor(input.dims()), Tensor(coords.dims())};
  for (std::size_t i = 0; i < n; ++i) {
    const Tap t = make_tap(coords[i], coords[n + i], h, w);
    const double w00 = (1 - t.fx) * (1 - t.fy), w01 = t.fx * (1 - t.fy);
    const double w10 = (1 - t.fx) * t.fy, w11 = t.fx * t.fy;
    double gx = 0.0, gy = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double* p = input.data() + ch * in_plane;
      double* gp = g.input.data() + ch * in_plane;
      const double go = grad_output[ch * n + i];
      gp[t.i00] += w00 * go;
      gp[t.i01] += w01 * go;
      gp[t.i10] += w10 * go;
      gp[t.i11] += w11 * go;
      const double v00 = p[t.i00], v01 = p[t.i01], v10 = p[t.i10], v11 = p[t.i11];
      gx += go * ((1 - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
      gy += go * ((1 - t.fx) * (v10 - v00) + t.fx * (v11 - v01));
    }
    g.coords[i] = t.clamped_x ? 0.0 : gx;
    g.coords[n + i] = t.clamped_y ? 0.0 : gy;
  }
  record_macs(8ull * c * n);
  return g;
}

Tensor identity_grid(int height, int width) {
  Tensor g({2, height, width});
  const std::size_t n = static_cast<std::size_t>(height) * width;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      g[i] = x;
      g[n + i] = y;
    }
  }
  return g;
}

namespace {

struct AxisTap {
  int i0, i1;
  double f;
};

std::vector<AxisTap> axis_taps(int in, int out) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    taps[o] = {i0, std::min(i0 + 1, in - 1), src - i0};
  }
  return taps;
}

}  // namespace

Tensor resize_bilinear(const Tensor& input, int out_h, int out_w) {
  require_rank(input, 3, "resize_bilinear");
  if (out_h < 1 || out_w < 1) {
    throw ContractViolation("resize_bilinear: output extent must be >= 1");
  }
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const auto ty = axis_taps(h, out_h);
  const auto tx = axis_taps(w, out_w);
  Tensor out({c, out_h, out_w});
  for (int ch = 0; ch < c; ++ch) {
    const double* p = input.data() + static_cast<std::size_t>(ch) * h * w;
    double* o = out.data() + static_cast<std::size_t>(ch) * out_h * out_w;
    for (int y = 0; y < out_h; ++y) {
      const double* r0 = p + static_cast<std::size_t>(ty[y].i0) * w;
      const double* r1 = p + static_cast<std::size_t>(ty[y].i1) * w;
      for (int x = 0; x < out_w; ++x) {
        const double top = lerp_exact(r0[tx[x].i0], r0[tx[x].i1], tx[x].f);
        double v = top;
        if (ty[y].f != 0.0) {
          const double bottom = lerp_exact(r1[tx[x].i0], r1[tx[x].i1], tx[x].f);
          v = top + ty[y].f * (bottom - top);
        }
        o[static_cast<std::size_t>(y) * out_w + x] = v;
      }
    }
  }
  record_macs(4ull * c * out_h * out_w);
  return out;
}

Tensor resize_bilinear_backward(const Tensor& grad_output, int in_h, int in_w) {
  require_rank(grad_output, 3, "resize_bilinear_backward");
  const int c = grad_output.dim(0), out_h = grad_output.dim(1),
            out_w = grad_output.dim(2);
  const auto ty = axis_taps(in_h, out_h);
  const auto tx = axis_taps(in_w, out_w);
  Tensor g({c, in_h, in_w});
  for (int ch = 0; ch < c; ++ch) {
    double* p = g.data() + static_cast<std::size_t>(ch) * in_h * in_w;
    const double* go = grad_output.data() + static_cast<std::size_t>(ch) * out_h * out_w;
    for (int y = 0; y < out_h; ++y) {
      const double wy1 = ty[y].f, wy0 = 1.0 - wy1;
      double* r0 = p + static_cast<std::size_t>(ty[y].i0) * in_w;
      double* r1 = p + static_cast<std::size_t>(ty[y].i1) * in_w;
      for (int x = 0; x < out_w; ++x) {
        const double v = go[static_cast<std::size_t>(y) * out_w + x];
        const double wx1 = tx[x].f, wx0 = 1.0 - wx1;
        r0[tx[x].i0] += wy0 * wx0 * v;
        r0[tx[x].i1] += wy0 * wx1 * v;
        r1[tx[x].i0] += wy1 * wx0 * v;
        r1[tx[x].i1] += wy1 * wx1 * v;
      }
    }
  }
  record_macs(4ull * c * out_h * out_w);
  return g;
}

Tensor upsample_bilinear(const Tensor& input, int factor) {
  if (factor < 1) {
    throw ContractViolation("upsample_bilinear: factor must be >= 1");
  }
  require_rank(input, 3, "upsample_bilinear");
  return resize_bilinear(input, input.dim(1) * factor, input.dim(2) * factor);
}

Tensor avg_pool(const Tensor& input, int factor) {
  require_rank(input, 3, "avg_pool");
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (factor < 1 || h % factor || w % factor) {
    throw ContractViolation("avg_pool: extents must be divisible by factor");
  }
  const int oh = h / factor, ow = w / factor;
  Tensor out({c, oh, ow});
  const double norm = 1.0 / (factor * factor);
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) {
            acc += input.at(ch, y * factor + dy, x * factor + dx);
          }
        }
        out.at(ch, y, x) = acc * norm;
      }
    }
  }
  return out;
}

namespace {

template <typename F>
Tensor binary(const Tensor& a, const Tensor& b, const char* what, F f) {
  require_same_shape(a, b, what);
  Tensor out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  record_macs(a.size());
  return out;
}

template <typename F>
Tensor unary(const Tensor& a, F f) {
  Tensor out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  record_macs(a.size());
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(a, b, "sub", [](double x, double y) { return x - y; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(a, b, "mul", [](double x, double y) { return x * y; });
}
Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x * s; });
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& t) { return unary(t, sigmoid_scalar); }
Tensor tanh(const Tensor& t) {
  return unary(t, [](double x) { return std::tanh(x); });
}
Tensor relu(const Tensor& t) {
  return unary(t, [](double x) { return x > 0.0 ? x : 0.0; });
}

}  // namespace aten

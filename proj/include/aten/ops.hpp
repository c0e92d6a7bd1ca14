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

// Dense kernels on (C,H,W) tensors. Every function here is pure: identical
// inputs give bitwise identical outputs.

#pragma once

#include "aten/tensor.hpp"

namespace aten {

// Geometry of a 2-D convolution. A negative pad selects "same" padding,
// dilation * (k - 1) / 2.
struct ConvGeometry {
  int stride = 1;
  int dilation = 1;
  int pad = -1;

  int resolved_pad(int kernel_extent) const {
    return pad >= 0 ? pad : dilation * (kernel_extent - 1) / 2;
  }
};

int conv_output_extent(int in, int kernel, const ConvGeometry& g);

// Weights (out, in, kh, kw) plus optional bias (out).
struct ConvKernel {
  Tensor weight;
  Tensor bias;  // empty means no bias
  ConvGeometry geometry;

  int out_channels() const { return weight.dim(0); }
  int in_channels() const { return weight.dim(1); }
  int kernel_h() const { return weight.dim(2); }
  int kernel_w() const { return weight.dim(3); }
};

// Zero-padded cross-correlation.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias,
              const ConvGeometry& g);
Tensor conv2d(const Tensor& input, const ConvKernel& kernel);

struct ConvGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;  // empty when the forward had no bias
};
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                          bool has_bias, const ConvGeometry& g,
                          const Tensor& grad_output);

// Samples input (C,H,W) at absolute positions coords (2,Ho,Wo), channel 0
// = x (column), channel 1 = y (row). Positions are clamped to the valid
// border before interpolation.
Tensor bilinear_sample(const Tensor& input, const Tensor& coords);

struct SampleGrads {
  Tensor input;
  Tensor coords;
};
// Coordinate gradients are zero where the position was clamped.
SampleGrads bilinear_sample_backward(const Tensor& input, const Tensor& coords,
                                     const Tensor& grad_output);

// (2,H,W) grid whose value at (y,x) is (x,y).
Tensor identity_grid(int height, int width);

// Resizes (C,h,w) to (C,oh,ow), half-pixel centers (align_corners = false).
Tensor resize_bilinear(const Tensor& input, int out_h, int out_w);
Tensor resize_bilinear_backward(const Tensor& grad_output, int in_h, int in_w);
Tensor upsample_bilinear(const Tensor& input, int factor);

// Mean over non-overlapping factor x factor blocks.
Tensor avg_pool(const Tensor& input, int factor);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor sigmoid(const Tensor& t);
Tensor tanh(const Tensor& t);
Tensor relu(const Tensor& t);

double sigmoid_scalar(double x);

}  // namespace aten

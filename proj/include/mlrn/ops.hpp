#pragma once

#include "mlrn/tensor.hpp"

namespace mlrn {

struct Padding {
  Index h = 0;
  Index w = 0;
};

/// Convolution weights (c_out, c_in, k_h, k_w), bias (1, c_out, 1, 1), stride 1.
struct ConvParams {
  Tensor weight;
  Tensor bias;
  Padding padding;

  Index c_out() const { return weight.shape().n; }
  Index c_in() const { return weight.shape().c; }
  Index k_h() const { return weight.shape().h; }
  Index k_w() const { return weight.shape().w; }
  Index parameter_count() const { return weight.shape().numel() + bias.shape().numel(); }

  /// Zero-valued trainable parameters with same-size padding. Kernels must be odd.
  static ConvParams same(Index c_in, Index c_out, Index k_h, Index k_w);
};

Tensor conv2d(const Tensor& input, const ConvParams& params);
Tensor relu(const Tensor& input);
Tensor concat_channels(std::span<const Tensor> inputs);
Tensor add(const Tensor& a, const Tensor& b);

/// Depth-to-space: out[n, o, y*r+dy, x*r+dx] = in[n, o*r*r + dy*r + dx, y, x].
Tensor pixel_shuffle(const Tensor& input, Index r);
/// Exact inverse of pixel_shuffle.
Tensor pixel_unshuffle(const Tensor& input, Index r);

/// Mean absolute error; the target never receives a gradient.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

Tensor sum(const Tensor& input);
Tensor scale(const Tensor& input, double factor);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }

}  // namespace mlrn

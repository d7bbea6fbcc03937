#pragma once

#include "mlrn/image.hpp"

#include <Eigen/SparseCore>

namespace mlrn {

/// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

/// How taps falling outside the source are folded back in. MATLAB imresize
/// mirrors (0 1 2 ... | ... 2 1 0 ordering with the edge sample repeated).
enum class Border { Symmetric, Replicate };

/// Sparse (out x in) interpolation matrix along one axis, matching MATLAB
/// imresize with the bicubic kernel: half-pixel centres, antialiasing when
/// shrinking, rows normalized to sum to one.
Eigen::SparseMatrix<double, Eigen::RowMajor> resize_weights(Eigen::Index in_size, Eigen::Index out_size,
                                                           Border border = Border::Symmetric);

/// Unquantized bicubic resize of every plane; rows are resampled first.
template <typename Derived>
PlaneT<typename Derived::Scalar> bicubic_resize(const Eigen::ArrayBase<Derived>& plane, Eigen::Index out_h,
                                                Eigen::Index out_w, Border border = Border::Symmetric) {
  using Scalar = typename Derived::Scalar;
  const Eigen::SparseMatrix<Scalar, Eigen::RowMajor> wr = resize_weights(plane.rows(), out_h, border).template cast<Scalar>();
  const Eigen::SparseMatrix<Scalar, Eigen::RowMajor> wc = resize_weights(plane.cols(), out_w, border).template cast<Scalar>();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tmp = wr * plane.matrix();
  return (tmp * wc.transpose()).array();
}

Image bicubic_resize(const Image& img, Eigen::Index out_h, Eigen::Index out_w, Border border = Border::Symmetric);

}  // namespace mlrn

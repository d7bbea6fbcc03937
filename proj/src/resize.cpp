#include "mlrn/resize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mlrn {

double cubic_kernel(double x) {
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> resize_weights(Eigen::Index in_size, Eigen::Index out_size, Border border) {
  if (in_size <= 0 || out_size <= 0) throw std::invalid_argument("resize_weights: sizes must be positive");
  const double scale = static_cast<double>(out_size) / static_cast<double>(in_size);
  const bool antialias = scale < 1.0;
  const double kernel_width = antialias ? 4.0 / scale : 4.0;
  const auto taps = static_cast<Eigen::Index>(std::ceil(kernel_width)) + 2;

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> weights(static_cast<std::size_t>(taps));
  for (Eigen::Index i = 0; i < out_size; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / scale - 0.5;
    const auto left = static_cast<Eigen::Index>(std::floor(u - kernel_width / 2.0));
    double total = 0.0;
    for (Eigen::Index t = 0; t < taps; ++t) {
      const double d = u - static_cast<double>(left + t);
      const double w = antialias ? scale * cubic_kernel(scale * d) : cubic_kernel(d);
      weights[t] = w;
      total += w;
    }
    for (Eigen::Index t = 0; t < taps; ++t) {
      if (weights[t] == 0.0) continue;
      Eigen::Index j = left + t;
      if (border == Border::Replicate) {
        j = std::clamp<Eigen::Index>(j, 0, in_size - 1);
      } else {
        const Eigen::Index period = 2 * in_size;
        j = ((j % period) + period) % period;
        if (j >= in_size) j = period - 1 - j;
      }
      triplets.emplace_back(i, j, weights[t] / total);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(out_size, in_size);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Image bicubic_resize(const Image& img, Eigen::Index out_h, Eigen::Index out_w, Border border) {
  Image out;
  for (const Plane& p : img.planes) out.planes.push_back(bicubic_resize(p, out_h, out_w, border));
  return out;
}

}  // namespace mlrn

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace mlrn {

template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Plane = PlaneT<double>;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planar image, one plane per channel, samples on the 0..255 scale.
struct Image {
  std::vector<Plane> planes;

  Image() = default;
  Image(Eigen::Index height, Eigen::Index width, Eigen::Index channels, double fill = 0.0);
  explicit Image(std::vector<Plane> p) : planes(std::move(p)) {}

  Eigen::Index height() const { return planes.empty() ? 0 : planes.front().rows(); }
  Eigen::Index width() const { return planes.empty() ? 0 : planes.front().cols(); }
  Eigen::Index channels() const { return static_cast<Eigen::Index>(planes.size()); }

  Image crop(Eigen::Index y, Eigen::Index x, Eigen::Index h, Eigen::Index w) const;
  bool operator==(const Image& other) const;
};

/// Round half away from zero, then clamp to [0, 255].
double quantize_sample(double v);
Image quantize(const Image& img);

Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);
/// Quarter turn counter-clockwise.
Image rotate90(const Image& img);

/// 8-bit gray or RGB PNG. RGBA / gray+alpha lose their alpha channel with a
/// warning on stderr; 16-bit files are rejected.
Image load_image(const std::filesystem::path& path);
/// Writes the quantized image as 8-bit PNG.
void save_image(const Image& img, const std::filesystem::path& path);

}  // namespace mlrn

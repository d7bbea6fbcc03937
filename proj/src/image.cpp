#include "mlrn/image.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <iostream>
#include <memory>

namespace mlrn {

Image::Image(Eigen::Index height, Eigen::Index width, Eigen::Index channels, double fill)
    : planes(static_cast<std::size_t>(channels), Plane::Constant(height, width, fill)) {}

Image Image::crop(Eigen::Index y, Eigen::Index x, Eigen::Index h, Eigen::Index w) const {
  if (y < 0 || x < 0 || h < 0 || w < 0 || y + h > height() || x + w > width()) {
    throw std::out_of_range("crop window outside image");
  }
  Image out;
  for (const Plane& p : planes) out.planes.emplace_back(p.block(y, x, h, w));
  return out;
}

bool Image::operator==(const Image& other) const {
  if (channels() != other.channels() || height() != other.height() || width() != other.width()) return false;
  for (std::size_t c = 0; c < planes.size(); ++c) {
    if ((planes[c] != other.planes[c]).any()) return false;
  }
  return true;
}

double quantize_sample(double v) {
  const double r = std::round(v);  // half away from zero
  return r < 0.0 ? 0.0 : (r > 255.0 ? 255.0 : r);
}

Image quantize(const Image& img) {
  Image out;
  for (const Plane& p : img.planes) out.planes.emplace_back(p.unaryExpr(&quantize_sample));
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out;
  for (const Plane& p : img.planes) out.planes.emplace_back(p.rowwise().reverse());
  return out;
}

Image flip_vertical(const Image& img) {
  Image out;
  for (const Plane& p : img.planes) out.planes.emplace_back(p.colwise().reverse());
  return out;
}

Image rotate90(const Image& img) {
  Image out;
  for (const Plane& p : img.planes) out.planes.emplace_back(p.transpose().colwise().reverse());
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void on_png_error(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = message;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }

  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, on_png_error, on_png_warning);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& png;
    png_infop& info;
    ~Guard() { png_destroy_read_struct(&png, &info, nullptr); }
  } guard{png, info};

  // Locals written after setjmp are declared before it.
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0;
  volatile bool dropped_alpha = false;
  int bit_depth = 0;

  if (setjmp(png_jmpbuf(png))) throw IoError("failed to decode " + path.string() + ": " + error);

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) {
    throw IoError(path.string() + ": unsupported bit depth 16 (only 8-bit PNG is accepted)");
  }
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS) || (color & PNG_COLOR_MASK_ALPHA)) {
    png_set_strip_alpha(png);
    dropped_alpha = true;
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  if (dropped_alpha) std::cerr << "warning: " << path.string() << ": alpha channel dropped\n";
  if (channels != 1 && channels != 3) throw IoError(path.string() + ": unsupported channel layout");

  Image img(height, width, channels);
  for (png_uint_32 y = 0; y < height; ++y)
    for (png_uint_32 x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) img.planes[c](y, x) = rows[y][x * channels + c];
  return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const auto channels = img.channels();
  if (channels != 1 && channels != 3) throw IoError("save_image: need 1 or 3 channels, got " + std::to_string(channels));
  const Image q = quantize(img);
  std::vector<png_byte> buffer(static_cast<std::size_t>(img.height() * img.width() * channels));
  for (Eigen::Index y = 0; y < img.height(); ++y)
    for (Eigen::Index x = 0; x < img.width(); ++x)
      for (Eigen::Index c = 0; c < channels; ++c)
        buffer[static_cast<std::size_t>((y * img.width() + x) * channels + c)] =
            static_cast<png_byte>(q.planes[c](y, x));

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw IoError("cannot write " + path.string() + ": " + message);
  }
}

}  // namespace mlrn

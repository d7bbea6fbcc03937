#include "mlrn/dataset.hpp"

#include "mlrn/parallel.hpp"
#include "mlrn/resize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fs = std::filesystem;

namespace mlrn {

namespace {

// Means on a 2^-32 grid keep x - m and (x - m) + m exact for 8-bit samples.
double snap_mean(double m) { return std::ldexp(std::round(std::ldexp(m, 32)), -32); }

}  // namespace

DatasetSpec DatasetSpec::from_root(const fs::path& root, Index scale, Split split) {
  DatasetSpec spec;
  spec.hr_dir = root / "HR";
  spec.scale = scale;
  spec.split = split;
  const fs::path lr = root / ("LR_x" + std::to_string(scale));
  if (fs::is_directory(lr)) spec.lr_dir = lr;
  return spec;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.stem().string() < b.stem().string(); });
  return files;
}

ImagePair degrade(const Image& hr, Index scale, std::string source_id) {
  if (scale < 2 || scale > 4) throw std::invalid_argument("degrade: scale must be 2, 3 or 4");
  if (hr.height() < scale || hr.width() < scale) {
    throw std::invalid_argument("degrade: image smaller than the scale factor");
  }
  ImagePair pair;
  pair.scale = scale;
  pair.source_id = std::move(source_id);
  const Index h = hr.height() / scale * scale;
  const Index w = hr.width() / scale * scale;
  pair.hr = hr.crop(0, 0, h, w);
  pair.lr = quantize(bicubic_resize(pair.hr, h / scale, w / scale));
  return pair;
}

std::vector<ImagePair> load_dataset(const DatasetSpec& spec) {
  const std::vector<fs::path> hr_files = list_images(spec.hr_dir);
  if (hr_files.empty()) throw IoError("no PNG images in " + spec.hr_dir.string());

  std::vector<fs::path> lr_files;
  if (spec.lr_dir) {
    lr_files = list_images(*spec.lr_dir);
    bool match = lr_files.size() == hr_files.size();
    for (std::size_t i = 0; match && i < hr_files.size(); ++i) match = hr_files[i].stem() == lr_files[i].stem();
    if (!match) throw IoError("HR and LR file stems differ in " + spec.root().string());
  }

  std::vector<ImagePair> pairs(hr_files.size());
  parallel_for(static_cast<Index>(hr_files.size()), [&](Index i) {
    const Image hr = load_image(hr_files[i]);
    const std::string id = hr_files[i].stem().string();
    if (lr_files.empty()) {
      pairs[i] = degrade(hr, spec.scale, id);
      return;
    }
    ImagePair p;
    p.scale = spec.scale;
    p.source_id = id;
    p.lr = load_image(lr_files[i]);
    const Index h = p.lr.height() * spec.scale;
    const Index w = p.lr.width() * spec.scale;
    if (h > hr.height() || w > hr.width()) throw IoError("LR image larger than HR/scale: " + id);
    p.hr = hr.crop(0, 0, h, w);
    pairs[i] = std::move(p);
  });
  return pairs;
}

std::vector<double> compute_dataset_mean(const DatasetSpec& spec) {
  const std::vector<fs::path> files = list_images(spec.hr_dir);
  if (files.empty()) throw std::invalid_argument("compute_dataset_mean: empty dataset");
  std::vector<double> sum;
  double count = 0.0;
  for (const fs::path& f : files) {
    const Image img = load_image(f);
    if (sum.empty()) sum.assign(static_cast<std::size_t>(img.channels()), 0.0);
    if (static_cast<std::size_t>(img.channels()) != sum.size()) {
      throw IoError("mixed channel counts in " + spec.hr_dir.string());
    }
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += img.planes[c].sum();
    count += static_cast<double>(img.height() * img.width());
  }
  for (double& s : sum) s = snap_mean(s / count);
  return sum;
}

std::vector<double> cached_dataset_mean(const DatasetSpec& spec) {
  const fs::path cache = spec.root() / "mean_rgb.json";
  if (fs::exists(cache)) {
    std::ifstream in(cache);
    return nlohmann::json::parse(in).at("mean_rgb").get<std::vector<double>>();
  }
  std::vector<double> mean = compute_dataset_mean(spec);
  std::ofstream out(cache);
  if (out) out << nlohmann::json{{"mean_rgb", mean}}.dump(2) << '\n';
  return mean;
}

PatchPair sample_patch(const ImagePair& pair, Index patch_hr, Rng& rng) {
  const Index r = pair.scale;
  if (patch_hr <= 0 || patch_hr % r != 0) throw std::invalid_argument("sample_patch: patch size not divisible by scale");
  const Index patch_lr = patch_hr / r;
  if (pair.lr.height() < patch_lr || pair.lr.width() < patch_lr) {
    throw std::invalid_argument("sample_patch: image " + pair.source_id + " smaller than the patch");
  }
  std::uniform_int_distribution<Index> dy(0, pair.lr.height() - patch_lr);
  std::uniform_int_distribution<Index> dx(0, pair.lr.width() - patch_lr);
  PatchPair p;
  p.lr_y = dy(rng);
  p.lr_x = dx(rng);
  p.hr_y = p.lr_y * r;
  p.hr_x = p.lr_x * r;
  p.lr = pair.lr.crop(p.lr_y, p.lr_x, patch_lr, patch_lr);
  p.hr = pair.hr.crop(p.hr_y, p.hr_x, patch_hr, patch_hr);
  return p;
}

AugmentDraw draw_augment(Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  AugmentDraw d;
  d.hflip = coin(rng);
  d.vflip = coin(rng);
  d.rot90 = coin(rng);
  return d;
}

Image apply_augment(const Image& img, const AugmentDraw& draw) {
  Image out = img;
  if (draw.hflip) out = flip_horizontal(out);
  if (draw.vflip) out = flip_vertical(out);
  if (draw.rot90) out = rotate90(out);
  return out;
}

void augment(PatchPair& patch, Rng& rng) {
  const AugmentDraw d = draw_augment(rng);
  patch.lr = apply_augment(patch.lr, d);
  patch.hr = apply_augment(patch.hr, d);
}

namespace {

Image shift(const Image& img, std::span<const double> mean, double sign) {
  if (static_cast<Index>(mean.size()) != img.channels()) {
    throw std::invalid_argument("mean has " + std::to_string(mean.size()) + " entries for " +
                                std::to_string(img.channels()) + " channels");
  }
  Image out;
  for (std::size_t c = 0; c < mean.size(); ++c) out.planes.emplace_back(img.planes[c] + sign * snap_mean(mean[c]));
  return out;
}

}  // namespace

Image normalize(const Image& img, std::span<const double> mean_rgb) { return shift(img, mean_rgb, -1.0); }

Image denormalize(const Image& img, std::span<const double> mean_rgb) { return shift(img, mean_rgb, 1.0); }

Tensor to_tensor(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("to_tensor: no images");
  const Image& first = images.front();
  const Shape shape{static_cast<Index>(images.size()), first.channels(), first.height(), first.width()};
  Values v(shape.numel());
  Index offset = 0;
  for (const Image& img : images) {
    if (img.channels() != shape.c || img.height() != shape.h || img.width() != shape.w) {
      throw ShapeError("to_tensor: images differ in size");
    }
    for (const Plane& p : img.planes) {
      v.segment(offset, shape.plane()) = p.reshaped<Eigen::RowMajor>();
      offset += shape.plane();
    }
  }
  return Tensor::from_values(shape, std::move(v));
}

Image image_from_tensor(const Tensor& t, Index n) {
  const Shape s = t.shape();
  if (n < 0 || n >= s.n) throw ShapeError("image_from_tensor: batch index out of range");
  Image img;
  for (Index c = 0; c < s.c; ++c) {
    const Values seg = t.values().segment((n * s.c + c) * s.plane(), s.plane());
    img.planes.emplace_back(seg.reshaped<Eigen::RowMajor>(s.h, s.w));
  }
  return img;
}

}  // namespace mlrn

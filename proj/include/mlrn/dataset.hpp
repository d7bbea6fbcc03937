#pragma once

#include "mlrn/image.hpp"
#include "mlrn/tensor.hpp"

#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mlrn {

using Rng = std::mt19937_64;

struct ImagePair {
  Image hr;
  Image lr;
  Index scale = 2;
  std::string source_id;
};

enum class Split { Train, Val, Test };

struct DatasetSpec {
  std::filesystem::path hr_dir;
  std::optional<std::filesystem::path> lr_dir;
  Index scale = 2;
  Split split = Split::Train;

  /// <root>/HR, plus <root>/LR_x{r} when that directory exists.
  static DatasetSpec from_root(const std::filesystem::path& root, Index scale, Split split = Split::Train);
  std::filesystem::path root() const { return hr_dir.parent_path(); }
};

/// PNG files of a directory, sorted by stem.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Top-left crop to multiples of r, then bicubic downscale and quantize.
ImagePair degrade(const Image& hr, Index scale, std::string source_id = {});

/// Every pair of the dataset in stem order. Missing LR files are generated.
std::vector<ImagePair> load_dataset(const DatasetSpec& spec);

/// Per-channel mean over every HR pixel of the dataset.
std::vector<double> compute_dataset_mean(const DatasetSpec& spec);
/// Reads <root>/mean_rgb.json if present, otherwise computes and writes it.
std::vector<double> cached_dataset_mean(const DatasetSpec& spec);

struct PatchPair {
  Image lr;
  Image hr;
  Index lr_y = 0;
  Index lr_x = 0;
  Index hr_y = 0;
  Index hr_x = 0;
};

PatchPair sample_patch(const ImagePair& pair, Index patch_hr, Rng& rng);

struct AugmentDraw {
  bool hflip = false;
  bool vflip = false;
  bool rot90 = false;
};

AugmentDraw draw_augment(Rng& rng);
Image apply_augment(const Image& img, const AugmentDraw& draw);
void augment(PatchPair& patch, Rng& rng);

Image normalize(const Image& img, std::span<const double> mean_rgb);
Image denormalize(const Image& img, std::span<const double> mean_rgb);

/// Stacks equally sized images into an (n, c, h, w) tensor.
Tensor to_tensor(std::span<const Image> images);
Image image_from_tensor(const Tensor& t, Index n = 0);

}  // namespace mlrn

#pragma once

#include "mlrn/dataset.hpp"
#include "mlrn/model.hpp"
#include "mlrn/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mlrn {

struct TrainConfig {
  Index batch_size = 16;
  Index patch_hr = 192;
  double lr0 = 1e-4;
  Index halve_every = 200;
  Index iters_per_epoch = 1000;
  Index epochs = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;  // patch and augmentation stream
  Index eval_every = 10;

  void validate() const;
  AdamHyper adam() const { return {beta1, beta2, eps}; }
  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  Index epoch = 0;
  double mean_l1_loss = 0.0;
  double lr = 0.0;
  std::optional<double> val_psnr_db;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::optional<Index> best_epoch;
  double best_val_psnr_db = 0.0;
};

struct TrainOutputs {
  /// When set: train_log.csv and checkpoints/ are written here.
  std::optional<std::filesystem::path> dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// One minibatch of aligned, augmented, normalized patches.
struct Batch {
  Tensor lr;
  Tensor hr;
};

/// Draws `batch_size` (image, patch, augmentation) triples from `rng`.
Batch sample_batch(const std::vector<ImagePair>& pairs, const TrainConfig& config, const std::vector<double>& mean_rgb,
                   Rng& rng);

/// Validates the data against the model and config before any step runs.
void check_training_inputs(const Model& model, const std::vector<ImagePair>& train_set,
                           const std::vector<ImagePair>& val_set, const std::vector<double>& mean_rgb,
                           const TrainConfig& config);

/// Validation images default to the last ten training images when val_set
/// is empty.
TrainResult train(Model& model, const std::vector<ImagePair>& train_set, const std::vector<ImagePair>& val_set,
                  const std::vector<double>& mean_rgb, const TrainConfig& config, const TrainOutputs& outputs = {});

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochRecord& record);

/// "epoch_0007" style checkpoint stem inside <dir>/checkpoints.
std::filesystem::path checkpoint_stem(const std::filesystem::path& dir, Index epoch);

}  // namespace mlrn

#include "mlrn/train.hpp"

#include "mlrn/evaluate.hpp"


#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace mlrn {

void TrainConfig::validate() const {
  auto positive = [](Index v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string("train.") + name + " must be positive");
  };
  positive(batch_size, "batch_size");
  positive(patch_hr, "patch_hr");
  positive(halve_every, "halve_every");
  positive(iters_per_epoch, "iters_per_epoch");
  positive(epochs, "epochs");
  positive(eval_every, "eval_every");
  if (!(lr0 >= 0.0)) throw std::invalid_argument("train.lr0 must be non-negative");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw std::invalid_argument("train.beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("train.beta2 must lie in (0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("train.eps must be positive");
}

Batch sample_batch(const std::vector<ImagePair>& pairs, const TrainConfig& config, const std::vector<double>& mean_rgb,
                   Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  std::vector<Image> lr, hr;
  lr.reserve(static_cast<std::size_t>(config.batch_size));
  hr.reserve(static_cast<std::size_t>(config.batch_size));
  for (Index b = 0; b < config.batch_size; ++b) {
    PatchPair patch = sample_patch(pairs[pick(rng)], config.patch_hr, rng);
    augment(patch, rng);
    lr.push_back(normalize(patch.lr, mean_rgb));
    hr.push_back(normalize(patch.hr, mean_rgb));
  }
  return {to_tensor(lr), to_tensor(hr)};
}

void check_training_inputs(const Model& model, const std::vector<ImagePair>& train_set,
                           const std::vector<ImagePair>& val_set, const std::vector<double>& mean_rgb,
                           const TrainConfig& config) {
  config.validate();
  const MlrnConfig& mc = model.config();
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (static_cast<Index>(mean_rgb.size()) != mc.in_channels) {
    throw std::invalid_argument("normalization mean has " + std::to_string(mean_rgb.size()) + " entries for " +
                                std::to_string(mc.in_channels) + " channels");
  }
  if (config.patch_hr % mc.scale != 0) {
    throw std::invalid_argument("train.patch_hr " + std::to_string(config.patch_hr) + " is not divisible by scale " +
                                std::to_string(mc.scale));
  }
  auto check = [&](const ImagePair& p, bool needs_patch) {
    if (p.scale != mc.scale) {
      throw std::invalid_argument("image " + p.source_id + " has scale " + std::to_string(p.scale) +
                                  " but the model upscales by " + std::to_string(mc.scale));
    }
    if (p.lr.channels() != mc.in_channels) {
      throw std::invalid_argument("image " + p.source_id + " has " + std::to_string(p.lr.channels()) + " channels");
    }
    const Index patch_lr = config.patch_hr / mc.scale;
    if (needs_patch && (p.lr.height() < patch_lr || p.lr.width() < patch_lr)) {
      throw std::invalid_argument("image " + p.source_id + " is smaller than the training patch");
    }
  };
  for (const ImagePair& p : train_set) check(p, true);
  for (const ImagePair& p : val_set) check(p, false);
}

void write_log_header(std::ostream& out) { out << "epoch,mean_l1_loss,lr,val_psnr_db,wall_seconds\n"; }

void write_log_row(std::ostream& out, const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,", static_cast<long long>(r.epoch), r.mean_l1_loss, r.lr);
  out << buf;
  if (r.val_psnr_db) {
    std::snprintf(buf, sizeof buf, "%.17g", *r.val_psnr_db);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, ",%.3f\n", r.wall_seconds);
  out << buf;
}

fs::path checkpoint_stem(const fs::path& dir, Index epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%04lld", static_cast<long long>(epoch));
  return dir / "checkpoints" / name;
}

TrainResult train(Model& model, const std::vector<ImagePair>& train_set, const std::vector<ImagePair>& val_set,
                  const std::vector<double>& mean_rgb, const TrainConfig& config, const TrainOutputs& outputs) {
  check_training_inputs(model, train_set, val_set, mean_rgb, config);
  std::vector<ImagePair> validation = val_set;
  if (validation.empty()) {
    const std::size_t n = std::min<std::size_t>(10, train_set.size());
    validation.assign(train_set.end() - static_cast<std::ptrdiff_t>(n), train_set.end());
  }

  std::ofstream log_file;
  if (outputs.dir) {
    fs::create_directories(*outputs.dir / "checkpoints");
    log_file.open(*outputs.dir / "train_log.csv");
    if (!log_file) throw IoError("cannot write " + (*outputs.dir / "train_log.csv").string());
    write_log_header(log_file);
  }

  const std::vector<Tensor> params = model.parameters();
  AdamState adam = AdamState::zeros_like(params);
  Rng rng(config.seed);
  TrainResult result;
  const auto start = std::chrono::steady_clock::now();

  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr_schedule(epoch, config.lr0, config.halve_every);
    double loss_sum = 0.0;
    for (Index it = 0; it < config.iters_per_epoch; ++it) {
      const Batch batch = sample_batch(train_set, config, mean_rgb, rng);
      const Tensor loss = l1_loss(forward(model, batch.lr), batch.hr);
      loss_sum += loss.item();
      backward(loss);
      adam_step(params, adam, record.lr, config.adam());
      for (Tensor p : params) p.zero_grad();
    }
    record.mean_l1_loss = loss_sum / static_cast<double>(config.iters_per_epoch);

    const bool last = epoch + 1 == config.epochs;
    if ((epoch + 1) % config.eval_every == 0 || last) {
      const double val = evaluate_model(model, validation, mean_rgb).average.psnr_db;
      record.val_psnr_db = val;
      const bool improved = !result.best_epoch || val > result.best_val_psnr_db;
      if (improved) {
        result.best_epoch = epoch;
        result.best_val_psnr_db = val;
      }
      if (outputs.dir) {
        const fs::path stem = checkpoint_stem(*outputs.dir, epoch);
        save_checkpoint(stem, model, mean_rgb);
        if (improved) {
          std::ofstream best(*outputs.dir / "checkpoints" / "best.txt");
          best << stem.filename().string() << '\n';
        }
      }
    }
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(record);
    if (log_file) {
      write_log_row(log_file, record);
      log_file.flush();
    }
    if (outputs.on_epoch) outputs.on_epoch(record);
  }
  return result;
}

}  // namespace mlrn

#pragma once

#include "mlrn/run_config.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mlrn {

/// N_BASE, N_GFF, N_RSC, N_GFF_RSC built from `base` with the flags replaced.
std::array<MlrnConfig, 4> ablation_variants(const MlrnConfig& base);

struct AblationRun {
  std::string variant;
  MlrnConfig config;
  std::uint64_t seed = 0;
  Index parameter_count = 0;
  TrainResult result;
  double final_val_psnr_db = 0.0;
  bool diverged = false;
};

struct VariantSummary {
  std::string variant;
  bool gff = false;
  bool rsc = false;
  Index parameter_count = 0;
  double median_final_psnr_db = 0.0;
  double best_psnr_db = 0.0;
  bool any_diverged = false;
};

/// Trains every variant once per seed. Seed s initializes the model and
/// drives the patch stream, so all variants of one seed see the same data.
/// With out_dir, each run writes to <out_dir>/<variant>/seed_<s>.
std::vector<AblationRun> run_ablation(const RunConfig& config, const std::vector<ImagePair>& train_set,
                                      const std::vector<ImagePair>& val_set, const std::vector<double>& mean_rgb,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                      const std::function<void(const AblationRun&)>& on_run = {});

double median(std::vector<double> values);
std::array<VariantSummary, 4> summarize(const std::vector<AblationRun>& runs);

/// variant,seed,epoch,val_psnr_db for every evaluated epoch.
void write_curves_csv(std::ostream& out, const std::vector<AblationRun>& runs);
/// Rows GFF, RSC, PSNR, Params under the four variant columns.
void write_summary_table(std::ostream& out, const std::array<VariantSummary, 4>& summary);

}  // namespace mlrn

#include "mlrn/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mlrn {

std::array<MlrnConfig, 4> ablation_variants(const MlrnConfig& base) {
  std::array<MlrnConfig, 4> v{base, base, base, base};
  const bool flags[4][2] = {{false, false}, {true, false}, {false, true}, {true, true}};
  for (int i = 0; i < 4; ++i) {
    v[i].use_gff = flags[i][0];
    v[i].use_rsc = flags[i][1];
  }
  return v;
}

std::vector<AblationRun> run_ablation(const RunConfig& config, const std::vector<ImagePair>& train_set,
                                      const std::vector<ImagePair>& val_set, const std::vector<double>& mean_rgb,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::optional<std::filesystem::path>& out_dir,
                                      const std::function<void(const AblationRun&)>& on_run) {
  if (seeds.empty()) throw std::invalid_argument("ablation needs at least one seed");
  std::vector<AblationRun> runs;
  for (const MlrnConfig& variant : ablation_variants(config.model)) {
    for (std::uint64_t seed : seeds) {
      AblationRun run;
      run.variant = variant_name(variant);
      run.config = variant;
      run.seed = seed;
      Model model = Model::build(variant, seed);
      run.parameter_count = model.parameter_count();
      TrainConfig tc = config.train;
      tc.seed = seed;
      TrainOutputs outputs;
      if (out_dir) outputs.dir = *out_dir / run.variant / ("seed_" + std::to_string(seed));
      run.result = train(model, train_set, val_set, mean_rgb, tc, outputs);
      run.final_val_psnr_db = run.result.log.back().val_psnr_db.value_or(0.0);
      const double first = run.result.log.front().mean_l1_loss;
      const double last = run.result.log.back().mean_l1_loss;
      run.diverged = !std::isfinite(last) || !std::isfinite(run.final_val_psnr_db) || last > first;
      if (on_run) on_run(run);
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::array<VariantSummary, 4> summarize(const std::vector<AblationRun>& runs) {
  std::array<VariantSummary, 4> out;
  const auto variants = ablation_variants(MlrnConfig{});
  for (int i = 0; i < 4; ++i) {
    VariantSummary& s = out[i];
    s.variant = variant_name(variants[i]);
    s.gff = variants[i].use_gff;
    s.rsc = variants[i].use_rsc;
    std::vector<double> finals;
    s.best_psnr_db = -std::numeric_limits<double>::infinity();
    for (const AblationRun& r : runs) {
      if (r.variant != s.variant) continue;
      finals.push_back(r.final_val_psnr_db);
      s.parameter_count = r.parameter_count;
      s.any_diverged = s.any_diverged || r.diverged;
      for (const EpochRecord& e : r.result.log) {
        if (e.val_psnr_db) s.best_psnr_db = std::max(s.best_psnr_db, *e.val_psnr_db);
      }
    }
    if (!finals.empty()) s.median_final_psnr_db = median(finals);
  }
  return out;
}

void write_curves_csv(std::ostream& out, const std::vector<AblationRun>& runs) {
  out << "variant,seed,epoch,val_psnr_db\n";
  char buf[64];
  for (const AblationRun& r : runs) {
    for (const EpochRecord& e : r.result.log) {
      if (!e.val_psnr_db) continue;
      std::snprintf(buf, sizeof buf, "%.17g", *e.val_psnr_db);
      out << r.variant << ',' << r.seed << ',' << e.epoch << ',' << buf << '\n';
    }
  }
}

void write_summary_table(std::ostream& out, const std::array<VariantSummary, 4>& summary) {
  char buf[64];
  out << "      ";
  for (const VariantSummary& s : summary) {
    std::snprintf(buf, sizeof buf, " %12s", s.variant.c_str());
    out << buf;
  }
  out << "\nGFF   ";
  for (const VariantSummary& s : summary) out << "            " << (s.gff ? "✓" : "×");
  out << "\nRSC   ";
  for (const VariantSummary& s : summary) out << "            " << (s.rsc ? "✓" : "×");
  out << "\nPSNR  ";
  for (const VariantSummary& s : summary) {
    std::snprintf(buf, sizeof buf, " %12.2f", s.median_final_psnr_db);
    out << buf;
  }
  out << "\nParams";
  for (const VariantSummary& s : summary) {
    std::snprintf(buf, sizeof buf, " %12lld", static_cast<long long>(s.parameter_count));
    out << buf;
  }
  out << '\n';
}

}  // namespace mlrn

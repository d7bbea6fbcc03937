// mlrn command-line entry point.
//   mlrn <degrade|train|eval|infer|gradcheck|ablate> [--config FILE] [--set key=value]... [--out DIR]
// Exit codes: 0 success, 1 quality/assertion failure, 2 usage/config/I-O failure.

#include "mlrn/ablation.hpp"
#include "mlrn/evaluate.hpp"
#include "mlrn/gradcheck_suite.hpp"
#include "mlrn/run_config.hpp"
#include "mlrn/serialize.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mlrn;

namespace {

struct CommonArgs {
  std::optional<fs::path> config;
  std::vector<std::string> overrides;
  std::optional<fs::path> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON run configuration");
  cmd->add_option("--set", args.overrides, "Override, e.g. train.lr0=0.001 (repeatable)");
  cmd->add_option("--out", args.out, "Output directory (default ./runs/<timestamp>)");
}

fs::path output_dir(const CommonArgs& args) {
  if (args.out) return *args.out;
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", std::localtime(&now));
  return fs::path("runs") / buf;
}

void write_config(const fs::path& dir, const RunConfig& config) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.json");
  out << to_json(config).dump(2) << '\n';
  if (!out) throw IoError("cannot write " + (dir / "config.json").string());
}

std::string dims(const Image& img) { return std::to_string(img.height()) + "x" + std::to_string(img.width()); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- degrade ---------------------------------------------------------------

int cmd_degrade(const fs::path& hr_dir, const fs::path& out_dir, const std::vector<Index>& scales) {
  for (Index r : scales) {
    if (r < 2 || r > 4) throw std::invalid_argument("scale must be 2, 3 or 4, got " + std::to_string(r));
  }
  const std::vector<fs::path> files = list_images(hr_dir);
  if (files.empty()) throw IoError("no PNG images in " + hr_dir.string());

  std::vector<std::string> failures;
  for (Index r : scales) {
    const fs::path dir = out_dir / ("LR_x" + std::to_string(r));
    fs::create_directories(dir);
    std::size_t written = 0;
    for (const fs::path& file : files) {
      const std::string stem = file.stem().string();
      try {
        const Image hr = load_image(file);
        const ImagePair pair = degrade(hr, r, stem);
        if (pair.hr.height() != hr.height() || pair.hr.width() != hr.width()) {
          std::cout << "x" << r << " " << stem << ": HR " << dims(hr) << " cropped to " << dims(pair.hr) << ", LR "
                    << dims(pair.lr) << '\n';
        }
        save_image(pair.lr, dir / (stem + ".png"));
        ++written;
      } catch (const std::exception& e) {
        failures.push_back(file.string() + " (x" + std::to_string(r) + "): " + e.what());
      }
    }
    std::cout << "x" << r << ": " << written << " images -> " << dir.string() << '\n';
  }
  if (!failures.empty()) {
    std::cerr << failures.size() << " failures:\n";
    for (const std::string& f : failures) std::cerr << "  " << f << '\n';
    return 1;
  }
  return 0;
}

// ---- train -----------------------------------------------------------------

struct Data {
  std::vector<ImagePair> train;
  std::vector<ImagePair> val;
  std::vector<double> mean;
};

Data load_training_data(const RunConfig& config) {
  if (!config.data.train_root) throw ConfigError("data.train_root is required");
  Data d;
  const DatasetSpec train_spec = DatasetSpec::from_root(*config.data.train_root, config.model.scale, Split::Train);
  d.train = load_dataset(train_spec);
  d.mean = cached_dataset_mean(train_spec);
  if (config.data.val_root) {
    d.val = load_dataset(DatasetSpec::from_root(*config.data.val_root, config.model.scale, Split::Val));
  }
  std::cout << "train: " << d.train.size() << " images, val: "
            << (d.val.empty() ? "last 10 training images" : std::to_string(d.val.size()) + " images") << '\n';
  return d;
}

void print_epoch(const EpochRecord& e) {
  char buf[160];
  if (e.val_psnr_db) {
    std::snprintf(buf, sizeof buf, "epoch %lld  loss %.4f  lr %.3g  val %.4f dB", static_cast<long long>(e.epoch),
                  e.mean_l1_loss, e.lr, *e.val_psnr_db);
  } else {
    std::snprintf(buf, sizeof buf, "epoch %lld  loss %.4f  lr %.3g", static_cast<long long>(e.epoch), e.mean_l1_loss,
                  e.lr);
  }
  std::cout << buf << std::endl;
}

int cmd_train(const CommonArgs& args) {
  const RunConfig config = load_run_config(args.config, args.overrides);
  if (!config.data.train_root) throw ConfigError("data.train_root is required");
  const fs::path dir = output_dir(args);
  const Data data = load_training_data(config);

  Model model = Model::build(config.model, config.model_seed);
  check_training_inputs(model, data.train, data.val, data.mean, config.train);
  write_config(dir, config);
  std::cout << variant_name(config.model) << ": " << model.parameter_count() << " parameters, output " << dir.string()
            << '\n';

  TrainOutputs outputs;
  outputs.dir = dir;
  outputs.on_epoch = print_epoch;
  const TrainResult result = train(model, data.train, data.val, data.mean, config.train, outputs);
  std::printf("final val PSNR: %.4f dB", result.log.back().val_psnr_db.value_or(0.0));
  if (result.best_epoch) std::printf(" (best %.4f dB at epoch %lld)", result.best_val_psnr_db,
                                     static_cast<long long>(*result.best_epoch));
  std::printf("\n");
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  fs::path data;
  std::optional<Index> scale;
  std::optional<std::string> baseline;
  std::optional<fs::path> checkpoint;
  std::optional<fs::path> sr_dir;
  std::optional<std::string> mode;
  std::optional<Index> shave;
};

int cmd_eval(const CommonArgs& common, const EvalArgs& args) {
  const RunConfig config = load_run_config(common.config, common.overrides);
  const int sources = (args.baseline ? 1 : 0) + (args.checkpoint ? 1 : 0) + (args.sr_dir ? 1 : 0);
  if (sources != 1) throw ConfigError("give exactly one of --baseline, --checkpoint, --sr-dir");
  if (args.baseline && *args.baseline != "bicubic") throw ConfigError("unknown baseline '" + *args.baseline + "'");

  MetricOptions opts = config.metrics;
  if (args.mode) opts.mode = parse_channel_mode(*args.mode);
  if (args.shave) opts.shave = *args.shave;
  if (opts.shave < -1) throw ConfigError("--shave must be -1 (scale) or non-negative");

  std::optional<Checkpoint> ckpt;
  if (args.checkpoint) {
    ckpt.emplace(load_checkpoint(*args.checkpoint));
    const Index model_scale = ckpt->model.config().scale;
    if (args.scale && *args.scale != model_scale) {
      throw ConfigError("checkpoint scale is x" + std::to_string(model_scale) + ", requested x" +
                        std::to_string(*args.scale));
    }
  }
  const Index scale = args.scale ? *args.scale : ckpt ? ckpt->model.config().scale : 2;
  if (scale < 2 || scale > 4) throw ConfigError("--scale must be 2, 3 or 4");
  const Index shave = opts.shave < 0 ? scale : opts.shave;
  const fs::path dir = output_dir(common);
  const auto start = std::chrono::steady_clock::now();

  std::vector<ImageMetric> images;
  MetricReport avg;
  std::vector<std::string> missing;
  if (args.sr_dir) {
    MetricOptions o = opts;
    o.shave = shave;
    DirEvaluation ev = evaluate_dir(args.data / "HR", *args.sr_dir, scale, o);
    images = std::move(ev.images);
    avg = ev.average;
    missing = std::move(ev.missing);
  } else {
    const std::vector<ImagePair> pairs = load_dataset(DatasetSpec::from_root(args.data, scale, Split::Test));
    if (pairs.empty()) throw IoError("no images under " + (args.data / "HR").string());
    fs::create_directories(dir / "SR");
    MetricOptions o = opts;
    o.shave = shave;
    std::vector<MetricReport> reports;
    for (const ImagePair& p : pairs) {
      const Image sr = ckpt ? super_resolve(ckpt->model, p.lr, ckpt->mean_rgb) : bicubic_upscale(p.lr, scale);
      save_image(sr, dir / "SR" / (p.source_id + ".png"));
      images.push_back({p.source_id, measure(p.hr, sr, o)});
      reports.push_back(images.back().report);
    }
    avg = average(reports);
  }

  fs::create_directories(dir);
  std::ofstream csv(dir / "metrics.csv");
  write_metrics_csv(csv, images, avg, scale);
  if (!csv) throw IoError("cannot write " + (dir / "metrics.csv").string());

  for (const ImageMetric& m : images) {
    std::printf("%-16s %.4f dB  %.4f\n", m.image_id.c_str(), m.report.psnr_db, m.report.ssim);
  }
  std::printf("x%lld %s shave %lld, %zu images, %.2f s\n", static_cast<long long>(scale),
              to_string(opts.mode).c_str(), static_cast<long long>(shave), images.size(), seconds_since(start));
  std::cout << summary_line(avg) << std::endl;
  if (!missing.empty()) {
    std::cerr << missing.size() << " reference images have no SR counterpart:";
    for (const std::string& m : missing) std::cerr << ' ' << m;
    std::cerr << '\n';
    return 1;
  }
  return 0;
}

// ---- infer -----------------------------------------------------------------

int cmd_infer(const fs::path& checkpoint, const fs::path& input, const fs::path& output) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const Image lr = load_image(input);
  const auto start = std::chrono::steady_clock::now();
  const Image sr = super_resolve(ckpt.model, lr, ckpt.mean_rgb);
  const double secs = seconds_since(start);
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  save_image(sr, output);
  std::printf("%s -> %s (x%lld) in %.3f s\n", dims(lr).c_str(), dims(sr).c_str(),
              static_cast<long long>(ckpt.model.config().scale), secs);
  return 0;
}

// ---- gradcheck -------------------------------------------------------------

int cmd_gradcheck(double threshold, std::uint64_t seed) {
  std::vector<std::string> failed;
  for (const OpCheck& c : run_gradcheck_suite(seed)) {
    const bool ok = c.max_rel_error < threshold;
    std::printf("%-14s max_rel_error %.3e  %s\n", c.op.c_str(), c.max_rel_error, ok ? "ok" : "FAIL");
    if (!ok) failed.push_back(c.op);
  }
  if (!failed.empty()) {
    std::cerr << "gradient check failed (threshold " << threshold << "):";
    for (const std::string& op : failed) std::cerr << ' ' << op;
    std::cerr << '\n';
    return 1;
  }
  return 0;
}

// ---- ablate ----------------------------------------------------------------

int cmd_ablate(const CommonArgs& args, const std::vector<std::uint64_t>& seeds) {
  const RunConfig config = load_run_config(args.config, args.overrides);
  if (!config.data.train_root) throw ConfigError("data.train_root is required");
  if (seeds.empty()) throw ConfigError("--seeds needs at least one seed");
  const fs::path dir = output_dir(args);
  const Data data = load_training_data(config);
  for (const MlrnConfig& v : ablation_variants(config.model)) {
    check_training_inputs(Model::build(v, 0), data.train, data.val, data.mean, config.train);
  }
  write_config(dir, config);

  const auto runs = run_ablation(config, data.train, data.val, data.mean, seeds, dir, [](const AblationRun& r) {
    std::printf("%-10s seed %llu  final val %.4f dB%s\n", r.variant.c_str(), static_cast<unsigned long long>(r.seed),
                r.final_val_psnr_db, r.diverged ? "  DIVERGED" : "");
    std::fflush(stdout);
  });
  {
    std::ofstream curves(dir / "curves.csv");
    write_curves_csv(curves, runs);
  }
  const auto summary = summarize(runs);
  {
    std::ofstream table(dir / "summary.txt");
    write_summary_table(table, summary);
  }
  write_summary_table(std::cout, summary);
  for (const VariantSummary& s : summary) {
    if (s.any_diverged) {
      std::cerr << s.variant << " diverged\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MLRN super-resolution toolkit"};
  app.require_subcommand(1);

  CommonArgs common;

  auto* degrade_cmd = app.add_subcommand("degrade", "Write bicubic LR_x{r} sets for an HR directory");
  fs::path hr_dir;
  std::vector<Index> scales{2, 3, 4};
  degrade_cmd->add_option("hr_dir", hr_dir, "Directory of HR PNGs")->required();
  degrade_cmd->add_option("--scales", scales, "Scale factors")->delimiter(',');
  add_common(degrade_cmd, common);

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_common(train_cmd, common);

  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM over a dataset");
  EvalArgs eval;
  eval_cmd->add_option("--data", eval.data, "Dataset root holding HR/ and optionally LR_x{r}/")->required();
  eval_cmd->add_option("--scale", eval.scale, "Scale factor");
  eval_cmd->add_option("--baseline", eval.baseline, "Baseline method (bicubic)");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint stem (without .bin/.json)");
  eval_cmd->add_option("--sr-dir", eval.sr_dir, "Directory of precomputed SR PNGs");
  eval_cmd->add_option("--mode", eval.mode, "Channel mode: y or rgb");
  eval_cmd->add_option("--shave", eval.shave, "Border pixels to ignore (-1: scale)");
  add_common(eval_cmd, common);

  auto* infer_cmd = app.add_subcommand("infer", "Super-resolve one image");
  fs::path infer_ckpt, infer_in, infer_out;
  infer_cmd->add_option("--checkpoint", infer_ckpt, "Checkpoint stem")->required();
  infer_cmd->add_option("input", infer_in, "LR PNG")->required();
  infer_cmd->add_option("output", infer_out, "SR PNG")->required();
  add_common(infer_cmd, common);

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  double threshold = 1e-4;
  std::uint64_t grad_seed = 1;
  grad_cmd->add_option("--threshold", threshold, "Maximum relative error");
  grad_cmd->add_option("--seed", grad_seed, "Seed for random inputs");

  auto* ablate_cmd = app.add_subcommand("ablate", "Train N_BASE, N_GFF, N_RSC and N_GFF_RSC");
  std::vector<std::uint64_t> seeds{1, 2, 3};
  ablate_cmd->add_option("--seeds", seeds, "Seeds, each used for init and data")->delimiter(',');
  add_common(ablate_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*degrade_cmd) return cmd_degrade(hr_dir, output_dir(common), scales);
    if (*train_cmd) return cmd_train(common);
    if (*eval_cmd) return cmd_eval(common, eval);
    if (*infer_cmd) return cmd_infer(infer_ckpt, infer_in, infer_out);
    if (*grad_cmd) return cmd_gradcheck(threshold, grad_seed);
    if (*ablate_cmd) return cmd_ablate(common, seeds);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

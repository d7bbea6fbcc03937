#pragma once

#include "mlrn/metrics.hpp"
#include "mlrn/model.hpp"
#include "mlrn/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlrn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::optional<std::filesystem::path> train_root;  // <root>/HR, optional <root>/LR_x{r}
  std::optional<std::filesystem::path> val_root;
};

/// Everything a run needs. JSON layout: {"model": {...}, "train": {...},
/// "data": {...}, "metrics": {...}}; see default_config_json().
struct RunConfig {
  MlrnConfig model;
  std::uint64_t model_seed = 1;
  TrainConfig train;
  DataConfig data;
  MetricOptions metrics{ChannelMode::Y, -1};  // shave -1: use the scale
};

nlohmann::json default_config_json();

/// Defaults, then the file (if any), then "section.key=value" overrides.
/// Unknown keys and mistyped values raise ConfigError.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

}  // namespace mlrn

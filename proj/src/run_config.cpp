#include "mlrn/run_config.hpp"

#include <fstream>

namespace mlrn {

using nlohmann::json;

json default_config_json() {
  const RunConfig d;
  json j = to_json(d);
  j["data"]["train_root"] = nullptr;
  j["data"]["val_root"] = nullptr;
  return j;
}

namespace {

void merge_into(json& base, const json& incoming, const std::string& prefix) {
  if (!incoming.is_object()) throw ConfigError("'" + prefix + "' must be an object");
  for (const auto& [key, value] : incoming.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + name + "'");
    if (base[key].is_object()) {
      merge_into(base[key], value, name);
    } else {
      base[key] = value;
    }
  }
}

json parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not key=value");
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;  // bare strings such as paths

  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1)) {
    parts.push_back(rest.substr(0, pos));
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  return patch;
}

const json& field(const json& section, const char* sec, const char* key) {
  if (!section.contains(key)) throw ConfigError(std::string("missing config key '") + sec + "." + key + "'");
  return section.at(key);
}

Index get_int(const json& s, const char* sec, const char* key) {
  const json& v = field(s, sec, key);
  if (!v.is_number_integer()) throw ConfigError(std::string(sec) + "." + key + " must be an integer");
  return v.get<Index>();
}

std::uint64_t get_seed(const json& s, const char* sec, const char* key) {
  const json& v = field(s, sec, key);
  const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (!ok) throw ConfigError(std::string(sec) + "." + key + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

double get_number(const json& s, const char* sec, const char* key) {
  const json& v = field(s, sec, key);
  if (!v.is_number()) throw ConfigError(std::string(sec) + "." + key + " must be a number");
  return v.get<double>();
}

bool get_bool(const json& s, const char* sec, const char* key) {
  const json& v = field(s, sec, key);
  if (!v.is_boolean()) throw ConfigError(std::string(sec) + "." + key + " must be true or false");
  return v.get<bool>();
}

std::optional<std::filesystem::path> get_path(const json& s, const char* sec, const char* key) {
  const json& v = field(s, sec, key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) throw ConfigError(std::string(sec) + "." + key + " must be a path string or null");
  return std::filesystem::path(v.get<std::string>());
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  json merged = default_config_json();
  merge_into(merged, j, "");

  RunConfig c;
  const json& m = merged["model"];
  c.model.g = get_int(m, "model", "g");
  c.model.n_blocks = get_int(m, "model", "n_blocks");
  c.model.scale = get_int(m, "model", "scale");
  c.model.use_gff = get_bool(m, "model", "use_gff");
  c.model.use_rsc = get_bool(m, "model", "use_rsc");
  c.model.in_channels = get_int(m, "model", "in_channels");
  c.model_seed = get_seed(m, "model", "seed");

  const json& t = merged["train"];
  c.train.batch_size = get_int(t, "train", "batch_size");
  c.train.patch_hr = get_int(t, "train", "patch_hr");
  c.train.lr0 = get_number(t, "train", "lr0");
  c.train.halve_every = get_int(t, "train", "halve_every");
  c.train.iters_per_epoch = get_int(t, "train", "iters_per_epoch");
  c.train.epochs = get_int(t, "train", "epochs");
  c.train.beta1 = get_number(t, "train", "beta1");
  c.train.beta2 = get_number(t, "train", "beta2");
  c.train.eps = get_number(t, "train", "eps");
  c.train.seed = get_seed(t, "train", "seed");
  c.train.eval_every = get_int(t, "train", "eval_every");

  const json& d = merged["data"];
  c.data.train_root = get_path(d, "data", "train_root");
  c.data.val_root = get_path(d, "data", "val_root");

  const json& mt = merged["metrics"];
  const json& mode = field(mt, "metrics", "channel_mode");
  if (!mode.is_string()) throw ConfigError("metrics.channel_mode must be \"y\" or \"rgb\"");
  try {
    c.metrics.mode = parse_channel_mode(mode.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.metrics.shave = get_int(mt, "metrics", "shave");

  try {
    c.model.validate();
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.metrics.shave < -1) throw ConfigError("metrics.shave must be -1 (scale) or non-negative");
  return c;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file " + file->string());
    j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file " + file->string() + " is not valid JSON");
    if (!j.is_object()) throw ConfigError("config file " + file->string() + " must hold a JSON object");
  }
  json merged = default_config_json();
  merge_into(merged, j, "");
  for (const std::string& o : overrides) merge_into(merged, parse_override(o), "");
  return run_config_from_json(merged);
}

json to_json(const RunConfig& c) {
  auto path_or_null = [](const std::optional<std::filesystem::path>& p) -> json {
    return p ? json(p->string()) : json(nullptr);
  };
  return json{
      {"model",
       {{"g", c.model.g},
        {"n_blocks", c.model.n_blocks},
        {"scale", c.model.scale},
        {"use_gff", c.model.use_gff},
        {"use_rsc", c.model.use_rsc},
        {"in_channels", c.model.in_channels},
        {"seed", c.model_seed}}},
      {"train",
       {{"batch_size", c.train.batch_size},
        {"patch_hr", c.train.patch_hr},
        {"lr0", c.train.lr0},
        {"halve_every", c.train.halve_every},
        {"iters_per_epoch", c.train.iters_per_epoch},
        {"epochs", c.train.epochs},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"eps", c.train.eps},
        {"seed", c.train.seed},
        {"eval_every", c.train.eval_every}}},
      {"data", {{"train_root", path_or_null(c.data.train_root)}, {"val_root", path_or_null(c.data.val_root)}}},
      {"metrics", {{"channel_mode", to_string(c.metrics.mode)}, {"shave", c.metrics.shave}}},
  };
}

}  // namespace mlrn

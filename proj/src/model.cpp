#include "mlrn/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

namespace mlrn {

namespace {

Index conv_size(Index c_in, Index c_out, Index k) { return c_out * c_in * k * k + c_out; }

std::string indexed(const std::string& base, Index i) { return base + "[" + std::to_string(i) + "]"; }

SfBlockParams make_sf(Index g) { return {ConvParams::same(g, g, 1, 1), ConvParams::same(g, g, 1, 1)}; }

FsfBlockParams make_fsf(Index g) {
  FsfBlockParams b;
  for (std::size_t k = 0; k < 3; ++k) {
    b.bypass[k].first = ConvParams::same(g, g, kBypassKernels[k][0], kBypassKernels[k][0]);
    b.bypass[k].second = ConvParams::same(g, g, kBypassKernels[k][1], kBypassKernels[k][1]);
    b.fuse[k] = ConvParams::same(2 * g, g, 1, 1);
  }
  return b;
}

ConvParams clone_conv(const ConvParams& p) {
  return {p.weight.detach(true), p.bias.detach(true), p.padding};
}

void check_input(const Tensor& x, Index channels, const char* where) {
  if (x.shape().c != channels) {
    throw ShapeError(std::string(where) + ": expected " + std::to_string(channels) + " channels, got " +
                     x.shape().str());
  }
}

}  // namespace

void MlrnConfig::validate() const {
  if (g < 1) throw std::invalid_argument("g must be >= 1");
  if (n_blocks < 1) throw std::invalid_argument("n_blocks must be >= 1");
  if (scale < 2 || scale > 4) throw std::invalid_argument("scale must be 2, 3 or 4, got " + std::to_string(scale));
  if (in_channels < 1) throw std::invalid_argument("in_channels must be >= 1");
}

std::string variant_name(const MlrnConfig& config) {
  if (config.use_gff && config.use_rsc) return "N_GFF_RSC";
  if (config.use_gff) return "N_GFF";
  if (config.use_rsc) return "N_RSC";
  return "N_BASE";
}

Index parameter_count(const MlrnConfig& config) {
  config.validate();
  const Index g = config.g;
  const Index c = config.in_channels;
  const Index r = config.scale;
  const Index sf = 2 * conv_size(g, g, 1);
  Index fsf = 3 * conv_size(2 * g, g, 1);
  for (const auto& kernels : kBypassKernels) fsf += conv_size(g, g, kernels[0]) + conv_size(g, g, kernels[1]);
  Index total = conv_size(c, g, 3) + sf + config.n_blocks * fsf + conv_size(g, g * r * r, 3) + sf + conv_size(g, c, 3);
  if (config.use_gff) total += conv_size(config.n_blocks * g, g, 1);
  return total;
}

Model Model::build(const MlrnConfig& config, std::uint64_t init_seed) {
  config.validate();
  Model m;
  m.config_ = config;
  m.init_seed_ = init_seed;
  const Index g = config.g;
  m.coarse = ConvParams::same(config.in_channels, g, 3, 3);
  m.sf_head = make_sf(g);
  for (Index d = 0; d < config.n_blocks; ++d) m.blocks.push_back(make_fsf(g));
  if (config.use_gff) m.gff = ConvParams::same(config.n_blocks * g, g, 1, 1);
  m.up_conv = ConvParams::same(g, g * config.scale * config.scale, 3, 3);
  m.sf_tail = make_sf(g);
  m.recon = ConvParams::same(g, config.in_channels, 3, 3);

  std::mt19937_64 rng(init_seed);
  for (auto& [name, conv] : m.mutable_layers()) {
    const double fan_in = static_cast<double>(conv->c_in() * conv->k_h() * conv->k_w());
    std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / fan_in), std::sqrt(6.0 / fan_in));
    for (double& w : conv->weight.mutable_values()) w = dist(rng);
  }
  return m;
}

Model Model::clone() const {
  Model m;
  m.config_ = config_;
  m.init_seed_ = init_seed_;
  m.coarse = clone_conv(coarse);
  m.sf_head = {clone_conv(sf_head.first), clone_conv(sf_head.second)};
  for (const auto& b : blocks) {
    FsfBlockParams copy;
    for (std::size_t k = 0; k < 3; ++k) {
      copy.bypass[k] = {clone_conv(b.bypass[k].first), clone_conv(b.bypass[k].second)};
      copy.fuse[k] = clone_conv(b.fuse[k]);
    }
    m.blocks.push_back(std::move(copy));
  }
  if (gff) m.gff = clone_conv(*gff);
  m.up_conv = clone_conv(up_conv);
  m.sf_tail = {clone_conv(sf_tail.first), clone_conv(sf_tail.second)};
  m.recon = clone_conv(recon);
  return m;
}

std::vector<std::pair<std::string, ConvParams*>> Model::mutable_layers() {
  std::vector<std::pair<std::string, ConvParams*>> out;
  out.emplace_back("coarse", &coarse);
  out.emplace_back("sf_head.conv[0]", &sf_head.first);
  out.emplace_back("sf_head.conv[1]", &sf_head.second);
  for (std::size_t d = 0; d < blocks.size(); ++d) {
    const std::string block = indexed("fsf", static_cast<Index>(d));
    for (Index k = 0; k < 3; ++k) {
      const std::string bypass = block + "." + indexed("bypass", k);
      out.emplace_back(bypass + ".conv[0]", &blocks[d].bypass[k].first);
      out.emplace_back(bypass + ".conv[1]", &blocks[d].bypass[k].second);
      out.emplace_back(block + "." + indexed("fuse", k), &blocks[d].fuse[k]);
    }
  }
  if (gff) out.emplace_back("gff", &*gff);
  out.emplace_back("up_conv", &up_conv);
  out.emplace_back("sf_tail.conv[0]", &sf_tail.first);
  out.emplace_back("sf_tail.conv[1]", &sf_tail.second);
  out.emplace_back("recon", &recon);
  return out;
}

std::vector<std::pair<std::string, const ConvParams*>> Model::layers() const {
  auto& self = const_cast<Model&>(*this);
  std::vector<std::pair<std::string, const ConvParams*>> out;
  for (auto& [name, conv] : self.mutable_layers()) out.emplace_back(name, conv);
  return out;
}

std::vector<NamedTensor> Model::named_parameters() const {
  std::vector<NamedTensor> out;
  for (const auto& [name, conv] : layers()) {
    out.emplace_back(name + ".weight", conv->weight);
    out.emplace_back(name + ".bias", conv->bias);
  }
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

Index Model::parameter_count() const {
  Index total = 0;
  for (const auto& [name, conv] : layers()) total += conv->parameter_count();
  return total;
}

void Model::set_parameters(const std::vector<Tensor>& tensors) {
  auto layers = mutable_layers();
  if (tensors.size() != 2 * layers.size()) {
    throw ShapeError("set_parameters: expected " + std::to_string(2 * layers.size()) + " tensors, got " +
                     std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    ConvParams& conv = *layers[i].second;
    const Tensor& w = tensors[2 * i];
    const Tensor& b = tensors[2 * i + 1];
    if (w.shape() != conv.weight.shape() || b.shape() != conv.bias.shape()) {
      throw ShapeError("set_parameters: shape mismatch for " + layers[i].first);
    }
    conv.weight = w;
    conv.bias = b;
  }
}

void Model::load_values(const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  for (auto& [name, conv] : mutable_layers()) {
    for (auto [suffix, target] : {std::pair{".weight", &conv->weight}, std::pair{".bias", &conv->bias}}) {
      auto it = by_name.find(name + suffix);
      if (it == by_name.end()) throw FormatError("checkpoint is missing " + name + suffix);
      if (it->second->shape() != target->shape()) {
        throw FormatError("checkpoint tensor " + name + suffix + " has shape " + it->second->shape().str() +
                          ", model expects " + target->shape().str());
      }
      target->mutable_values() = it->second->values();
    }
  }
  if (by_name.size() != 2 * mutable_layers().size()) throw FormatError("checkpoint holds unexpected tensors");
}

Tensor coarse_extract(const Model& model, const Tensor& lr) {
  check_input(lr, model.config().in_channels, "coarse_extract");
  return conv2d(lr, model.coarse);
}

Tensor sf_block(const SfBlockParams& params, const Tensor& x) {
  check_input(x, params.first.c_in(), "sf_block");
  return add(x, conv2d(relu(conv2d(x, params.first)), params.second));
}

Tensor fsf_block(const FsfBlockParams& params, const Tensor& f_prev) {
  check_input(f_prev, params.bypass[0].first.c_in(), "fsf_block");
  Tensor running = f_prev;
  for (std::size_t k = 0; k < 3; ++k) {
    const ExtractorParams& e = params.bypass[k];
    Tensor scale_feature = conv2d(relu(conv2d(f_prev, e.first)), e.second);
    const std::array<Tensor, 2> parts{scale_feature, running};
    running = conv2d(concat_channels(parts), params.fuse[k]);
  }
  return add(running, f_prev);
}

ForwardTrace forward_trace(const Model& model, const Tensor& lr) {
  const MlrnConfig& cfg = model.config();
  ForwardTrace t;
  t.coarse = coarse_extract(model, lr);
  t.shallow = sf_block(model.sf_head, t.coarse);
  Tensor f = t.shallow;
  for (const auto& block : model.blocks) {
    f = fsf_block(block, f);
    t.blocks.push_back(f);
  }
  t.deep = cfg.use_gff ? conv2d(concat_channels(t.blocks), *model.gff) : t.blocks.back();
  if (cfg.use_rsc) t.deep = add(t.deep, t.shallow);
  t.upsampled = pixel_shuffle(conv2d(t.deep, model.up_conv), cfg.scale);
  t.output = conv2d(sf_block(model.sf_tail, t.upsampled), model.recon);
  return t;
}

Tensor forward(const Model& model, const Tensor& lr) { return forward_trace(model, lr).output; }

void save_checkpoint(const std::filesystem::path& stem, const Model& model, const std::vector<double>& mean_rgb) {
  const MlrnConfig& c = model.config();
  nlohmann::ordered_json meta;
  meta["g"] = c.g;
  meta["n_blocks"] = c.n_blocks;
  meta["scale"] = c.scale;
  meta["use_gff"] = c.use_gff;
  meta["use_rsc"] = c.use_rsc;
  meta["in_channels"] = c.in_channels;
  meta["init_seed"] = model.init_seed();
  meta["mean_rgb"] = mean_rgb;

  auto bin = stem;
  bin += ".bin";
  auto sidecar = stem;
  sidecar += ".json";
  write_tensors(bin, model.named_parameters());
  std::ofstream f(sidecar, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + sidecar.string());
  f << meta.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  auto sidecar = stem;
  sidecar += ".json";
  std::ifstream f(sidecar);
  if (!f) throw std::runtime_error("cannot open checkpoint sidecar " + sidecar.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint sidecar " + sidecar.string() + ": " + e.what());
  }
  MlrnConfig c;
  try {
    c.g = meta.at("g").get<Index>();
    c.n_blocks = meta.at("n_blocks").get<Index>();
    c.scale = meta.at("scale").get<Index>();
    c.use_gff = meta.at("use_gff").get<bool>();
    c.use_rsc = meta.at("use_rsc").get<bool>();
    c.in_channels = meta.at("in_channels").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint sidecar " + sidecar.string() + ": " + e.what());
  }
  const auto seed = meta.value("init_seed", std::uint64_t{0});
  Model model = Model::build(c, seed);
  model.load_values(read_tensors(bin));
  std::vector<double> mean = meta.value("mean_rgb", std::vector<double>(static_cast<std::size_t>(c.in_channels), 0.0));
  return {std::move(model), std::move(mean)};
}

}  // namespace mlrn

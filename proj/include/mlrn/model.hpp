#pragma once

#include "mlrn/ops.hpp"
#include "mlrn/serialize.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mlrn {

struct MlrnConfig {
  Index g = 32;         // feature width
  Index n_blocks = 8;   // FSFblock count
  Index scale = 2;      // upscaling factor, 2..4
  bool use_gff = true;  // global feature fusion
  bool use_rsc = true;  // residual skip from the shallow feature
  Index in_channels = 3;

  void validate() const;
  bool operator==(const MlrnConfig&) const = default;
};

/// Ablation label: N_BASE, N_GFF, N_RSC or N_GFF_RSC.
std::string variant_name(const MlrnConfig& config);

/// Closed-form parameter total over the layer schedule implied by `config`.
Index parameter_count(const MlrnConfig& config);

/// Two 1x1 convolutions around a ReLU, plus the identity path.
struct SfBlockParams {
  ConvParams first;
  ConvParams second;
};

/// Two same-size convolutions with a ReLU between them.
struct ExtractorParams {
  ConvParams first;
  ConvParams second;
};

struct FsfBlockParams {
  std::array<ExtractorParams, 3> bypass;  // kernels 3/3, 3/5, 5/5
  std::array<ConvParams, 3> fuse;         // 1x1, 2G -> G
};

/// Kernel sizes of the two layers in each bypass extractor.
inline constexpr std::array<std::array<Index, 2>, 3> kBypassKernels{{{3, 3}, {3, 5}, {5, 5}}};

class Model {
 public:
  /// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  static Model build(const MlrnConfig& config, std::uint64_t init_seed);

  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  /// Deep copy with independent parameter storage.
  Model clone() const;

  const MlrnConfig& config() const { return config_; }
  std::uint64_t init_seed() const { return init_seed_; }

  /// Layers in a fixed order; names follow the block structure, e.g.
  /// "fsf[1].bypass[2].conv[0]".
  std::vector<std::pair<std::string, const ConvParams*>> layers() const;

  /// Weight and bias tensors in layer order, named "<layer>.weight" / "<layer>.bias".
  std::vector<NamedTensor> named_parameters() const;
  std::vector<Tensor> parameters() const;
  Index parameter_count() const;

  /// Rebinds parameter handles, in parameters() order. Shapes must match.
  void set_parameters(const std::vector<Tensor>& tensors);
  /// Copies values from a named container; every name must be present.
  void load_values(const std::vector<NamedTensor>& tensors);

  ConvParams coarse;
  SfBlockParams sf_head;
  std::vector<FsfBlockParams> blocks;
  std::optional<ConvParams> gff;
  ConvParams up_conv;
  SfBlockParams sf_tail;
  ConvParams recon;

 private:
  Model() = default;
  std::vector<std::pair<std::string, ConvParams*>> mutable_layers();

  MlrnConfig config_;
  std::uint64_t init_seed_ = 0;
};

Tensor coarse_extract(const Model& model, const Tensor& lr);
Tensor sf_block(const SfBlockParams& params, const Tensor& x);
Tensor fsf_block(const FsfBlockParams& params, const Tensor& f_prev);

/// Intermediate features of one forward pass.
struct ForwardTrace {
  Tensor coarse;               // F_-1
  Tensor shallow;              // F_0
  std::vector<Tensor> blocks;  // F_1 .. F_N
  Tensor deep;                 // input to the upscaler
  Tensor upsampled;            // after pixel shuffle
  Tensor output;               // SR image
};

ForwardTrace forward_trace(const Model& model, const Tensor& lr);
Tensor forward(const Model& model, const Tensor& lr);

/// Parameter container "<stem>.bin" plus JSON sidecar "<stem>.json" holding the
/// config, init seed and normalization mean.
struct Checkpoint {
  Model model;
  std::vector<double> mean_rgb;
};

void save_checkpoint(const std::filesystem::path& stem, const Model& model, const std::vector<double>& mean_rgb);
Checkpoint load_checkpoint(const std::filesystem::path& stem);

}  // namespace mlrn

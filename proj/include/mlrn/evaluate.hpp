#pragma once

#include "mlrn/dataset.hpp"
#include "mlrn/metrics.hpp"
#include "mlrn/model.hpp"

#include <string>
#include <vector>

namespace mlrn {

/// Full-image forward pass: normalize, run, denormalize, quantize.
Image super_resolve(const Model& model, const Image& lr, const std::vector<double>& mean_rgb);

/// Bicubic upscale by r, quantized to 8-bit.
Image bicubic_upscale(const Image& lr, Index scale);

struct EvalSummary {
  std::vector<ImageMetric> images;
  MetricReport average;
};

/// Shave defaults to the scale of each pair when opts.shave is negative.
EvalSummary evaluate_model(const Model& model, const std::vector<ImagePair>& pairs, const std::vector<double>& mean_rgb,
                           MetricOptions opts = {ChannelMode::Y, -1});
EvalSummary evaluate_bicubic(const std::vector<ImagePair>& pairs, MetricOptions opts = {ChannelMode::Y, -1});

}  // namespace mlrn

#include "mlrn/evaluate.hpp"

#include "mlrn/resize.hpp"

namespace mlrn {

Image super_resolve(const Model& model, const Image& lr, const std::vector<double>& mean_rgb) {
  if (lr.channels() != model.config().in_channels) {
    throw std::invalid_argument("image has " + std::to_string(lr.channels()) + " channels, model expects " +
                                std::to_string(model.config().in_channels));
  }
  const Image input = normalize(lr, mean_rgb);
  const Tensor out = forward(model, to_tensor(std::span<const Image>(&input, 1)));
  return quantize(denormalize(image_from_tensor(out), mean_rgb));
}

Image bicubic_upscale(const Image& lr, Index scale) {
  return quantize(bicubic_resize(lr, lr.height() * scale, lr.width() * scale));
}

namespace {

template <typename Producer>
EvalSummary evaluate_with(const std::vector<ImagePair>& pairs, MetricOptions opts, Producer produce) {
  if (pairs.empty()) throw std::invalid_argument("evaluation set is empty");
  EvalSummary summary;
  std::vector<MetricReport> reports;
  for (const ImagePair& pair : pairs) {
    MetricOptions o = opts;
    if (o.shave < 0) o.shave = pair.scale;
    const Image sr = produce(pair);
    summary.images.push_back({pair.source_id, measure(pair.hr, sr, o)});
    reports.push_back(summary.images.back().report);
  }
  summary.average = average(reports);
  return summary;
}

}  // namespace

EvalSummary evaluate_model(const Model& model, const std::vector<ImagePair>& pairs, const std::vector<double>& mean_rgb,
                           MetricOptions opts) {
  for (const ImagePair& p : pairs) {
    if (p.scale != model.config().scale) {
      throw std::invalid_argument("pair " + p.source_id + " has scale " + std::to_string(p.scale) +
                                  ", model scale is " + std::to_string(model.config().scale));
    }
  }
  return evaluate_with(pairs, opts, [&](const ImagePair& p) { return super_resolve(model, p.lr, mean_rgb); });
}

EvalSummary evaluate_bicubic(const std::vector<ImagePair>& pairs, MetricOptions opts) {
  return evaluate_with(pairs, opts, [](const ImagePair& p) { return bicubic_upscale(p.lr, p.scale); });
}

}  // namespace mlrn

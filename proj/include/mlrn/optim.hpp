#pragma once

#include "mlrn/tensor.hpp"

#include <cstdint>
#include <vector>

namespace mlrn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Values> m;
  std::vector<Values> v;
  std::int64_t t = 0;

  static AdamState zeros_like(const std::vector<Tensor>& params);
};

/// One bias-corrected Adam update from the gradients accumulated in `params`.
/// Gradients are left in place; the caller zeroes them.
void adam_step(const std::vector<Tensor>& params, AdamState& state, double lr, const AdamHyper& hyper = {});

/// lr0 / 2^floor(epoch / halve_every), epochs counted from 0.
double lr_schedule(std::int64_t epoch, double lr0, std::int64_t halve_every);

}  // namespace mlrn

#pragma once

#include "mlrn/tensor.hpp"

#include <functional>
#include <vector>

namespace mlrn {

using GraphBuilder = std::function<Tensor(const std::vector<Tensor>& leaves)>;

/// Compares analytic gradients of a scalar-valued builder against central
/// differences (f(x+eps) - f(x-eps)) / 2eps, one element at a time. Returns,
/// per leaf, max |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
/// The caller's leaves are not modified.
std::vector<double> grad_check(const GraphBuilder& builder, const std::vector<Tensor>& leaves, double epsilon);

}  // namespace mlrn

#include "mlrn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlrn {

namespace {

std::vector<Tensor> fresh_leaves(const std::vector<Tensor>& leaves) {
  std::vector<Tensor> out;
  out.reserve(leaves.size());
  for (const Tensor& t : leaves) out.push_back(t.detach(true));
  return out;
}

}  // namespace

std::vector<double> grad_check(const GraphBuilder& builder, const std::vector<Tensor>& leaves, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("grad_check: epsilon must be positive");

  std::vector<Tensor> analytic_leaves = fresh_leaves(leaves);
  backward(builder(analytic_leaves));

  std::vector<Tensor> probe = fresh_leaves(leaves);
  std::vector<double> worst(leaves.size(), 0.0);
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const Index count = probe[k].shape().numel();
    for (Index e = 0; e < count; ++e) {
      Values& v = probe[k].mutable_values();
      const double original = v[e];
      v[e] = original + epsilon;
      const double plus = builder(probe).item();
      v[e] = original - epsilon;
      const double minus = builder(probe).item();
      v[e] = original;

      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double analytic = analytic_leaves[k].has_grad() ? analytic_leaves[k].grad()[e] : 0.0;
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
      worst[k] = std::max(worst[k], std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace mlrn

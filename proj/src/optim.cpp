#include "mlrn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace mlrn {

AdamState AdamState::zeros_like(const std::vector<Tensor>& params) {
  AdamState s;
  for (const Tensor& p : params) {
    s.m.push_back(Values::Zero(p.shape().numel()));
    s.v.push_back(Values::Zero(p.shape().numel()));
  }
  return s;
}

void adam_step(const std::vector<Tensor>& params, AdamState& state, double lr, const AdamHyper& hyper) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: state holds " + std::to_string(state.m.size()) + " slots for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].shape().numel() || state.v[i].size() != params[i].shape().numel()) {
      throw ShapeError("adam_step: moment shape mismatch for parameter " + std::to_string(i));
    }
    if (!params[i].has_grad()) throw std::invalid_argument("adam_step: parameter " + std::to_string(i) + " has no gradient");
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    const Values& g = p.grad();
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g.square();
    p.mutable_values() -= lr * (state.m[i] / c1) / ((state.v[i] / c2).sqrt() + hyper.eps);
  }
}

double lr_schedule(std::int64_t epoch, double lr0, std::int64_t halve_every) {
  if (epoch < 0) throw std::invalid_argument("lr_schedule: negative epoch");
  if (halve_every <= 0) throw std::invalid_argument("lr_schedule: halve_every must be positive");
  return std::ldexp(lr0, -static_cast<int>(epoch / halve_every));
}

}  // namespace mlrn

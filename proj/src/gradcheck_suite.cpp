#include "mlrn/gradcheck_suite.hpp"

#include "mlrn/grad_check.hpp"
#include "mlrn/model.hpp"

#include <algorithm>
#include <random>

namespace mlrn {

namespace {

using Rng = std::mt19937_64;

Tensor uniform(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Values v(shape.numel());
  for (double& x : v) x = dist(rng);
  return Tensor::from_values(shape, std::move(v), true);
}

// Magnitudes in [margin, 1] with random sign, keeping clear of kinks.
Tensor signed_away_from_zero(const Shape& shape, Rng& rng, double margin) {
  std::uniform_real_distribution<double> mag(margin, 1.0);
  std::bernoulli_distribution sign(0.5);
  Values v(shape.numel());
  for (double& x : v) x = sign(rng) ? mag(rng) : -mag(rng);
  return Tensor::from_values(shape, std::move(v), true);
}

// sum(x * w) for fixed random w, so every element gets its own upstream gradient.
Tensor projected(const Tensor& x, Rng& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Values w(x.shape().numel());
  for (double& v : w) v = dist(rng);
  return make_result(OpKind::Custom, {x}, {1, 1, 1, 1}, Values::Constant(1, (x.values() * w).sum()),
                     [w](const Values& g, std::span<Values* const> grads) {
                       if (grads[0]) *grads[0] += w * g[0];
                     });
}

double worst(const std::vector<double>& errors) { return *std::max_element(errors.begin(), errors.end()); }

}  // namespace

std::vector<OpCheck> run_gradcheck_suite(std::uint64_t seed) {
  std::vector<OpCheck> out;
  Rng rng(seed);
  constexpr double eps = 1e-6;

  {
    const Tensor x = uniform({2, 2, 5, 6}, rng);
    const Tensor w = uniform({3, 2, 3, 3}, rng);
    const Tensor b = uniform({1, 3, 1, 1}, rng);
    const std::uint64_t s = rng();
    auto builder = [&](const std::vector<Tensor>& l) {
      ConvParams p{l[1], l[2], {1, 1}};
      Rng r(s);
      return projected(conv2d(l[0], p), r);
    };
    out.push_back({"conv2d", worst(grad_check(builder, {x, w, b}, eps))});
  }
  {
    const Tensor x = signed_away_from_zero({1, 3, 4, 4}, rng, 1e-2);
    const std::uint64_t s = rng();
    auto builder = [&](const std::vector<Tensor>& l) {
      Rng r(s);
      return projected(relu(l[0]), r);
    };
    out.push_back({"relu", worst(grad_check(builder, {x}, eps))});
  }
  {
    const Tensor a = uniform({1, 2, 3, 4}, rng);
    const Tensor b = uniform({1, 3, 3, 4}, rng);
    const std::uint64_t s = rng();
    auto builder = [&](const std::vector<Tensor>& l) {
      Rng r(s);
      return projected(concat_channels(l), r);
    };
    out.push_back({"concat", worst(grad_check(builder, {a, b}, eps))});
  }
  {
    const Tensor a = uniform({2, 2, 3, 3}, rng);
    const Tensor b = uniform({2, 2, 3, 3}, rng);
    const std::uint64_t s = rng();
    auto builder = [&](const std::vector<Tensor>& l) {
      Rng r(s);
      return projected(add(l[0], l[1]), r);
    };
    out.push_back({"add", worst(grad_check(builder, {a, b}, eps))});
  }
  {
    const Tensor x = uniform({1, 8, 3, 2}, rng);
    const std::uint64_t s = rng();
    auto builder = [&](const std::vector<Tensor>& l) {
      Rng r(s);
      return projected(pixel_shuffle(l[0], 2), r);
    };
    out.push_back({"pixel_shuffle", worst(grad_check(builder, {x}, 1e-4))});
  }
  {
    // Prediction kept at least 0.1 away from the target elementwise.
    const Tensor target = uniform({1, 2, 4, 4}, rng);
    const Tensor offset = signed_away_from_zero({1, 2, 4, 4}, rng, 0.1);
    const Tensor pred = Tensor::from_values(target.shape(), target.values() + offset.values(), true);
    auto builder = [&](const std::vector<Tensor>& l) { return l1_loss(l[0], target); };
    out.push_back({"l1_loss", worst(grad_check(builder, {pred}, eps))});
  }
  {
    MlrnConfig config;
    config.g = 2;
    config.n_blocks = 1;
    config.scale = 2;
    Model model = Model::build(config, rng());
    Tensor x = uniform({1, 3, 8, 8}, rng).detach();
    Tensor target = uniform({1, 3, 16, 16}, rng, -3.0, 3.0).detach();
    auto builder = [&](const std::vector<Tensor>& l) {
      model.set_parameters(l);
      return l1_loss(forward(model, x), target);
    };
    out.push_back({"end_to_end", worst(grad_check(builder, model.parameters(), eps))});
  }
  return out;
}

}  // namespace mlrn

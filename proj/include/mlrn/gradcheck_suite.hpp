#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mlrn {

struct OpCheck {
  std::string op;
  double max_rel_error = 0.0;
};

/// Finite-difference checks for conv2d, relu, concat, add, pixel_shuffle,
/// l1_loss and an end-to-end MLRN (G=2, N=1, r=2, 8x8 input), in that order.
std::vector<OpCheck> run_gradcheck_suite(std::uint64_t seed = 1);

}  // namespace mlrn

#pragma once

#include "mlrn/tensor.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mlrn {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using NamedTensor = std::pair<std::string, Tensor>;

// Container layout (all integers little-endian):
//   "MLRN" 0x01
//   repeated: u64 name length, UTF-8 name, u64 n, c, h, w, f64 values[n*c*h*w]
void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(const std::filesystem::path& path);

std::string encode_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensors(const std::string& bytes);

}  // namespace mlrn

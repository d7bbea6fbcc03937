#include "mlrn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mlrn {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'R', 'N'};
constexpr unsigned char kVersion = 0x01;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  const char* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("tensor container truncated at byte " + std::to_string(pos_));
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint64_t u64() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(8));
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_tensors(const std::vector<NamedTensor>& tensors) {
  std::string out(kMagic, sizeof kMagic);
  out.push_back(static_cast<char>(kVersion));
  for (const auto& [name, t] : tensors) {
    put_u64(out, name.size());
    out += name;
    const Shape s = t.shape();
    for (Index d : {s.n, s.c, s.h, s.w}) put_u64(out, static_cast<std::uint64_t>(d));
    for (double v : t.values()) put_f64(out, v);
  }
  return out;
}

std::vector<NamedTensor> decode_tensors(const std::string& bytes) {
  Reader in(bytes);
  if (std::memcmp(in.take(4), kMagic, 4) != 0) throw FormatError("missing MLRN magic");
  const auto version = static_cast<unsigned char>(*in.take(1));
  if (version != kVersion) throw FormatError("unsupported container version " + std::to_string(version));

  std::vector<NamedTensor> out;
  while (!in.done()) {
    const std::uint64_t len = in.u64();
    std::string name(in.take(len), len);
    Shape s;
    s.n = static_cast<Index>(in.u64());
    s.c = static_cast<Index>(in.u64());
    s.h = static_cast<Index>(in.u64());
    s.w = static_cast<Index>(in.u64());
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) throw FormatError("bad shape for tensor " + name);
    Values v(s.numel());
    for (Index i = 0; i < s.numel(); ++i) v[i] = in.f64();
    out.emplace_back(std::move(name), Tensor::from_values(s, std::move(v)));
  }
  return out;
}

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_tensors(tensors);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::vector<NamedTensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_tensors(bytes);
}

}  // namespace mlrn

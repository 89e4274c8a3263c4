#include "ccs/nn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ccs/errors.hpp"
#include "ccs/nn/rng.hpp"

namespace ccs::nn {

namespace {

constexpr char kMagic[8] = {'C', 'C', 'S', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

void put_string(std::string& out, const std::string& s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T le(const char* field) {
    need(sizeof(T), field);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  double f64(const char* field) { return std::bit_cast<double>(le<std::uint64_t>(field)); }

  std::string string(const char* field) {
    const auto n = le<std::uint32_t>(field);
    need(n, field);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* field) const {
    if (pos_ + n > bytes_.size()) throw ParseError(std::string("checkpoint truncated while reading ") + field);
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t position() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add_parameters(const ParameterSet& params, const std::string& prefix) {
  for (const auto& p : params.items()) {
    arrays.push_back({prefix + p.name, p.tensor.shape(), p.tensor.to_vector()});
  }
}

void Checkpoint::restore_parameters(ParameterSet& params, const std::string& prefix) const {
  for (auto& p : params.items()) {
    const auto* stored = find(prefix + p.name);
    if (!stored) throw ParseError("checkpoint has no array '" + prefix + p.name + "'");
    if (stored->shape != p.tensor.shape()) {
      throw ParseError("checkpoint array '" + prefix + p.name + "' has shape " + shape_to_string(stored->shape) +
                       ", model expects " + shape_to_string(p.tensor.shape()));
    }
    std::copy(stored->values.begin(), stored->values.end(), p.tensor.mutable_data().begin());
  }
}

const NamedArray* Checkpoint::find(const std::string& name) const {
  auto it = std::find_if(arrays.begin(), arrays.end(), [&](const NamedArray& a) { return a.name == name; });
  return it == arrays.end() ? nullptr : &*it;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put_le(out, kCheckpointVersion);
  put_string(out, ckpt.rng_algorithm.empty() ? std::string(Rng::kAlgorithm) : ckpt.rng_algorithm);
  put_le(out, ckpt.rng_seed);
  put_le(out, ckpt.rng_counter);
  put_le(out, ckpt.step);
  put_string(out, ckpt.config);
  put_le(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    if (shape_size(a.shape) != a.values.size()) throw ShapeError("checkpoint array '" + a.name + "' is inconsistent");
    put_string(out, a.name);
    put_le(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put_le(out, static_cast<std::uint64_t>(d));
    for (double v : a.values) put_f64(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a checkpoint file (bad magic)");
  }
  Reader r(bytes);
  r.skip(sizeof(kMagic));
  const auto version = r.le<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.rng_algorithm = r.string("rng algorithm");
  ckpt.rng_seed = r.le<std::uint64_t>("rng seed");
  ckpt.rng_counter = r.le<std::uint64_t>("rng counter");
  ckpt.step = r.le<std::uint64_t>("step");
  ckpt.config = r.string("config");
  const auto count = r.le<std::uint32_t>("array count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.string("array name");
    const auto rank = r.le<std::uint32_t>("array rank");
    for (std::uint32_t d = 0; d < rank; ++d) a.shape.push_back(static_cast<std::size_t>(r.le<std::uint64_t>("array dim")));
    const auto n = shape_size(a.shape);
    r.need(n * 8, "array payload");
    a.values.resize(n);
    for (auto& v : a.values) v = r.f64("array payload");
    ckpt.arrays.push_back(std::move(a));
  }
  if (!r.done()) throw ParseError("trailing bytes after checkpoint payload");
  return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return decode_checkpoint(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace ccs::nn

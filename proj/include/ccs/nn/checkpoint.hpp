#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccs/nn/parameters.hpp"
#include "ccs/nn/tensor.hpp"

namespace ccs::nn {

// Binary checkpoint container. All integers and floats are little-endian.
//
//   magic        8 bytes  "CCSCKPT1"
//   version      u32      kCheckpointVersion
//   rng_algo     u32 length + bytes (Rng::kAlgorithm)
//   rng_seed     u64
//   rng_counter  u64
//   step         u64
//   config       u32 length + UTF-8 bytes (JSON text)
//   count        u32 number of arrays
//   per array:   u32 name length + name bytes
//                u32 rank, rank × u64 dims
//                prod(dims) × f64 payload
//
// Arrays keep insertion order, so identical contents serialize to identical bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;

  bool operator==(const NamedArray&) const = default;
};

struct Checkpoint {
  std::string rng_algorithm;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_counter = 0;
  std::uint64_t step = 0;
  std::string config;
  std::vector<NamedArray> arrays;

  bool operator==(const Checkpoint&) const = default;

  void add_parameters(const ParameterSet& params, const std::string& prefix = "");
  // Copies stored values into matching parameters; every parameter must be present
  // with the same shape.
  void restore_parameters(ParameterSet& params, const std::string& prefix = "") const;
  const NamedArray* find(const std::string& name) const;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ccs::nn

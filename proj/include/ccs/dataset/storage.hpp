#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ccs/dataset/generator.hpp"

namespace ccs::dataset {

inline constexpr int kFormatVersion = 1;

struct Dataset {
  std::size_t n_pc = 0;
  std::vector<ShapeRecord> shapes;
  // "train" / "val" / "test" -> shape ids. May be empty.
  std::map<std::string, std::vector<std::string>> splits;

  const ShapeRecord& find(const std::string& shape_id) const;
  std::vector<ShapeRecord> subset(const std::string& split) const;
};

// Layout:
//   <dir>/manifest.json       format, version, n_pc, shapes, splits
//   <dir>/parts/<id>_<k>.bin  n_pc x 3 little-endian float32
// Poses and contact points are decimal text with 17 significant digits, so
// they load bit-exactly. Part coordinates must be exactly representable in
// float32 (generated parts are); save throws ContractError otherwise.
void save_dataset(const std::filesystem::path& dir, const Dataset& data);

// Throws ParseError naming the file and field on any malformed or missing
// input, including a version mismatch.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace ccs::dataset

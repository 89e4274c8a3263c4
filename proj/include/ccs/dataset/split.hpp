#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ccs::dataset {

// Seeded Fisher–Yates shuffle, then train = round(f0·n), val = round(f1·n),
// test = the rest. Fractions must be non-negative and sum to 1 (±1e-9).
std::map<std::string, std::vector<std::string>> split_ids(std::vector<std::string> ids,
                                                          const std::array<double, 3>& fractions, std::uint64_t seed);

}  // namespace ccs::dataset

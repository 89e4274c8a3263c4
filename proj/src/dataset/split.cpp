#include "ccs/dataset/split.hpp"

#include <cmath>

#include "ccs/errors.hpp"
#include "ccs/nn/rng.hpp"

namespace ccs::dataset {

std::map<std::string, std::vector<std::string>> split_ids(std::vector<std::string> ids,
                                                          const std::array<double, 3>& fractions, std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0)) throw ParameterError("split fractions must be non-negative");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw ParameterError("split fractions must sum to 1");
  }
  nn::Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);

  const auto n = static_cast<double>(ids.size());
  const auto n_train = std::min(ids.size(), static_cast<std::size_t>(std::llround(fractions[0] * n)));
  const auto n_val = std::min(ids.size() - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));
  std::map<std::string, std::vector<std::string>> out;
  out["train"].assign(ids.begin(), ids.begin() + n_train);
  out["val"].assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  out["test"].assign(ids.begin() + n_train + n_val, ids.end());
  return out;
}

}  // namespace ccs::dataset

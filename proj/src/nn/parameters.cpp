#include "ccs/nn/parameters.hpp"

#include <algorithm>

#include "ccs/errors.hpp"

namespace ccs::nn {

Tensor ParameterSet::add(std::string name, Tensor tensor) {
  if (find(name)) throw ContractError("duplicate parameter name '" + name + "'");
  if (!tensor.requires_grad()) tensor = Tensor::from(tensor.shape(), tensor.to_vector(), true);
  items_.push_back({std::move(name), tensor});
  return tensor;
}

Tensor ParameterSet::add_uniform(std::string name, Shape shape, double bound, Rng& rng) {
  std::vector<double> values(shape_size(shape));
  for (auto& v : values) v = rng.uniform(-bound, bound);
  return add(std::move(name), Tensor::from(std::move(shape), std::move(values), true));
}

Tensor ParameterSet::add_constant(std::string name, Shape shape, double value) {
  return add(std::move(name), Tensor::full(std::move(shape), value, true));
}

const Parameter* ParameterSet::find(const std::string& name) const {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const Parameter& p) { return p.name == name; });
  return it == items_.end() ? nullptr : &*it;
}

std::size_t ParameterSet::element_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.tensor.size();
  return n;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.name);
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.tensor.zero_grad();
}

}  // namespace ccs::nn

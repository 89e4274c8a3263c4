#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ccs/nn/rng.hpp"
#include "ccs/nn/tensor.hpp"

namespace ccs::nn {

struct Parameter {
  std::string name;
  Tensor tensor;
};

// Ordered registry of trainable leaves. Names are unique; insertion order is
// the order used by the optimizer and the checkpoint writer.
class ParameterSet {
 public:
  Tensor add(std::string name, Tensor tensor);
  Tensor add_uniform(std::string name, Shape shape, double bound, Rng& rng);
  Tensor add_constant(std::string name, Shape shape, double value);

  const std::vector<Parameter>& items() const { return items_; }
  std::vector<Parameter>& items() { return items_; }
  const Parameter* find(const std::string& name) const;
  std::size_t size() const { return items_.size(); }
  std::size_t element_count() const;
  std::vector<std::string> names() const;

  void zero_grad();

 private:
  std::vector<Parameter> items_;
};

}  // namespace ccs::nn

#include "ccs/nn/optim.hpp"

#include <cmath>
#include <string>

#include "ccs/errors.hpp"

namespace ccs::nn {

AdamState AdamState::zeros_like(const ParameterSet& params) {
  AdamState s;
  for (const auto& p : params.items()) {
    s.first_moment.emplace_back(p.tensor.size(), 0.0);
    s.second_moment.emplace_back(p.tensor.size(), 0.0);
  }
  return s;
}

void adam_step(ParameterSet& params, AdamState& state, double lr, const AdamConfig& config) {
  adam_step(params, state, lr, std::vector<bool>(params.size(), true), config);
}

void adam_step(ParameterSet& params, AdamState& state, double lr, const std::vector<bool>& active,
               const AdamConfig& config) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ParameterError("adam_step: learning rate must be finite and non-negative, got " + std::to_string(lr));
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: optimizer state does not match the parameter set");
  }
  if (active.size() != params.size()) throw ContractError("adam_step: mask does not match the parameter set");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& tensor = params.items()[i].tensor;
    if (!active[i] || !tensor.has_grad()) continue;
    auto value = tensor.mutable_data();
    const auto grad = tensor.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * grad[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * grad[j] * grad[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

double global_grad_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (const auto& p : params.items()) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  const double total = global_grad_norm(params);
  if (total > max_norm) {
    const double factor = max_norm / total;
    for (auto& p : params.items()) {
      if (!p.tensor.has_grad()) continue;
      for (auto& g : p.tensor.mutable_grad()) g *= factor;
    }
  }
  return total;
}

}  // namespace ccs::nn

#include "ccs/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccs::nn {

bool GradCheckReport::passed() const {
  return std::all_of(parameters.begin(), parameters.end(), [](const ParameterCheck& p) { return p.passed; });
}

double GradCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& p : parameters) worst = std::max(worst, p.max_relative_error);
  return worst;
}

std::vector<std::string> GradCheckReport::failures() const {
  std::vector<std::string> out;
  for (const auto& p : parameters)
    if (!p.passed) out.push_back(p.name);
  return out;
}

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  os.precision(3);
  for (const auto& p : parameters) {
    os << (p.passed ? "ok   " : "FAIL ") << p.name << "  entries=" << p.entries
       << "  max_rel=" << std::scientific << p.max_relative_error << "  max_abs=" << p.max_absolute_error
       << std::defaultfloat << '\n';
  }
  os << (passed() ? "PASS" : "FAIL") << " (tolerance " << tolerance << ", worst " << max_relative_error() << ")\n";
  return os.str();
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport grad_check(const std::function<Tensor()>& fn, std::vector<Parameter> params,
                           const GradCheckOptions& options) {
  for (auto& p : params) p.tensor.zero_grad();
  fn().backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());

  GradCheckReport report;
  report.tolerance = options.tolerance;
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& tensor = params[i].tensor;
    auto values = tensor.mutable_data();
    ParameterCheck check{params[i].name, values.size()};
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double original = values[j];
      values[j] = original + options.step;
      const double up = fn().item();
      values[j] = original - options.step;
      const double down = fn().item();
      values[j] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      const double abs_err = std::abs(analytic[i][j] - numeric);
      check.max_absolute_error = std::max(check.max_absolute_error, abs_err);
      const double rel = relative_error(analytic[i][j], numeric, options.floor);
      if (!(rel <= check.max_relative_error)) check.max_relative_error = std::isnan(rel) ? INFINITY : rel;
    }
    check.passed = check.max_relative_error <= options.tolerance;
    report.parameters.push_back(std::move(check));
  }
  return report;
}

GradCheckReport grad_check(const std::function<Tensor()>& fn, const ParameterSet& params,
                           const GradCheckOptions& options) {
  return grad_check(fn, params.items(), options);
}

}  // namespace ccs::nn

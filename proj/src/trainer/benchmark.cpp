#include "ccs/trainer/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "ccs/errors.hpp"
#include "ccs/workspace/self_attention.hpp"
#include "ccs/workspace/workspace.hpp"

namespace ccs::trainer {

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("slope fit needs at least two matching points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw ContractError("slope fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0) throw ContractError("slope fit needs distinct x values");
  return sxy / sxx;
}

void ScalingResult::write_csv(std::ostream& out) const {
  char buf[128];
  out << "n,workspace_seconds,reference_seconds\n";
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", p.n, p.workspace_seconds, p.reference_seconds);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "# workspace_slope,%.6f\n# reference_slope,%.6f\n", workspace_slope, reference_slope);
  out << buf;
}

namespace {

// Mean time of one call over a run of at least min_measure_seconds.
template <typename F>
double measure(F&& f, double min_seconds) {
  using clock = std::chrono::steady_clock;
  std::size_t calls = 0;
  const auto begin = clock::now();
  double elapsed = 0;
  do {
    f();
    ++calls;
    elapsed = std::chrono::duration<double>(clock::now() - begin).count();
  } while (elapsed < min_seconds);
  return elapsed / static_cast<double>(calls);
}

}  // namespace

ScalingResult bench_scaling(const ScalingConfig& config) {
  if (config.ns.size() < 2) throw ParameterError("bench-scaling needs at least two values of N");
  if (config.repetitions < 1) throw ParameterError("bench-scaling needs at least one repetition");
  const workspace::WorkspaceDims dims{config.slots, config.dim, config.dim, config.dim, config.heads};
  dims.validate();

  nn::Rng rng(config.seed);
  nn::ParameterSet params;
  const auto ws = workspace::make_workspace_params(params, "workspace", dims, rng);
  const auto state = workspace::make_initial_state(params, "workspace", dims, rng);
  const auto ref = workspace::make_self_attention_params(params, "reference", config.dim, config.heads, rng);

  nn::NoGradGuard no_grad;
  std::vector<workspace::AssemblerStates> inputs;
  for (auto n : config.ns) {
    if (n < 1) throw ParameterError("bench-scaling: N must be positive");
    auto values = rng.normal_vector(n * config.dim);
    inputs.push_back({nn::Tensor::from({n, config.dim}, std::move(values))});
  }
  const auto run_workspace = [&](std::size_t i) { return workspace::workspace_block(inputs[i], state, ws, config.k); };
  const auto run_reference = [&](std::size_t i) { return workspace::reference_self_attention_block(inputs[i], ref); };

  // Warm caches and clocks, then interleave the sizes in every round so slow
  // phases of the machine hit all of them alike; keep the fastest round.
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    measure([&] { return run_workspace(i); }, config.min_measure_seconds);
    measure([&] { return run_reference(i); }, config.min_measure_seconds);
  }
  ScalingResult result;
  result.config = config;
  result.points.resize(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    result.points[i] = {config.ns[i], 1e300, 1e300};
  }
  for (std::size_t r = 0; r < config.repetitions; ++r) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      auto& p = result.points[i];
      p.workspace_seconds = std::min(p.workspace_seconds, measure([&] { return run_workspace(i); }, config.min_measure_seconds));
      p.reference_seconds = std::min(p.reference_seconds, measure([&] { return run_reference(i); }, config.min_measure_seconds));
    }
  }
  std::vector<double> xs, yw, yr;
  for (const auto& p : result.points) {
    xs.push_back(static_cast<double>(p.n));
    yw.push_back(p.workspace_seconds);
    yr.push_back(p.reference_seconds);
  }
  result.workspace_slope = fit_loglog_slope(xs, yw);
  result.reference_slope = fit_loglog_slope(xs, yr);
  return result;
}

}  // namespace ccs::trainer

#include "ccs/trainer/schedule.hpp"

#include <cmath>
#include <numbers>

#include "ccs/errors.hpp"

namespace ccs::trainer {

double lr_at(std::uint64_t step, std::uint64_t total_steps, double lr, double warmup_ratio) {
  if (!(warmup_ratio >= 0 && warmup_ratio < 1)) throw ParameterError("warmup_ratio must be in [0, 1)");
  if (total_steps == 0) throw ParameterError("total_steps must be positive");
  const double floor = lr / 100.0;
  const double total = static_cast<double>(total_steps);
  const double warmup = warmup_ratio * total;
  const double s = static_cast<double>(step);
  if (s < warmup) return lr * s / warmup;
  if (s >= total) return floor;
  const double progress = (s - warmup) / (total - warmup);
  return floor + (lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace ccs::trainer

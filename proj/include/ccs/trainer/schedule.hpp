#pragma once

#include <cstdint>

namespace ccs::trainer {

// Linear warmup from 0 to `lr` over warmup_ratio·total_steps, then cosine
// decay to lr/100 at total_steps. Steps past total_steps stay at lr/100.
double lr_at(std::uint64_t step, std::uint64_t total_steps, double lr, double warmup_ratio);

}  // namespace ccs::trainer

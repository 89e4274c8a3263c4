#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccs/dataset/storage.hpp"
#include "ccs/losses/losses.hpp"
#include "ccs/metrics/report.hpp"
#include "ccs/model/assembly_model.hpp"
#include "ccs/nn/checkpoint.hpp"
#include "ccs/nn/optim.hpp"
#include "json.hpp"

namespace ccs::trainer {

// The coarse-to-fine stage count lives in ModelConfig::ctf_stages.
struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 400;
  double warmup_ratio = 0.05;
  std::size_t batch_size = 16;
  std::size_t mon_n = 5;
  std::uint64_t seed = 0;
  // Steps between periodic checkpoints; 0 keeps only best and last.
  std::size_t checkpoint_interval = 0;
  // Overrides epochs·batches_per_epoch when non-zero.
  std::size_t max_steps = 0;
  double clip_norm = 1.0;
  // Epochs between validation passes; 0 disables validation.
  std::size_t val_interval = 1;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

// The "model" + "train" pair stored in checkpoints and read by the CLI.
struct RunConfig {
  model::ModelConfig model;
  TrainConfig train;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

struct StepLog {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double collision = 0, translation = 0, rotation = 0, shape = 0, total = 0;
  double lr = 0;
};

struct MonLog {
  std::uint64_t step = 0;
  std::string shape_id;
  std::size_t best_index = 0;
  double reported = 0;           // the MoN loss that was backpropagated
  std::vector<double> totals;    // every sample's total, in seed order
};

struct TrainOptions {
  // Where logs and checkpoints go; empty writes nothing.
  std::filesystem::path out_dir;
  // Continue from this checkpoint; logs are appended.
  std::optional<std::filesystem::path> resume;
  // Stop once this many steps are complete (the schedule still spans the
  // full run). 0: run to the end.
  std::uint64_t stop_after = 0;
  std::function<void(const StepLog&)> on_step;
  std::function<void(std::size_t epoch, double val_scd)> on_validation;
};

struct TrainResult {
  std::uint64_t total_steps = 0;
  std::uint64_t steps_done = 0;
  std::vector<StepLog> history;
  std::vector<MonLog> mon;
  std::optional<double> best_val_scd;
};

// Steps per coarse-to-fine stage; a run takes ctf_stages times this.
std::size_t total_steps(const TrainConfig& config, std::size_t train_shapes);

// Shapes used for training: the "train" split when the dataset has one,
// otherwise every shape.
std::vector<dataset::ShapeRecord> training_shapes(const dataset::Dataset& data);

// Runs MoN training. Every step draws mon_n fresh seeds per shape from the
// master stream, backpropagates the best sample's loss averaged over the
// batch, clips at clip_norm and takes an Adam step at lr_at(step).
// With ctf_stages = x the networks are trained one after another, each for
// the full schedule: stage s predicts with networks 0..s and only network s
// is updated. A non-finite loss aborts with NumericError naming the step and
// breakdown.
TrainResult train(const dataset::Dataset& data, model::AssemblyModel& model, const TrainConfig& config,
                  const TrainOptions& options = {});

// Per shape: mon_n predictions without gradients, the lowest-SCD one is
// scored. `networks` limits the coarse-to-fine prefix (0: all).
metrics::MetricsReport evaluate(std::span<const dataset::ShapeRecord> shapes, const model::AssemblyModel& model,
                                std::size_t mon_n, std::uint64_t seed, const metrics::Thresholds& thresholds = {},
                                std::size_t networks = 0);

// Checkpoint layout: "model.<param>", "adam.m.<param>", "adam.v.<param>",
// "trainer.adam_step", "trainer.best_val_scd" (NaN when unset); the master
// stream state in the rng fields; RunConfig JSON as the config text.
nn::Checkpoint make_checkpoint(const model::AssemblyModel& model, const nn::AdamState& adam, const nn::Rng& rng,
                               std::uint64_t step, const RunConfig& config, std::optional<double> best_val_scd);

struct LoadedModel {
  RunConfig config;
  model::AssemblyModel model;
  std::uint64_t step = 0;
};
LoadedModel load_model(const std::filesystem::path& checkpoint);

// Seed used to initialize parameters for a training seed.
std::uint64_t init_seed_for(std::uint64_t train_seed);

}  // namespace ccs::trainer

#include "ccs/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ccs/errors.hpp"
#include "ccs/json_fields.hpp"
#include "ccs/nn/ops.hpp"
#include "ccs/trainer/schedule.hpp"

namespace ccs::trainer {

namespace fs = std::filesystem;
using nn::Tensor;

void TrainConfig::validate() const {
  if (!(lr > 0) || !std::isfinite(lr)) throw ParameterError("train.lr must be positive");
  if (!(warmup_ratio >= 0 && warmup_ratio < 1)) throw ParameterError("train.warmup_ratio must be in [0, 1)");
  if (batch_size < 1) throw ParameterError("train.batch_size must be at least 1");
  if (mon_n < 1) throw ParameterError("train.mon_n must be at least 1");
  if (epochs < 1 && max_steps == 0) throw ParameterError("train.epochs must be at least 1");
  if (!(clip_norm > 0)) throw ParameterError("train.clip_norm must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"epochs", c.epochs},
          {"warmup_ratio", c.warmup_ratio},
          {"batch_size", c.batch_size},
          {"mon_n", c.mon_n},
          {"seed", c.seed},
          {"checkpoint_interval", c.checkpoint_interval},
          {"max_steps", c.max_steps},
          {"clip_norm", c.clip_norm},
          {"val_interval", c.val_interval}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  namespace jf = json_fields;
  const std::string ctx = "train";
  jf::expect_object(j, ctx);
  jf::reject_unknown(j,
                     {"lr", "epochs", "warmup_ratio", "batch_size", "mon_n", "seed", "checkpoint_interval", "max_steps",
                      "clip_norm", "val_interval"},
                     ctx);
  TrainConfig c;
  jf::read(j, "lr", c.lr, ctx);
  jf::read(j, "epochs", c.epochs, ctx);
  jf::read(j, "warmup_ratio", c.warmup_ratio, ctx);
  jf::read(j, "batch_size", c.batch_size, ctx);
  jf::read(j, "mon_n", c.mon_n, ctx);
  jf::read(j, "seed", c.seed, ctx);
  jf::read(j, "checkpoint_interval", c.checkpoint_interval, ctx);
  jf::read(j, "max_steps", c.max_steps, ctx);
  jf::read(j, "clip_norm", c.clip_norm, ctx);
  jf::read(j, "val_interval", c.val_interval, ctx);
  return c;
}

nlohmann::json to_json(const RunConfig& c) { return {{"model", model::to_json(c.model)}, {"train", to_json(c.train)}}; }

RunConfig run_config_from_json(const nlohmann::json& j) {
  json_fields::expect_object(j, "config");
  json_fields::reject_unknown(j, {"model", "train"}, "config");
  RunConfig c;
  if (j.contains("model")) c.model = model::model_config_from_json(j["model"]);
  if (j.contains("train")) c.train = train_config_from_json(j["train"]);
  return c;
}

std::uint64_t init_seed_for(std::uint64_t train_seed) { return nn::mix_seed(train_seed, 0x1417); }

std::size_t total_steps(const TrainConfig& config, std::size_t train_shapes) {
  if (config.max_steps != 0) return config.max_steps;
  const std::size_t per_epoch = (train_shapes + config.batch_size - 1) / config.batch_size;
  return per_epoch * config.epochs;
}

std::vector<dataset::ShapeRecord> training_shapes(const dataset::Dataset& data) {
  if (data.splits.count("train")) return data.subset("train");
  return data.shapes;
}

namespace {

constexpr std::uint64_t kMasterTag = 0x6d61737465;
constexpr std::uint64_t kShuffleTag = 0x73687566;
constexpr std::uint64_t kValTag = 0x76616c;

struct Prepared {
  std::string id;
  std::vector<Tensor> parts;
  geometry::PoseTensors gt;
};

Prepared prepare(const dataset::ShapeRecord& r) {
  return {r.shape_id, model::clouds_to_tensors(r.parts), geometry::to_pose_tensors(r.gt_poses)};
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string breakdown_text(const losses::LossBreakdown& b) {
  return "collision=" + number(b.collision.item()) + " translation=" + number(b.translation.item()) +
         " rotation=" + number(b.rotation.item()) + " shape=" + number(b.shape.item()) +
         " total=" + number(b.total.item());
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  nn::Rng rng(nn::mix_seed(nn::mix_seed(seed, kShuffleTag), epoch));
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

class Logs {
 public:
  Logs(const fs::path& dir, bool append, std::size_t mon_n) {
    if (dir.empty()) return;
    fs::create_directories(dir);
    const auto mode = append ? std::ios::app : std::ios::trunc;
    loss_.open(dir / "loss_log.csv", std::ios::out | mode);
    mon_.open(dir / "mon_log.csv", std::ios::out | mode);
    if (!loss_ || !mon_) throw std::runtime_error("cannot open logs in " + dir.string());
    if (!append) {
      loss_ << "step,epoch,collision,translation,rotation,shape,total,lr\n";
      mon_ << "step,shape_id,best_index,reported";
      for (std::size_t j = 0; j < mon_n; ++j) mon_ << ",total_" << j;
      mon_ << '\n';
    }
  }

  void write(const StepLog& s) {
    if (!loss_.is_open()) return;
    loss_ << s.step << ',' << s.epoch << ',' << number(s.collision) << ',' << number(s.translation) << ','
          << number(s.rotation) << ',' << number(s.shape) << ',' << number(s.total) << ',' << number(s.lr) << '\n';
  }
  void write(const MonLog& m) {
    if (!mon_.is_open()) return;
    mon_ << m.step << ',' << m.shape_id << ',' << m.best_index << ',' << number(m.reported);
    for (double t : m.totals) mon_ << ',' << number(t);
    mon_ << '\n';
  }
  void flush() {
    if (loss_.is_open()) loss_.flush();
    if (mon_.is_open()) mon_.flush();
  }

 private:
  std::ofstream loss_, mon_;
};

}  // namespace

nn::Checkpoint make_checkpoint(const model::AssemblyModel& model, const nn::AdamState& adam, const nn::Rng& rng,
                               std::uint64_t step, const RunConfig& config, std::optional<double> best_val_scd) {
  nn::Checkpoint c;
  c.rng_algorithm = std::string(nn::Rng::kAlgorithm);
  c.rng_seed = rng.seed();
  c.rng_counter = rng.counter();
  c.step = step;
  c.config = to_json(config).dump();
  c.add_parameters(model.parameters(), "model.");
  const auto& items = model.parameters().items();
  if (adam.first_moment.size() == items.size()) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      c.arrays.push_back({"adam.m." + items[i].name, items[i].tensor.shape(), adam.first_moment[i]});
      c.arrays.push_back({"adam.v." + items[i].name, items[i].tensor.shape(), adam.second_moment[i]});
    }
  }
  c.arrays.push_back({"trainer.adam_step", {1}, {static_cast<double>(adam.step)}});
  c.arrays.push_back(
      {"trainer.best_val_scd", {1}, {best_val_scd ? *best_val_scd : std::numeric_limits<double>::quiet_NaN()}});
  return c;
}

LoadedModel load_model(const fs::path& checkpoint) {
  const auto c = nn::load_checkpoint(checkpoint);
  RunConfig config;
  try {
    config = run_config_from_json(nlohmann::json::parse(c.config));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(checkpoint.string() + ": config: " + e.what());
  }
  LoadedModel out{config, model::AssemblyModel(config.model, init_seed_for(config.train.seed)), c.step};
  c.restore_parameters(out.model.parameters(), "model.");
  return out;
}

metrics::MetricsReport evaluate(std::span<const dataset::ShapeRecord> shapes, const model::AssemblyModel& model,
                                std::size_t mon_n, std::uint64_t seed, const metrics::Thresholds& thresholds,
                                std::size_t networks) {
  if (mon_n < 1) throw ParameterError("evaluate: mon_n must be at least 1");
  nn::NoGradGuard no_grad;
  std::vector<metrics::ShapeMetrics> rows;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const auto& r = shapes[s];
    const auto parts = model::clouds_to_tensors(r.parts);
    std::vector<std::vector<geometry::Pose>> candidates;
    for (std::size_t j = 0; j < mon_n; ++j) {
      candidates.push_back(model.predict(parts, nn::mix_seed(nn::mix_seed(seed, s), j), nullptr, networks).values());
    }
    auto m = metrics::score_min_matching(candidates, r.gt_poses, r.parts, r.contacts, thresholds);
    m.shape_id = r.shape_id;
    rows.push_back(std::move(m));
  }
  return metrics::make_report(std::move(rows), thresholds);
}

TrainResult train(const dataset::Dataset& data, model::AssemblyModel& model, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  const auto shapes = training_shapes(data);
  if (shapes.empty()) throw ContractError("train: the training split is empty");
  if (data.n_pc != model.config().n_pc) {
    throw ContractError("train: dataset has n_pc=" + std::to_string(data.n_pc) + " but the model expects " +
                        std::to_string(model.config().n_pc));
  }
  std::vector<Prepared> prepared;
  for (const auto& s : shapes) prepared.push_back(prepare(s));
  std::vector<dataset::ShapeRecord> val;
  if (config.val_interval > 0 && data.splits.count("val")) val = data.subset("val");

  const RunConfig run{model.config(), config};
  auto& params = model.parameters();
  nn::AdamState adam = nn::AdamState::zeros_like(params);
  nn::Rng rng(nn::mix_seed(config.seed, kMasterTag));
  std::uint64_t start = 0;
  std::optional<double> best;

  if (options.resume) {
    const auto c = nn::load_checkpoint(*options.resume);
    if (c.rng_algorithm != nn::Rng::kAlgorithm) throw ParseError(options.resume->string() + ": unknown rng algorithm");
    c.restore_parameters(params, "model.");
    const auto& items = params.items();
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto* m = c.find("adam.m." + items[i].name);
      const auto* v = c.find("adam.v." + items[i].name);
      if (!m || !v) throw ParseError(options.resume->string() + ": missing optimizer state for " + items[i].name);
      adam.first_moment[i] = m->values;
      adam.second_moment[i] = v->values;
    }
    const auto* adam_step = c.find("trainer.adam_step");
    const auto* best_scd = c.find("trainer.best_val_scd");
    if (!adam_step || !best_scd) throw ParseError(options.resume->string() + ": missing trainer state");
    adam.step = static_cast<std::uint64_t>(adam_step->values.at(0));
    if (!std::isnan(best_scd->values.at(0))) best = best_scd->values.at(0);
    rng = nn::Rng(c.rng_seed, c.rng_counter);
    start = c.step;
  }

  const std::size_t ctf = model.network_count();
  std::vector<std::vector<bool>> owned(ctf, std::vector<bool>(params.size(), false));
  for (std::size_t i = 0; i < params.size(); ++i) owned[model.network_of(params.items()[i].name)][i] = true;

  TrainResult result;
  const std::uint64_t stage_steps = total_steps(config, prepared.size());
  result.total_steps = stage_steps * ctf;
  const std::size_t per_epoch = (prepared.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t stage_epochs = (stage_steps + per_epoch - 1) / per_epoch;
  const std::uint64_t end = options.stop_after != 0 ? std::min<std::uint64_t>(options.stop_after, result.total_steps)
                                                     : result.total_steps;
  Logs logs(options.out_dir, options.resume.has_value(), config.mon_n);
  const auto save = [&](const std::string& name, std::uint64_t step) {
    if (options.out_dir.empty()) return;
    nn::save_checkpoint(make_checkpoint(model, adam, rng, step, run, best), options.out_dir / name);
  };

  std::vector<std::size_t> order;
  std::size_t order_epoch = std::numeric_limits<std::size_t>::max();
  for (std::uint64_t step = start; step < end; ++step) {
    const std::size_t stage = step / stage_steps;
    const std::uint64_t local = step % stage_steps;
    const std::size_t epoch = stage * stage_epochs + local / per_epoch;
    const std::size_t b = local % per_epoch;
    // Each stage starts its own optimizer run; its moments are still zero.
    if (local == 0) adam.step = 0;
    if (epoch != order_epoch) {
      order = epoch_order(prepared.size(), config.seed, epoch);
      order_epoch = epoch;
    }
    const std::size_t first = b * config.batch_size;
    const std::size_t last = std::min(first + config.batch_size, prepared.size());
    const double weight = 1.0 / static_cast<double>(last - first);

    StepLog log;
    log.step = step;
    log.epoch = epoch;
    log.lr = lr_at(local, stage_steps, config.lr, config.warmup_ratio);
    params.zero_grad();
    for (std::size_t k = first; k < last; ++k) {
      const auto& shape = prepared[order[k]];
      std::vector<std::uint64_t> seeds(config.mon_n);
      for (auto& s : seeds) s = rng.next_u64();
      auto mon = losses::mon_loss(
          [&](std::uint64_t seed) {
            return losses::total_loss(model.predict(shape.parts, seed, nullptr, stage + 1).poses, shape.gt, shape.parts,
                                      model.config().loss);
          },
          seeds);
      const double total = mon.best.total.item();
      if (!std::isfinite(total)) {
        throw NumericError("non-finite loss at step " + std::to_string(step) + " on shape " + shape.id + ": " +
                           breakdown_text(mon.best));
      }
      nn::scale(mon.best.total, weight).backward();
      log.collision += weight * mon.best.collision.item();
      log.translation += weight * mon.best.translation.item();
      log.rotation += weight * mon.best.rotation.item();
      log.shape += weight * mon.best.shape.item();
      log.total += weight * total;

      MonLog m{step, shape.id, mon.best_index, total, std::move(mon.totals)};
      logs.write(m);
      result.mon.push_back(std::move(m));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!owned[stage][i]) params.items()[i].tensor.zero_grad();
    }
    nn::clip_grad_norm(params, config.clip_norm);
    nn::adam_step(params, adam, log.lr, owned[stage]);

    logs.write(log);
    result.history.push_back(log);
    if (options.on_step) options.on_step(log);

    const bool epoch_end = b + 1 == per_epoch || local + 1 == stage_steps;
    if (epoch_end && !val.empty() && (local / per_epoch + 1) % config.val_interval == 0) {
      const double scd =
          evaluate(val, model, config.mon_n, nn::mix_seed(config.seed, kValTag), {}, stage + 1).aggregate.scd;
      if (options.on_validation) options.on_validation(epoch, scd);
      if (!best || scd < *best) {
        best = scd;
        logs.flush();
        save("best.ckpt", step + 1);
      }
    }
    if (config.checkpoint_interval != 0 && (step + 1) % config.checkpoint_interval == 0) {
      save("step_" + std::to_string(step + 1) + ".ckpt", step + 1);
    }
  }
  logs.flush();
  save("last.ckpt", end);
  result.steps_done = end;
  result.best_val_scd = best;
  return result;
}

}  // namespace ccs::trainer

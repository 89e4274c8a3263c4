#include "ccs/cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "ccs/dataset/split.hpp"
#include "ccs/dataset/storage.hpp"
#include "ccs/errors.hpp"
#include "ccs/geometry/ply.hpp"
#include "ccs/nn/gradcheck.hpp"
#include "ccs/trainer/benchmark.hpp"
#include "ccs/trainer/trainer.hpp"

namespace ccs::cli {

namespace fs = std::filesystem;

fs::path make_run_dir(const fs::path& base, std::uint64_t seed) {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &utc);
  const std::string name = std::string(stamp) + "-seed" + std::to_string(seed);
  fs::create_directories(base);
  for (int attempt = 0;; ++attempt) {
    const fs::path dir = base / (attempt == 0 ? name : name + "-" + std::to_string(attempt));
    if (fs::create_directory(dir)) return dir;
  }
}

namespace {

fs::path run_base() {
  const char* env = std::getenv("CCS_RUN_DIR");
  return env && *env ? fs::path(env) : fs::path("runs");
}

nlohmann::json read_config_file(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open config file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "data" && key != "model" && key != "train") {
      throw ParseError(path + ": unknown section '" + key + "'");
    }
  }
  return j;
}

template <typename T>
void apply(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

void print_resolved(std::ostream& out, const nlohmann::json& resolved) {
  out << "resolved config:\n" << resolved.dump(2) << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// ---------------------------------------------------------------- gen-data

struct GenFlags {
  std::string config;
  std::optional<std::size_t> count, n_pc, min_parts, max_parts, min_cuts, max_cuts, dense_points;
  std::optional<std::uint64_t> seed;
  std::optional<double> jitter, contact_distance;
  std::vector<std::string> primitives;
  std::vector<double> split;
  std::size_t threads = 0;
  std::string out;
};

void add_gen_flags(CLI::App* app, GenFlags& f) {
  app->add_option("--config", f.config, "JSON config file (section \"data\")");
  app->add_option("--count", f.count, "number of shapes");
  app->add_option("--seed", f.seed, "dataset seed");
  app->add_option("--n-pc", f.n_pc, "points per part");
  app->add_option("--min-parts", f.min_parts);
  app->add_option("--max-parts", f.max_parts);
  app->add_option("--min-cuts", f.min_cuts);
  app->add_option("--max-cuts", f.max_cuts);
  app->add_option("--dense-points", f.dense_points, "dense sample size before partitioning (0: automatic)");
  app->add_option("--jitter", f.jitter, "Gaussian noise on dense points");
  app->add_option("--contact-distance", f.contact_distance);
  app->add_option("--primitives", f.primitives, "box,cylinder,sphere-shell")->delimiter(',');
  app->add_option("--split", f.split, "train,val,test fractions")->delimiter(',')->expected(3);
  app->add_option("--threads", f.threads, "worker threads (0: all cores)");
  app->add_option("--out", f.out, "dataset directory (default: <run dir>/dataset)");
}

int gen_data(const GenFlags& f, std::ostream& out) {
  const auto file = read_config_file(f.config);
  auto c = file.contains("data") ? dataset::gen_config_from_json(file["data"]) : dataset::GenConfig{};
  apply(f.count, c.count);
  apply(f.seed, c.seed);
  apply(f.n_pc, c.n_pc);
  apply(f.min_parts, c.min_parts);
  apply(f.max_parts, c.max_parts);
  apply(f.min_cuts, c.min_cuts);
  apply(f.max_cuts, c.max_cuts);
  apply(f.dense_points, c.dense_points);
  apply(f.jitter, c.jitter);
  apply(f.contact_distance, c.contact_distance);
  if (!f.primitives.empty()) c.primitives = f.primitives;
  if (!f.split.empty()) c.split = {f.split[0], f.split[1], f.split[2]};
  c.validate();

  const fs::path run_dir = make_run_dir(run_base(), c.seed);
  const fs::path target = f.out.empty() ? run_dir / "dataset" : fs::path(f.out);
  const nlohmann::json resolved{{"verb", "gen-data"}, {"data", dataset::to_json(c)}, {"out", target.string()}};
  print_resolved(out, resolved);
  write_json(run_dir / "config.json", resolved);

  dataset::Dataset data;
  data.n_pc = c.n_pc;
  data.shapes = dataset::generate_dataset(c, f.threads);
  std::vector<std::string> ids;
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& s : data.shapes) {
    ids.push_back(s.shape_id);
    ++histogram[s.part_count()];
  }
  data.splits = dataset::split_ids(ids, c.split, c.seed);
  dataset::save_dataset(target, data);

  out << "wrote " << data.shapes.size() << " shapes to " << target.string() << "\nparts per shape:";
  for (const auto& [n, count] : histogram) out << ' ' << n << 'x' << count;
  out << "\nsplits: train " << data.splits["train"].size() << ", val " << data.splits["val"].size() << ", test "
      << data.splits["test"].size() << '\n';
  return kOk;
}

// ------------------------------------------------------------------- train

struct TrainFlags {
  std::string config;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, warmup, clip;
  std::optional<std::size_t> epochs, batch_size, mon_n, max_steps, checkpoint_interval, val_interval;
  std::optional<std::size_t> ctf, k, stages, slots, heads, dim, noise_dim;
  std::optional<double> noise_scale, w_c, w_t, w_r, w_s, c;
  bool clamp_collision = false;
  std::size_t progress = 0;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--config", f.config, "JSON config file (sections \"model\", \"train\")");
  app->add_option("--data", f.data, "dataset directory")->required();
  app->add_option("--seed", f.seed, "training seed");
  app->add_option("--lr", f.lr, "peak learning rate");
  app->add_option("--warmup", f.warmup, "warmup ratio");
  app->add_option("--clip", f.clip, "global gradient norm bound");
  app->add_option("--epochs", f.epochs);
  app->add_option("--batch-size", f.batch_size);
  app->add_option("--mon-n", f.mon_n, "MoN samples per shape");
  app->add_option("--max-steps", f.max_steps, "override epochs with a step count");
  app->add_option("--checkpoint-interval", f.checkpoint_interval, "steps between checkpoints (0: best and last only)");
  app->add_option("--val-interval", f.val_interval, "epochs between validation passes (0: never)");
  app->add_option("--ctf", f.ctf, "coarse-to-fine stage count x");
  app->add_option("--k", f.k, "top-k write bandwidth");
  app->add_option("--stages", f.stages, "workspace stages T");
  app->add_option("--slots", f.slots, "workspace slots L");
  app->add_option("--heads", f.heads);
  app->add_option("--dim", f.dim, "sets d_a = d_l = d_e");
  app->add_option("--noise-dim", f.noise_dim);
  app->add_option("--noise-scale", f.noise_scale);
  app->add_option("--w-c", f.w_c, "collision weight");
  app->add_option("--w-t", f.w_t, "translation weight");
  app->add_option("--w-r", f.w_r, "rotation weight");
  app->add_option("--w-s", f.w_s, "shape weight");
  app->add_option("--C", f.c, "collision scale C");
  app->add_flag("--clamp-collision", f.clamp_collision, "use max(0, 1 - log(C d)) per pair");
  app->add_option("--progress", f.progress, "print the loss every this many steps (0: quiet)");
}

trainer::RunConfig resolve_run_config(const TrainFlags& f, const nlohmann::json& file, std::size_t data_n_pc) {
  trainer::RunConfig c;
  if (file.contains("model")) c.model = model::model_config_from_json(file["model"]);
  if (file.contains("train")) c.train = trainer::train_config_from_json(file["train"]);
  if (!file.contains("model") || !file["model"].contains("n_pc")) c.model.n_pc = data_n_pc;
  auto& t = c.train;
  apply(f.seed, t.seed);
  apply(f.lr, t.lr);
  apply(f.warmup, t.warmup_ratio);
  apply(f.clip, t.clip_norm);
  apply(f.epochs, t.epochs);
  apply(f.batch_size, t.batch_size);
  apply(f.mon_n, t.mon_n);
  apply(f.max_steps, t.max_steps);
  apply(f.checkpoint_interval, t.checkpoint_interval);
  apply(f.val_interval, t.val_interval);
  auto& m = c.model;
  apply(f.ctf, m.ctf_stages);
  apply(f.k, m.k);
  apply(f.stages, m.stages);
  apply(f.slots, m.slots);
  apply(f.heads, m.heads);
  if (f.dim) m.d_a = m.d_l = m.d_e = *f.dim;
  apply(f.noise_dim, m.noise_dim);
  apply(f.noise_scale, m.noise_scale);
  apply(f.w_c, m.loss.collision);
  apply(f.w_t, m.loss.translation);
  apply(f.w_r, m.loss.rotation);
  apply(f.w_s, m.loss.shape);
  apply(f.c, m.loss.C);
  if (f.clamp_collision) m.loss.clamp_collision = true;
  m.validate();
  t.validate();
  return c;
}

trainer::TrainResult run_training(const dataset::Dataset& data, const trainer::RunConfig& c, const fs::path& dir,
                                  const std::optional<fs::path>& resume, std::size_t progress, std::ostream& out) {
  model::AssemblyModel model(c.model, trainer::init_seed_for(c.train.seed));
  trainer::TrainOptions options;
  options.out_dir = dir;
  options.resume = resume;
  if (progress > 0) {
    options.on_step = [&](const trainer::StepLog& s) {
      if (s.step % progress == 0) {
        out << "step " << s.step << " epoch " << s.epoch << " total " << s.total << " shape " << s.shape << " lr "
            << s.lr << '\n';
      }
    };
  }
  options.on_validation = [&](std::size_t epoch, double scd) {
    out << "epoch " << epoch << " val SCD " << scd << '\n';
  };
  return trainer::train(data, model, c.train, options);
}

int train_verb(const TrainFlags& f, const std::string& resume, std::ostream& out) {
  const auto data = dataset::load_dataset(f.data);
  const auto c = resolve_run_config(f, read_config_file(f.config), data.n_pc);
  const fs::path run_dir = make_run_dir(run_base(), c.train.seed);
  nlohmann::json resolved{{"verb", "train"}, {"data", f.data}, {"config", trainer::to_json(c)}};
  if (!resume.empty()) resolved["resume"] = resume;
  print_resolved(out, resolved);
  write_json(run_dir / "config.json", resolved);

  const auto r = run_training(data, c, run_dir, resume.empty() ? std::nullopt : std::optional<fs::path>(resume),
                              f.progress, out);
  out << "trained " << r.steps_done << "/" << r.total_steps << " steps";
  if (!r.history.empty()) out << ", final total loss " << r.history.back().total;
  if (r.best_val_scd) out << ", best val SCD " << *r.best_val_scd;
  out << "\nrun directory: " << run_dir.string() << '\n';
  return kOk;
}

// -------------------------------------------------------------------- eval

struct EvalFlags {
  std::string checkpoint, data, split = "test";
  std::optional<std::size_t> mon_n;
  std::uint64_t seed = 0;
  double tau = 0.01, tau_c = 0.01;
};

std::vector<dataset::ShapeRecord> pick_split(const dataset::Dataset& data, const std::string& split) {
  if (split == "all" || (data.splits.empty() && split == "test")) return data.shapes;
  return data.subset(split);
}

int eval_verb(const EvalFlags& f, std::ostream& out) {
  const auto loaded = trainer::load_model(f.checkpoint);
  const auto data = dataset::load_dataset(f.data);
  const std::size_t mon_n = f.mon_n.value_or(loaded.config.train.mon_n);
  const metrics::Thresholds thresholds{f.tau, f.tau_c};
  const fs::path run_dir = make_run_dir(run_base(), f.seed);
  const nlohmann::json resolved{{"verb", "eval"},    {"checkpoint", f.checkpoint}, {"data", f.data},
                                {"split", f.split},  {"mon_n", mon_n},             {"seed", f.seed},
                                {"tau", f.tau},      {"tau_c", f.tau_c},           {"model", model::to_json(loaded.config.model)}};
  print_resolved(out, resolved);
  write_json(run_dir / "config.json", resolved);

  const auto shapes = pick_split(data, f.split);
  if (shapes.empty()) throw ContractError("split '" + f.split + "' is empty");
  const auto report = trainer::evaluate(shapes, loaded.model, mon_n, f.seed, thresholds);
  std::ofstream csv(run_dir / "metrics.csv");
  report.write_csv(csv);
  report.write_table(out);
  out << "metrics: " << (run_dir / "metrics.csv").string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- assemble

struct AssembleFlags {
  std::string checkpoint, data, shape;
  std::uint64_t seed = 0;
  bool trace = false;
};

int assemble_verb(const AssembleFlags& f, std::ostream& out) {
  const auto loaded = trainer::load_model(f.checkpoint);
  const auto data = dataset::load_dataset(f.data);
  const auto& shape = data.find(f.shape);
  const fs::path run_dir = make_run_dir(run_base(), f.seed);
  const nlohmann::json resolved{{"verb", "assemble"}, {"checkpoint", f.checkpoint}, {"data", f.data},
                                {"shape", f.shape},   {"seed", f.seed},             {"trace", f.trace}};
  print_resolved(out, resolved);
  write_json(run_dir / "config.json", resolved);

  workspace::AttentionTrace trace;
  std::vector<geometry::Pose> poses;
  {
    nn::NoGradGuard no_grad;
    poses = loaded.model.predict(model::clouds_to_tensors(shape.parts), f.seed, f.trace ? &trace : nullptr).values();
  }
  const auto cloud = geometry::assemble_shape(poses, shape.parts);
  const auto ids = geometry::assembled_part_ids(shape.parts);
  const fs::path ply = run_dir / (f.shape + "_assembly.ply");
  geometry::write_ply(ply, cloud, ids);

  const fs::path pose_file = run_dir / (f.shape + "_poses.txt");
  std::ofstream pf(pose_file);
  pf << "# part w x y z tx ty tz\n";
  char line[256];
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto& q = poses[i].rotation;
    const auto& t = poses[i].translation;
    std::snprintf(line, sizeof line, "%zu %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", i, q.w, q.x, q.y, q.z, t[0],
                  t[1], t[2]);
    pf << line;
  }
  if (!pf) throw std::runtime_error("cannot write " + pose_file.string());
  out << "assembly: " << ply.string() << "\nposes: " << pose_file.string() << '\n';
  if (f.trace) {
    const fs::path trace_file = run_dir / (f.shape + "_attention.jsonl");
    trace.write_jsonl(trace_file);
    out << "attention trace: " << trace_file.string() << '\n';
  }
  return kOk;
}

// --------------------------------------------------------------- gradcheck

struct GradFlags {
  std::uint64_t seed = 0;
  std::size_t parts = 3, n_pc = 6, dim = 4, ctf = 1;
};

int gradcheck_verb(const GradFlags& f, std::ostream& out) {
  model::ModelConfig c;
  c.n_pc = f.n_pc;
  c.d_a = c.d_l = c.d_e = f.dim;
  c.slots = 3;
  c.heads = 2;
  c.stages = 1;
  c.k = 2;
  c.noise_dim = 2;
  c.encoder_widths = {5};
  c.predictor_widths = {6};
  c.ctf_stages = f.ctf;
  c.validate();
  const nlohmann::json resolved{{"verb", "gradcheck"}, {"seed", f.seed}, {"parts", f.parts}, {"model", model::to_json(c)}};
  print_resolved(out, resolved);

  model::AssemblyModel m(c, f.seed);
  nn::Rng rng(nn::mix_seed(f.seed, 1));
  std::vector<nn::Tensor> parts;
  std::vector<geometry::Pose> gt;
  for (std::size_t i = 0; i < f.parts; ++i) {
    parts.push_back(nn::Tensor::from({f.n_pc, 3}, rng.normal_vector(f.n_pc * 3)));
    gt.push_back({geometry::random_rotation(rng), {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)}});
  }
  const auto gt_tensors = geometry::to_pose_tensors(gt);
  const auto loss = [&] { return losses::total_loss(m.predict(parts, f.seed).poses, gt_tensors, parts, c.loss).total; };
  // Gradients below 1e-5·|L| are compared absolutely: rounding in an O(|L|)
  // loss limits what central differences can resolve.
  nn::GradCheckOptions options;
  options.floor = std::max(options.floor, 1e-5 * std::abs(loss().item()));
  const auto report = nn::grad_check(loss, m.parameters(), options);
  out << report.to_string() << '\n';
  out << "max relative error " << report.max_relative_error() << (report.passed() ? " PASS" : " FAIL") << '\n';
  return report.passed() ? kOk : kRuntimeFailure;
}

// ----------------------------------------------------------- bench-scaling

int bench_verb(const trainer::ScalingConfig& c, std::ostream& out) {
  const fs::path run_dir = make_run_dir(run_base(), c.seed);
  const nlohmann::json resolved{{"verb", "bench-scaling"}, {"n", c.ns},       {"dim", c.dim},
                                {"heads", c.heads},        {"slots", c.slots}, {"k", c.k},
                                {"repetitions", c.repetitions}, {"min_measure_seconds", c.min_measure_seconds},
                                {"seed", c.seed}};
  print_resolved(out, resolved);
  write_json(run_dir / "config.json", resolved);
  const auto r = trainer::bench_scaling(c);
  std::ofstream csv(run_dir / "bench_scaling.csv");
  r.write_csv(csv);
  r.write_csv(out);
  out << "timings: " << (run_dir / "bench_scaling.csv").string() << '\n';
  return kOk;
}

// -------------------------------------------------------------------- grid

struct GridFlags {
  TrainFlags train;
  std::string sweep;
  std::vector<std::size_t> k_values{1, 2, 5, 10};
  std::vector<double> wc_values{0.0, 0.01, 0.1, 1.0};
  std::vector<double> c_values{10, 30, 50};
  std::string split = "val";
};

int grid_verb(const GridFlags& f, std::ostream& out) {
  const auto data = dataset::load_dataset(f.train.data);
  const auto base = resolve_run_config(f.train, read_config_file(f.train.config), data.n_pc);
  std::vector<trainer::RunConfig> runs;
  if (f.sweep == "k") {
    for (auto k : f.k_values) {
      auto c = base;
      c.model.k = k;
      runs.push_back(c);
    }
  } else {
    for (auto wc : f.wc_values) {
      for (auto cc : f.c_values) {
        auto c = base;
        c.model.loss.collision = wc;
        c.model.loss.C = cc;
        runs.push_back(c);
        if (wc == 0.0) break;  // C has no effect without the collision term
      }
    }
  }
  const fs::path run_dir = make_run_dir(run_base(), base.train.seed);
  nlohmann::json resolved{{"verb", "grid"}, {"sweep", f.sweep}, {"data", f.train.data}, {"split", f.split},
                          {"base", trainer::to_json(base)}};
  resolved["k_values"] = f.k_values;
  resolved["wc_values"] = f.wc_values;
  resolved["c_values"] = f.c_values;
  print_resolved(out, resolved);
  write_json(run_dir / "config.json", resolved);

  auto shapes = pick_split(data, f.split);
  if (shapes.empty()) shapes = pick_split(data, "all");
  std::ofstream csv(run_dir / "grid.csv");
  csv << "k,w_c,C,scd,pa,ca,rmse_r_deg,rmse_t\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& c = runs[i];
    const fs::path dir = run_dir / ("run" + std::to_string(i));
    model::AssemblyModel model(c.model, trainer::init_seed_for(c.train.seed));
    trainer::TrainOptions options;
    options.out_dir = dir;
    trainer::train(data, model, c.train, options);
    const auto report = trainer::evaluate(shapes, model, c.train.mon_n, c.train.seed);
    const auto& a = report.aggregate;
    char row[256];
    std::snprintf(row, sizeof row, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", c.model.k, c.model.loss.collision,
                  c.model.loss.C, a.scd, a.pa, a.ca, a.rmse_r, a.rmse_t);
    csv << row;
    csv.flush();
    out << row;
  }
  out << "grid: " << (run_dir / "grid.csv").string() << '\n';
  return kOk;
}

std::vector<const char*> to_argv(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"ccs_assembly"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return argv;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fracture assembly through a shared co-creation workspace", "ccs_assembly"};
  app.require_subcommand(1);

  GenFlags gen;
  add_gen_flags(app.add_subcommand("gen-data", "generate a synthetic fracture dataset"), gen);

  TrainFlags train;
  std::string resume;
  auto* train_cmd = app.add_subcommand("train", "train a model with MoN losses");
  add_train_flags(train_cmd, train);
  train_cmd->add_option("--resume", resume, "checkpoint to continue from");

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--data", eval.data)->required();
  eval_cmd->add_option("--split", eval.split, "train, val, test or all");
  eval_cmd->add_option("--mon-n", eval.mon_n, "samples per shape (default: the checkpoint's mon_n)");
  eval_cmd->add_option("--seed", eval.seed);
  eval_cmd->add_option("--tau", eval.tau, "part accuracy threshold");
  eval_cmd->add_option("--tau-c", eval.tau_c, "connectivity threshold");

  AssembleFlags assemble;
  auto* assemble_cmd = app.add_subcommand("assemble", "predict one assembly and write PLY + poses");
  assemble_cmd->add_option("--checkpoint", assemble.checkpoint)->required();
  assemble_cmd->add_option("--data", assemble.data)->required();
  assemble_cmd->add_option("--shape", assemble.shape, "shape id")->required();
  assemble_cmd->add_option("--seed", assemble.seed, "noise seed");
  assemble_cmd->add_flag("--trace", assemble.trace, "also write the attention weights as JSON lines");

  GradFlags grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the full model");
  grad_cmd->add_option("--seed", grad.seed);
  grad_cmd->add_option("--parts", grad.parts);
  grad_cmd->add_option("--n-pc", grad.n_pc);
  grad_cmd->add_option("--dim", grad.dim);
  grad_cmd->add_option("--ctf", grad.ctf);

  trainer::ScalingConfig bench;
  auto* bench_cmd = app.add_subcommand("bench-scaling", "time workspace vs pairwise attention over N");
  bench_cmd->add_option("--n", bench.ns, "comma-separated assembler counts")->delimiter(',');
  bench_cmd->add_option("--dim", bench.dim);
  bench_cmd->add_option("--heads", bench.heads);
  bench_cmd->add_option("--slots", bench.slots);
  bench_cmd->add_option("--k", bench.k);
  bench_cmd->add_option("--reps", bench.repetitions);
  bench_cmd->add_option("--min-seconds", bench.min_measure_seconds);
  bench_cmd->add_option("--seed", bench.seed);

  GridFlags grid;
  auto* grid_cmd = app.add_subcommand("grid", "train and evaluate over a k or w_c/C grid");
  add_train_flags(grid_cmd, grid.train);
  grid_cmd->add_option("--sweep", grid.sweep, "k or wc-C")->required()->check(CLI::IsMember({"k", "wc-C"}));
  grid_cmd->add_option("--k-values", grid.k_values)->delimiter(',');
  grid_cmd->add_option("--wc-values", grid.wc_values)->delimiter(',');
  grid_cmd->add_option("--C-values", grid.c_values)->delimiter(',');
  grid_cmd->add_option("--split", grid.split, "split to score (falls back to all shapes)");

  const auto argv = to_argv(args);
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kValidationError;
  }

  try {
    if (app.got_subcommand("gen-data")) return gen_data(gen, out);
    if (app.got_subcommand("train")) return train_verb(train, resume, out);
    if (app.got_subcommand("eval")) return eval_verb(eval, out);
    if (app.got_subcommand("assemble")) return assemble_verb(assemble, out);
    if (app.got_subcommand("gradcheck")) return gradcheck_verb(grad, out);
    if (app.got_subcommand("bench-scaling")) return bench_verb(bench, out);
    if (app.got_subcommand("grid")) return grid_verb(grid, out);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kValidationError;
}

}  // namespace ccs::cli

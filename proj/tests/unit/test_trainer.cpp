#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccs/dataset/generator.hpp"
#include "ccs/errors.hpp"
#include "ccs/trainer/benchmark.hpp"
#include "ccs/trainer/schedule.hpp"
#include "ccs/trainer/trainer.hpp"
#include "doctest.h"
#include "support/model_fixtures.hpp"

using namespace ccs::trainer;
namespace fs = std::filesystem;

namespace {

ccs::dataset::Dataset tiny_dataset(std::size_t count = 4) {
  ccs::dataset::GenConfig g;
  g.n_pc = ccs::testing::tiny_config().n_pc;
  g.max_parts = 3;
  g.count = count;
  g.seed = 5;
  return {g.n_pc, ccs::dataset::generate_dataset(g, 1), {}};
}

TrainConfig tiny_train() {
  TrainConfig c;
  c.batch_size = 2;
  c.mon_n = 3;
  c.epochs = 3;
  c.seed = 9;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ccs_test_trainer_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("lr schedule") {
  const double lr = 1e-3;
  CHECK(lr_at(0, 1000, lr, 0.05) == 0.0);
  CHECK(lr_at(25, 1000, lr, 0.05) == doctest::Approx(5e-4).epsilon(1e-15));
  CHECK(lr_at(50, 1000, lr, 0.05) == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(lr_at(1000, 1000, lr, 0.05) == doctest::Approx(1e-5).epsilon(1e-15));
  CHECK(lr_at(525, 1000, lr, 0.05) == doctest::Approx((1e-3 + 1e-5) / 2).epsilon(1e-12));
  double previous = lr;
  for (std::uint64_t s = 50; s <= 1000; s += 10) {
    const double v = lr_at(s, 1000, lr, 0.05);
    CHECK(v <= previous);
    previous = v;
  }
  CHECK(lr_at(0, 10, lr, 0.0) == doctest::Approx(lr));
  CHECK_THROWS_AS(lr_at(0, 10, lr, 1.0), ccs::ParameterError);
}

TEST_CASE("run config json") {
  RunConfig c;
  c.model = ccs::testing::tiny_config();
  c.train = tiny_train();
  c.train.lr = 3e-3;
  CHECK(to_json(run_config_from_json(to_json(c))) == to_json(c));
  CHECK_THROWS_AS(run_config_from_json({{"train", {{"learning_rate", 1}}}}), ccs::ParseError);
  CHECK_THROWS_AS(run_config_from_json({{"optim", {}}}), ccs::ParseError);
  TrainConfig bad;
  bad.mon_n = 0;
  CHECK_THROWS_AS(bad.validate(), ccs::ParameterError);
  bad = TrainConfig{};
  bad.warmup_ratio = 1.0;
  CHECK_THROWS_AS(bad.validate(), ccs::ParameterError);
}

TEST_CASE("total steps") {
  TrainConfig c;
  c.batch_size = 16;
  c.epochs = 2;
  CHECK(total_steps(c, 33) == 6);
  c.max_steps = 7;
  CHECK(total_steps(c, 33) == 7);
}

TEST_CASE("training is deterministic and resumable") {
  const auto data = tiny_dataset();
  const auto run = [&](const fs::path& dir, TrainOptions options = {}) {
    ccs::model::AssemblyModel m(ccs::testing::tiny_config(), init_seed_for(tiny_train().seed));
    options.out_dir = dir;
    return train(data, m, tiny_train(), options);
  };
  const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
  const auto ra = run(a);
  run(b);
  CHECK(ra.steps_done == 6);
  CHECK(ra.history.size() == 6);
  CHECK(slurp(a / "last.ckpt") == slurp(b / "last.ckpt"));
  CHECK(slurp(a / "loss_log.csv") == slurp(b / "loss_log.csv"));
  CHECK(slurp(a / "mon_log.csv") == slurp(b / "mon_log.csv"));

  TrainOptions first;
  first.stop_after = 4;
  run(c, first);
  CHECK(slurp(c / "last.ckpt") != slurp(a / "last.ckpt"));
  TrainOptions rest;
  rest.resume = c / "last.ckpt";
  run(c, rest);
  CHECK(slurp(c / "last.ckpt") == slurp(a / "last.ckpt"));
  CHECK(slurp(c / "loss_log.csv") == slurp(a / "loss_log.csv"));
  CHECK(slurp(c / "mon_log.csv") == slurp(a / "mon_log.csv"));

  const auto loaded = load_model(a / "last.ckpt");
  CHECK(loaded.step == 6);
  CHECK(to_json(loaded.config.train) == to_json(tiny_train()));
  for (fs::path d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("reported MoN loss is the minimum of the sample losses") {
  const auto data = tiny_dataset();
  ccs::model::AssemblyModel m(ccs::testing::tiny_config(), 3);
  const auto r = train(data, m, tiny_train());
  REQUIRE(r.mon.size() == 12);
  for (const auto& entry : r.mon) {
    REQUIRE(entry.totals.size() == 3);
    double lowest = entry.totals[0];
    for (double t : entry.totals) lowest = std::min(lowest, t);
    CHECK(entry.reported == lowest);
    CHECK(entry.totals[entry.best_index] == lowest);
  }
}

TEST_CASE("validation keeps the best checkpoint") {
  auto data = tiny_dataset(6);
  std::vector<std::string> ids;
  for (const auto& s : data.shapes) ids.push_back(s.shape_id);
  data.splits = {{"train", {ids[0], ids[1], ids[2], ids[3]}}, {"val", {ids[4], ids[5]}}, {"test", {}}};
  const auto dir = scratch("val");
  ccs::model::AssemblyModel m(ccs::testing::tiny_config(), 4);
  std::vector<double> seen;
  TrainOptions options;
  options.out_dir = dir;
  options.on_validation = [&](std::size_t, double scd) { seen.push_back(scd); };
  const auto r = train(data, m, tiny_train(), options);
  REQUIRE(seen.size() == 3);
  CHECK(*r.best_val_scd == *std::min_element(seen.begin(), seen.end()));
  CHECK(fs::exists(dir / "best.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("non-finite loss aborts with the step and breakdown") {
  const auto data = tiny_dataset();
  ccs::model::AssemblyModel m(ccs::testing::tiny_config(), 5);
  auto& weight = const_cast<ccs::nn::Tensor&>(m.parameters().find("predictor.1.bias")->tensor);
  weight.mutable_data()[4] = std::nan("");
  try {
    train(data, m, tiny_train());
    FAIL("expected NumericError");
  } catch (const ccs::NumericError& e) {
    const std::string what = e.what();
    CHECK(what.find("step 0") != std::string::npos);
    CHECK(what.find("shape=") != std::string::npos);
  }
  auto empty = data;
  empty.splits = {{"train", {}}};
  CHECK_THROWS_AS(train(empty, m, tiny_train()), ccs::ContractError);
}

TEST_CASE("evaluate") {
  const auto data = tiny_dataset();
  ccs::model::AssemblyModel m(ccs::testing::tiny_config(), 6);
  const auto report = evaluate(data.shapes, m, 3, 1);
  REQUIRE(report.shapes.size() == 4);
  double scd = 0, pa = 0;
  for (const auto& row : report.shapes) {
    CHECK(std::isfinite(row.scd));
    CHECK(std::isfinite(row.rmse_r));
    CHECK(row.sample < 3);
    scd += row.scd / 4;
    pa += row.pa / 4;
  }
  CHECK(report.aggregate.scd == doctest::Approx(scd).epsilon(1e-15));
  CHECK(report.aggregate.pa == doctest::Approx(pa).epsilon(1e-15));
  const auto again = evaluate(data.shapes, m, 3, 1);
  CHECK(again.aggregate.scd == report.aggregate.scd);
}

TEST_CASE("log-log slope fit") {
  const std::vector<double> x{16, 32, 64, 128};
  std::vector<double> quadratic, linear;
  for (double v : x) {
    quadratic.push_back(3 * v * v);
    linear.push_back(0.5 * v);
  }
  CHECK(fit_loglog_slope(x, quadratic) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit_loglog_slope(x, linear) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_loglog_slope(std::vector<double>{1}, std::vector<double>{1}), ccs::ContractError);

  ScalingConfig c;
  c.ns = {4, 8};
  c.repetitions = 1;
  c.min_measure_seconds = 0;
  const auto r = bench_scaling(c);
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].workspace_seconds > 0);
  std::ostringstream csv;
  r.write_csv(csv);
  CHECK(csv.str().find("# reference_slope") != std::string::npos);
}

TEST_CASE("coarse-to-fine stages train one after another") {
  const auto data = tiny_dataset();
  auto one = ccs::testing::tiny_config();
  auto two = one;
  two.ctf_stages = 2;
  ccs::model::AssemblyModel single(one, 12), staged(two, 12);
  const auto snapshot = [&](const char* prefix) {
    std::vector<double> values;
    for (const auto& p : staged.parameters().items())
      if (p.name.rfind(prefix, 0) == 0) values.insert(values.end(), p.tensor.data().begin(), p.tensor.data().end());
    return values;
  };
  const auto second_before = snapshot("ctf1.");
  auto config = tiny_train();

  TrainOptions first_stage;
  first_stage.stop_after = 6;
  const auto a = train(data, single, config);
  const auto b = train(data, staged, config, first_stage);
  REQUIRE(b.total_steps == 12);
  REQUIRE(a.history.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.history[i].total == b.history[i].total);
    CHECK(a.history[i].lr == b.history[i].lr);
  }
  CHECK(snapshot("ctf1.") == second_before);

  const auto dir = scratch("ctf");
  TrainOptions save;
  save.out_dir = dir;
  ccs::model::AssemblyModel again(two, 12);
  const auto full = train(data, again, config, save);
  CHECK(full.steps_done == 12);
  const auto loaded = load_model(dir / "last.ckpt");
  std::vector<double> first_after;
  for (const auto& p : loaded.model.parameters().items())
    if (p.name.rfind("ctf0.", 0) == 0) first_after.insert(first_after.end(), p.tensor.data().begin(), p.tensor.data().end());
  CHECK(first_after == snapshot("ctf0."));
  CHECK(loaded.model.parameters().find("ctf1.predictor.1.weight")->tensor.to_vector() !=
        staged.parameters().find("ctf1.predictor.1.weight")->tensor.to_vector());
  fs::remove_all(dir);
}

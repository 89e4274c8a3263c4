#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ccs/cli/cli.hpp"
#include "ccs/dataset/storage.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out, err;
};

Invocation call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ccs::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Run directories are created fresh by every verb; the newest one is the
// only entry not present in `seen`, which is then updated.
fs::path new_run(const fs::path& base, std::set<fs::path>& seen) {
  fs::path found;
  for (const auto& entry : fs::directory_iterator(base)) {
    if (seen.insert(entry.path()).second) found = entry.path();
  }
  return found;
}

struct Sandbox {
  fs::path root = fs::temp_directory_path() / "ccs_test_cli";
  Sandbox() {
    fs::remove_all(root);
    fs::create_directories(root);
    setenv("CCS_RUN_DIR", (root / "runs").c_str(), 1);
  }
  ~Sandbox() { fs::remove_all(root); }
};

}  // namespace

TEST_CASE("help and argument errors") {
  Sandbox box;
  CHECK(call({"--help"}).code == ccs::cli::kOk);
  CHECK(call({}).code == ccs::cli::kValidationError);
  CHECK(call({"gen-data", "--no-such-flag"}).code == ccs::cli::kValidationError);
  CHECK(call({"train"}).code == ccs::cli::kValidationError);
  CHECK(call({"grid", "--data", "x", "--sweep", "lr"}).code == ccs::cli::kValidationError);
  const auto bad = call({"gen-data", "--min-parts", "1"});
  CHECK(bad.code == ccs::cli::kValidationError);
  CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("run directories are unique") {
  Sandbox box;
  const auto a = ccs::cli::make_run_dir(box.root, 7);
  const auto b = ccs::cli::make_run_dir(box.root, 7);
  CHECK(a != b);
  CHECK(a.filename().string().find("-seed7") != std::string::npos);
}

TEST_CASE("gen-data, train, eval and assemble end to end") {
  Sandbox box;
  std::set<fs::path> seen;
  const auto data = (box.root / "data").string();
  auto r = call({"gen-data", "--count", "8", "--n-pc", "8", "--max-parts", "3", "--seed", "2", "--out", data});
  REQUIRE(r.code == ccs::cli::kOk);
  CHECK(r.out.find("resolved config") != std::string::npos);
  CHECK(ccs::dataset::load_dataset(data).shapes.size() == 8);
  new_run(box.root / "runs", seen);

  std::ofstream(box.root / "cfg.json") << R"({"model": {"slots": 4}, "train": {"mon_n": 2}})";
  r = call({"train", "--data", data, "--config", (box.root / "cfg.json").string(), "--dim", "8", "--max-steps", "3",
            "--batch-size", "2", "--seed", "4"});
  REQUIRE(r.code == ccs::cli::kOk);
  const auto run = new_run(box.root / "runs", seen);
  CHECK(run.filename().string().find("-seed4") != std::string::npos);
  REQUIRE(fs::exists(run / "last.ckpt"));
  std::ifstream saved(run / "config.json");
  const auto cfg = nlohmann::json::parse(saved);
  CHECK(cfg["config"]["model"]["slots"] == 4);
  CHECK(cfg["config"]["train"]["mon_n"] == 2);
  CHECK(cfg["config"]["model"]["d_a"] == 8);
  const auto ckpt = (run / "last.ckpt").string();

  r = call({"eval", "--checkpoint", ckpt, "--data", data, "--split", "all"});
  CHECK(r.code == ccs::cli::kOk);
  CHECK(fs::exists(new_run(box.root / "runs", seen) / "metrics.csv"));

  r = call({"assemble", "--checkpoint", ckpt, "--data", data, "--shape", "shape_00001", "--trace"});
  CHECK(r.code == ccs::cli::kOk);
  const auto out = new_run(box.root / "runs", seen);
  CHECK(fs::exists(out / "shape_00001_assembly.ply"));
  CHECK(fs::exists(out / "shape_00001_poses.txt"));
  CHECK(fs::exists(out / "shape_00001_attention.jsonl"));

  CHECK(call({"assemble", "--checkpoint", ckpt, "--data", data, "--shape", "missing"}).code ==
        ccs::cli::kValidationError);
  CHECK(call({"eval", "--checkpoint", (box.root / "none.ckpt").string(), "--data", data}).code != ccs::cli::kOk);

  std::ofstream(box.root / "bad.json") << R"({"train": {"learning_rate": 1}})";
  CHECK(call({"train", "--data", data, "--config", (box.root / "bad.json").string()}).code ==
        ccs::cli::kValidationError);
}

TEST_CASE("gradcheck and bench-scaling") {
  Sandbox box;
  std::set<fs::path> seen;
  CHECK(call({"gradcheck", "--parts", "2"}).code == ccs::cli::kOk);
  const auto r = call({"bench-scaling", "--n", "4,8", "--reps", "1", "--min-seconds", "0"});
  CHECK(r.code == ccs::cli::kOk);
  CHECK(fs::exists(new_run(box.root / "runs", seen) / "bench_scaling.csv"));
}

#include <cmath>
#include <numeric>
#include <sstream>

#include "ccs/errors.hpp"
#include "ccs/nn/gradcheck.hpp"
#include "ccs/nn/ops.hpp"
#include "ccs/workspace/self_attention.hpp"
#include "ccs/workspace/workspace.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support/finite_difference.hpp"

using namespace ccs::workspace;
using ccs::nn::Tensor;
using ccs::testing::random_tensor;

namespace {

struct Fixture {
  ccs::nn::ParameterSet params;
  ccs::nn::Rng rng{11};
  WorkspaceParams ws;
  WorkspaceState state;

  explicit Fixture(WorkspaceDims dims) {
    ws = make_workspace_params(params, "ws", dims, rng);
    state = make_initial_state(params, "ws", dims, rng);
  }
};

WorkspaceDims small_dims(std::size_t heads = 2) { return {4, 6, 8, 6, heads}; }

void fill(Tensor t, double v) {
  for (auto& x : t.mutable_data()) x = v;
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  std::vector<double> out(x.size());
  const auto d = x.data();
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) out[i * x.cols() + c] = d[perm[i] * x.cols() + c];
  return Tensor::from(x.shape(), out);
}

std::size_t nonzeros_in_row(const Tensor& w, std::size_t r) {
  std::size_t n = 0;
  for (std::size_t c = 0; c < w.cols(); ++c) n += w.at(r, c) != 0.0;
  return n;
}

}  // namespace

TEST_CASE("dims validation") {
  CHECK_NOTHROW(small_dims().validate());
  CHECK_THROWS_AS((WorkspaceDims{4, 6, 8, 6, 4}.validate()), ccs::ParameterError);
  CHECK_THROWS_AS((WorkspaceDims{0, 6, 8, 6, 1}.validate()), ccs::ParameterError);
}

TEST_CASE("write_step with a single message") {
  Fixture f(small_dims());
  AssemblerStates m{random_tensor({1, 8}, 3, -1, 1, false)};
  std::vector<Tensor> w;
  const auto next = write_step(f.state, m, f.ws, 10, &w);
  REQUIRE(w.size() == 2);
  for (const auto& attn : w)
    for (double v : attn.data()) CHECK(v == 1.0);
  const auto expected = ccs::nn::matmul(m.states, f.ws.write_value);
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t c = 0; c < 6; ++c) CHECK(next.slots.at(l, c) == expected.at(0, c));
  CHECK_THROWS_AS(write_step(f.state, m, f.ws, 0), ccs::ParameterError);
}

TEST_CASE("write_step keeps at most k writers per slot") {
  Fixture f(small_dims());
  AssemblerStates m{random_tensor({7, 8}, 4, -2, 2, false)};
  std::vector<Tensor> w;
  write_step(f.state, m, f.ws, 2, &w);
  for (const auto& attn : w) {
    CHECK(attn.shape() == ccs::nn::Shape{4, 7});
    for (std::size_t r = 0; r < attn.rows(); ++r) {
      CHECK(nonzeros_in_row(attn, r) <= 2);
      double s = 0;
      for (std::size_t c = 0; c < attn.cols(); ++c) s += attn.at(r, c);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("scalar write and read by hand") {
  Fixture f({1, 1, 1, 1, 1});
  for (auto t : {f.ws.write_query, f.ws.write_key, f.ws.write_value, f.ws.read_query, f.ws.read_key, f.ws.read_value})
    fill(t, 1.0);
  const double q = 0.4;
  fill(f.state.slots, q);
  AssemblerStates m{Tensor::from({2, 1}, {1.0, 3.0})};
  const auto next = write_step(f.state, m, f.ws, 2);
  const double expected = (std::exp(q * 1) * 1 + std::exp(q * 3) * 3) / (std::exp(q * 1) + std::exp(q * 3));
  CHECK(next.slots.item() == doctest::Approx(expected).epsilon(1e-15));

  SUBCASE("k=1 keeps only the larger logit") {
    CHECK(write_step(f.state, m, f.ws, 1).slots.item() == 3.0);
  }
  SUBCASE("two slots, one reader") {
    WorkspaceState two{Tensor::from({2, 1}, {0.5, -1.5})};
    const double a = 0.7;
    const auto out = read_step(two, {Tensor::from({1, 1}, {a})}, f.ws);
    const double e1 = std::exp(a * 0.5), e2 = std::exp(a * -1.5);
    CHECK(out.states.item() == doctest::Approx((e1 * 0.5 + e2 * -1.5) / (e1 + e2)).epsilon(1e-15));
  }
}

TEST_CASE("read_step") {
  SUBCASE("one slot is read by everyone") {
    Fixture f({1, 6, 8, 6, 2});
    AssemblerStates a{random_tensor({5, 8}, 5, -1, 1, false)};
    std::vector<Tensor> w;
    const auto out = read_step(f.state, a, f.ws, &w);
    for (const auto& attn : w)
      for (double v : attn.data()) CHECK(v == 1.0);
    for (std::size_t i = 1; i < 5; ++i)
      for (std::size_t c = 0; c < 8; ++c) CHECK(out.states.at(i, c) == out.states.at(0, c));
  }
  SUBCASE("identical slots make the attention irrelevant") {
    Fixture f(small_dims());
    const auto row = random_tensor({1, 6}, 6, -1, 1, false).to_vector();
    std::vector<double> slots;
    for (int l = 0; l < 4; ++l) slots.insert(slots.end(), row.begin(), row.end());
    WorkspaceState same{Tensor::from({4, 6}, slots)};
    const auto out = read_step(same, {random_tensor({3, 8}, 7, -3, 3, false)}, f.ws);
    const auto direct = ccs::nn::matmul(Tensor::from({1, 6}, row), f.ws.read_value);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < 8; ++c) CHECK(out.states.at(i, c) == doctest::Approx(direct.at(0, c)).epsilon(1e-13));
  }
}

TEST_CASE("ff_update") {
  Fixture f(small_dims());
  AssemblerStates a{random_tensor({3, 8}, 8, -1, 1, false)};
  SUBCASE("degenerate weights reduce to a double layer norm") {
    for (auto t : {f.ws.ff_in.weight, f.ws.ff_in.bias, f.ws.ff_out.weight, f.ws.ff_out.bias}) fill(t, 0.0);
    const auto out = ff_update(a, {Tensor::zeros({3, 8})}, f.ws);
    const auto ones = Tensor::full({8}, 1.0), zeros = Tensor::zeros({8});
    const auto expected = ccs::nn::layer_norm(ccs::nn::layer_norm(a.states, ones, zeros), ones, zeros);
    CHECK(out.states.shape() == a.states.shape());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(out.states.data()[i] == expected.data()[i]);
  }
  SUBCASE("gradients match finite differences") {
    auto x = random_tensor({3, 8}, 9, -1, 1);
    auto r = random_tensor({3, 8}, 10, -1, 1);
    std::vector<ccs::nn::Parameter> leaves{{"a", x}, {"read", r}};
    for (const auto& p : f.params.items()) leaves.push_back(p);
    const auto weights = random_tensor({3, 8}, 12, -1, 1, false);
    auto report = ccs::nn::grad_check([&] { return ccs::nn::sum(ccs::nn::mul(ff_update({x}, {r}, f.ws).states, weights)); },
                                      leaves);
    INFO(report.to_string());
    CHECK(report.passed());
  }
  CHECK_THROWS_AS(ff_update(a, {Tensor::zeros({2, 8})}, f.ws), ccs::ShapeError);
}

TEST_CASE("workspace_block gradients") {
  Fixture f(small_dims());
  auto a = random_tensor({5, 8}, 13, -1, 1);
  const auto weights = random_tensor({5, 8}, 14, -1, 1, false);
  const auto slot_weights = random_tensor({4, 6}, 15, -1, 1, false);
  std::vector<ccs::nn::Parameter> leaves{{"assemblers", a}};
  for (const auto& p : f.params.items()) leaves.push_back(p);
  auto report = ccs::nn::grad_check(
      [&] {
        const auto out = workspace_block({a}, f.state, f.ws, 3);
        return ccs::nn::add(ccs::nn::sum(ccs::nn::mul(out.assemblers.states, weights)),
                            ccs::nn::sum(ccs::nn::mul(out.state.slots, slot_weights)));
      },
      leaves);
  INFO(report.to_string());
  CHECK(report.passed());
  CHECK(report.max_relative_error() <= 1e-4);
}

TEST_CASE("workspace_block is permutation equivariant") {
  Fixture f(small_dims());
  const auto a = random_tensor({6, 8}, 16, -2, 2, false);
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  const auto base = workspace_block({a}, f.state, f.ws, 2);
  const auto moved = workspace_block({permute_rows(a, perm)}, f.state, f.ws, 2);
  const auto expected = permute_rows(base.assemblers.states, perm);
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(std::abs(moved.assemblers.states.data()[i] - expected.data()[i]) <= 1e-12);
  for (std::size_t i = 0; i < base.state.slots.size(); ++i)
    CHECK(std::abs(moved.state.slots.data()[i] - base.state.slots.data()[i]) <= 1e-12);
}

TEST_CASE("single-head block is the composition of its steps") {
  Fixture f(small_dims(1));
  const AssemblerStates a{random_tensor({4, 8}, 17, -1, 1, false)};
  const auto block = workspace_block(a, f.state, f.ws, 2);
  const auto written = write_step(f.state, a, f.ws, 2);
  const auto updated = ff_update(a, read_step(written, a, f.ws), f.ws);
  CHECK(block.state.slots.to_vector() == written.slots.to_vector());
  CHECK(block.assemblers.states.to_vector() == updated.states.to_vector());
}

TEST_CASE("an unselected assembler cannot change the written state") {
  Fixture f(small_dims());
  ccs::nn::Rng pick(99);
  int verified = 0;
  for (int trial = 0; trial < 50 && verified < 10; ++trial) {
    auto a = random_tensor({8, 8}, 100 + trial, -1, 1, false);
    std::vector<Tensor> w;
    const auto base = write_step(f.state, {a}, f.ws, 2, &w);
    std::vector<bool> selected(8, false);
    for (const auto& attn : w)
      for (std::size_t r = 0; r < attn.rows(); ++r)
        for (std::size_t c = 0; c < attn.cols(); ++c) selected[c] = selected[c] || attn.at(r, c) != 0.0;
    for (std::size_t victim = 0; victim < 8; ++victim) {
      if (selected[victim]) continue;
      auto perturbed = a.to_vector();
      for (std::size_t c = 0; c < 8; ++c) perturbed[victim * 8 + c] *= 0.5 + pick.uniform();
      std::vector<Tensor> w2;
      const auto next = write_step(f.state, {Tensor::from({8, 8}, perturbed)}, f.ws, 2, &w2);
      bool still_out = true;
      for (const auto& attn : w2)
        for (std::size_t r = 0; r < attn.rows(); ++r) still_out = still_out && attn.at(r, victim) == 0.0;
      if (!still_out) continue;
      CHECK(next.slots.to_vector() == base.slots.to_vector());
      ++verified;
    }
  }
  CHECK(verified >= 10);
}

TEST_CASE("attention trace") {
  Fixture f(small_dims());
  AttentionTrace trace;
  workspace_block({random_tensor({3, 8}, 18, -1, 1, false)}, f.state, f.ws, 2, &trace, 5);
  REQUIRE(trace.records().size() == 4);
  CHECK(trace.records()[0].op == "write");
  CHECK(trace.records()[0].rows == 4);
  CHECK(trace.records()[0].cols == 3);
  CHECK(trace.records()[3].op == "read");
  std::ostringstream os;
  trace.write_jsonl(os);
  std::istringstream in(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["stage"] == 5);
    CHECK(j["weights"].size() == j["rows"].get<std::size_t>());
    ++lines;
  }
  CHECK(lines == 4);
}

TEST_CASE("reference self-attention block") {
  ccs::nn::ParameterSet params;
  ccs::nn::Rng rng(19);
  const auto sa = make_self_attention_params(params, "ref", 8, 2, rng);
  auto a = random_tensor({5, 8}, 20, -1, 1);
  const auto out = reference_self_attention_block({a}, sa);
  CHECK(out.states.shape() == a.shape());
  const std::vector<std::size_t> perm{4, 2, 0, 1, 3};
  const auto moved = reference_self_attention_block({permute_rows(a, perm)}, sa);
  const auto expected = permute_rows(out.states, perm);
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(std::abs(moved.states.data()[i] - expected.data()[i]) <= 1e-12);
  const auto weights = random_tensor({5, 8}, 21, -1, 1, false);
  std::vector<ccs::nn::Parameter> leaves{{"a", a}};
  for (const auto& p : params.items()) leaves.push_back(p);
  auto report = ccs::nn::grad_check(
      [&] { return ccs::nn::sum(ccs::nn::mul(reference_self_attention_block({a}, sa).states, weights)); }, leaves);
  INFO(report.to_string());
  CHECK(report.passed());
}

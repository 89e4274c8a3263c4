#include <cmath>
#include <functional>

#include "ccs/errors.hpp"
#include "ccs/nn/gradcheck.hpp"
#include "ccs/nn/ops.hpp"
#include "doctest.h"
#include "support/finite_difference.hpp"

using namespace ccs::nn;
using ccs::testing::max_relative_error;
using ccs::testing::numeric_gradient;
using ccs::testing::random_tensor;

namespace {

// d/dx sum(w ⊙ f(x)) with fixed random weights, so every output entry matters.
double fd_check(const std::function<Tensor(const Tensor&)>& op, Tensor x, double h = 1e-6) {
  Tensor probe;
  {
    NoGradGuard g;
    probe = op(x);
  }
  const auto weights = random_tensor(probe.shape(), 99, -1, 1, false);
  auto loss = [&] { return sum(mul(op(x), weights)); };
  x.zero_grad();
  loss().backward();
  auto numeric = numeric_gradient([&] { NoGradGuard g; return loss().item(); }, x, h);
  return max_relative_error(x.grad(), numeric);
}

}  // namespace

TEST_CASE("tensor construction validates shape against data") {
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ccs::ShapeError);
  auto t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 6);
  CHECK(Tensor::scalar(3.5).item() == 3.5);
}

TEST_CASE("matmul") {
  SUBCASE("identity") {
    auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    auto m = Tensor::from({2, 2}, {1, 2, 3, 4});
    CHECK(matmul(eye, m).to_vector() == std::vector<double>{1, 2, 3, 4});
  }
  SUBCASE("projection") {
    auto p = Tensor::from({2, 2}, {1, 0, 0, 0});
    auto v = Tensor::from({2, 1}, {5, 7});
    CHECK(matmul(p, v).to_vector() == std::vector<double>{5, 0});
  }
  SUBCASE("shape mismatch names both shapes") {
    auto a = Tensor::zeros({2, 3});
    auto b = Tensor::zeros({2, 3});
    try {
      matmul(a, b);
      FAIL("expected ShapeError");
    } catch (const ccs::ShapeError& e) {
      CHECK(std::string(e.what()).find("[2x3] x [2x3]") != std::string::npos);
    }
  }
  SUBCASE("gradient of sum matches central differences") {
    auto a = random_tensor({3, 4}, 1);
    auto b = random_tensor({4, 2}, 2);
    sum(matmul(a, b)).backward();
    auto fa = numeric_gradient([&] { return sum(matmul(a, b)).item(); }, a);
    auto fb = numeric_gradient([&] { return sum(matmul(a, b)).item(); }, b);
    CHECK(max_relative_error(a.grad(), fa) <= 1e-6);
    CHECK(max_relative_error(b.grad(), fb) <= 1e-6);
  }
}

TEST_CASE("softmax") {
  CHECK(softmax(Tensor::from({2}, {0, 0}), 0).to_vector() == std::vector<double>{0.5, 0.5});

  auto big = softmax(Tensor::from({2}, {1000, 0}), 0);
  CHECK(big.at(0) == 1.0);
  CHECK(big.at(1) >= 0.0);
  CHECK(big.at(1) < 1e-300);

  auto logs = softmax(Tensor::from({3}, {std::log(1.0), std::log(2.0), std::log(3.0)}), 0);
  CHECK(logs.at(0) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(logs.at(1) == doctest::Approx(2.0 / 6).epsilon(1e-14));
  CHECK(logs.at(2) == doctest::Approx(3.0 / 6).epsilon(1e-14));

  CHECK_THROWS_AS(softmax(Tensor::from({2}, {NAN, 0}), 0), ccs::NumericError);

  SUBCASE("axis 0 of a matrix normalizes columns") {
    auto s = softmax(random_tensor({3, 4}, 3, -2, 2, false), 0);
    for (std::size_t c = 0; c < 4; ++c) {
      double total = 0;
      for (std::size_t r = 0; r < 3; ++r) total += s.at(r, c);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("gradients along both axes") {
    CHECK(fd_check([](const Tensor& x) { return softmax(x, 1); }, random_tensor({3, 5}, 4, -2, 2)) <= 1e-6);
    CHECK(fd_check([](const Tensor& x) { return softmax(x, 0); }, random_tensor({3, 5}, 5, -2, 2)) <= 1e-6);
  }
}

TEST_CASE("top_k_softmax") {
  CHECK(top_k_softmax(Tensor::from({3}, {1, 2, 3}), 1, 0).to_vector() == std::vector<double>{0, 0, 1});

  auto degenerate = top_k_softmax(Tensor::from({3}, {0, 0, 0}), 5, 0);
  for (double v : degenerate.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  // Survivors {ln 3, ln 6}: weights 3/9 and 6/9.
  auto pair = top_k_softmax(Tensor::from({4}, {0, std::log(3.0), std::log(1.0), std::log(6.0)}), 2, 0);
  CHECK(pair.at(0) == 0.0);
  CHECK(pair.at(1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(pair.at(2) == 0.0);
  CHECK(pair.at(3) == doctest::Approx(2.0 / 3).epsilon(1e-14));

  CHECK_THROWS_AS(top_k_softmax(Tensor::from({2}, {0, 1}), 0, 0), ccs::ParameterError);

  SUBCASE("ties keep the lowest indices") {
    auto t = top_k_softmax(Tensor::from({4}, {1, 1, 1, 1}), 2, 0);
    CHECK(t.to_vector() == std::vector<double>{0.5, 0.5, 0, 0});
  }
  SUBCASE("k >= n equals softmax exactly") {
    auto x = random_tensor({4, 6}, 6, -3, 3, false);
    CHECK(top_k_softmax(x, 6, 1).to_vector() == softmax(x, 1).to_vector());
    CHECK(top_k_softmax(x, 60, 1).to_vector() == softmax(x, 1).to_vector());
  }
  SUBCASE("masked positions get zero gradient") {
    auto x = random_tensor({2, 5}, 7, -2, 2);
    auto w = random_tensor({2, 5}, 8, -1, 1, false);
    auto y = top_k_softmax(x, 2, 1);
    sum(mul(y, w)).backward();
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y.data()[i] == 0.0) CHECK(x.grad()[i] == 0.0);
    }
    CHECK(fd_check([](const Tensor& v) { return top_k_softmax(v, 2, 1); }, random_tensor({2, 5}, 9, -2, 2)) <= 1e-6);
  }
}

TEST_CASE("softmax family properties on random inputs") {
  for (unsigned seed = 0; seed < 50; ++seed) {
    const std::size_t k = 1 + seed % 6;
    auto x = random_tensor({5, 7}, 100 + seed, -5, 5, false);
    auto plain = softmax(x, 1);
    auto sparse = top_k_softmax(x, k, 1);
    for (std::size_t r = 0; r < 5; ++r) {
      double a = 0, b = 0;
      std::size_t positive = 0;
      for (std::size_t c = 0; c < 7; ++c) {
        CHECK(plain.at(r, c) >= 0.0);
        CHECK(sparse.at(r, c) >= 0.0);
        a += plain.at(r, c);
        b += sparse.at(r, c);
        positive += sparse.at(r, c) > 0.0;
      }
      CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(b == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(positive <= k);
    }
  }
}

TEST_CASE("pointwise primitives") {
  CHECK(relu(Tensor::from({2}, {-1, 2})).to_vector() == std::vector<double>{0, 2});
  CHECK(max_pool_points(Tensor::from({2, 2}, {1, 5, 3, 2})).to_vector() == std::vector<double>{3, 5});
  CHECK_THROWS_AS(log(Tensor::from({1}, {0.0})), ccs::NumericError);

  auto gain = Tensor::full({4}, 1.0);
  auto bias = Tensor::zeros({4});
  auto flat = layer_norm(Tensor::full({1, 4}, 7.0), gain, bias);
  for (double v : flat.data()) CHECK(v == 0.0);
  CHECK_THROWS_AS(layer_norm(Tensor::zeros({2, 3}), gain, bias), ccs::ShapeError);
}

TEST_CASE("max pooling routes gradient to the first maximal row") {
  auto x = Tensor::from({3, 2}, {4, 1, 4, 9, 0, 9}, true);
  sum(max_pool_points(x)).backward();
  CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{1, 0, 0, 1, 0, 0});
  auto seg = segment_max_rows(Tensor::from({4, 1}, {1, 3, 7, 2}), 2);
  CHECK(seg.to_vector() == std::vector<double>{3, 7});
  CHECK_THROWS_AS(segment_max_rows(Tensor::zeros({3, 1}), 2), ccs::ShapeError);
}

TEST_CASE("backward") {
  SUBCASE("sum of leaf gives ones") {
    auto w = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
    sum(w).backward();
    CHECK(std::vector<double>(w.grad().begin(), w.grad().end()) == std::vector<double>{1, 1, 1, 1});
  }
  SUBCASE("sum of squares gives 2w") {
    auto w = Tensor::from({2, 2}, {1, -2, 3, 0.5}, true);
    sum(mul(w, w)).backward();
    CHECK(std::vector<double>(w.grad().begin(), w.grad().end()) == std::vector<double>{2, -4, 6, 1});
  }
  SUBCASE("repeated calls accumulate on leaves") {
    auto w = Tensor::from({2}, {1, 2}, true);
    auto root = sum(scale(w, 3.0));
    root.backward();
    root.backward();
    CHECK(w.grad()[0] == 6.0);
    w.zero_grad();
    root.backward();
    CHECK(w.grad()[0] == 3.0);
  }
  SUBCASE("non-scalar root is rejected") {
    auto w = Tensor::from({2}, {1, 2}, true);
    CHECK_THROWS_AS(scale(w, 2).backward(), ccs::ContractError);
  }
  SUBCASE("no graph under NoGradGuard") {
    auto w = Tensor::from({2}, {1, 2}, true);
    NoGradGuard guard;
    CHECK_FALSE(scale(w, 2).requires_grad());
  }
}

TEST_CASE("every differentiable op matches finite differences") {
  const double tol = 1e-6;
  auto gain = random_tensor({5}, 11, 0.5, 1.5);
  auto beta = random_tensor({5}, 12);
  CHECK(fd_check([](const Tensor& x) { return transpose(x); }, random_tensor({3, 2}, 1)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return relu(x); }, random_tensor({4, 3}, 2)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return exp(x); }, random_tensor({4, 3}, 3)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return log(x); }, random_tensor({4, 3}, 4, 0.5, 2)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return sqrt(x); }, random_tensor({4, 3}, 5, 0.5, 2)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return square(x); }, random_tensor({4, 3}, 6)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return clamp_min(x, 0.1); }, random_tensor({4, 3}, 7)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return mean_rows(x); }, random_tensor({4, 3}, 8)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return norm(x, 1e-6); }, random_tensor({4, 3}, 9)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return normalize_rows(x); }, random_tensor({4, 4}, 10)) <= tol);
  CHECK(fd_check([&](const Tensor& x) { return layer_norm(x, gain, beta); }, random_tensor({3, 5}, 13)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return segment_max_rows(x, 3); }, random_tensor({6, 4}, 14)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return slice_rows(x, 1, 3); }, random_tensor({4, 3}, 15)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return slice_cols(x, 1, 3); }, random_tensor({4, 3}, 16)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return quat_to_matrix(x); }, random_tensor({1, 4}, 17)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return quat_mul_rows(x, slice_rows(concat_rows({x, x}), 1, 3)); },
                 random_tensor({2, 4}, 18)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return concat_cols(x, scale(x, 2.0)); }, random_tensor({3, 2}, 19)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return add_bias(x, slice_rows(x, 0, 1)); }, random_tensor({3, 2}, 20)) <= tol);
  CHECK(fd_check([](const Tensor& x) { return sub(mul(x, x), add_scalar(x, 0.3)); }, random_tensor({3, 2}, 21)) <= tol);
}

TEST_CASE("layer_norm gain and bias gradients") {
  auto x = random_tensor({3, 5}, 30, -2, 2, false);
  auto gain = random_tensor({5}, 31, 0.5, 1.5);
  auto bias = random_tensor({5}, 32);
  auto w = random_tensor({3, 5}, 33, -1, 1, false);
  auto report = grad_check([&] { return sum(mul(layer_norm(x, gain, bias), w)); },
                           {{"gain", gain}, {"bias", bias}});
  CHECK(report.passed());
}

TEST_CASE("grad_check") {
  SUBCASE("linear layer alone is within 1e-7") {
    auto x = random_tensor({4, 3}, 40, -1, 1, false);
    auto weight = random_tensor({3, 2}, 41);
    auto bias = random_tensor({2}, 42);
    auto report = grad_check([&] { return sum(square(linear(x, weight, bias))); },
                             {{"weight", weight}, {"bias", bias}}, {.tolerance = 1e-7});
    CHECK(report.passed());
    CHECK(report.max_relative_error() <= 1e-7);
  }
  SUBCASE("corrupted backward rule is reported") {
    auto w = random_tensor({3}, 43);
    auto broken_square = [](const Tensor& x) {
      std::vector<double> v;
      for (double e : x.data()) v.push_back(e * e);
      return detail::make_result(x.shape(), v, {x}, [](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * 3.0 * self.inputs[0]->value[i];
      });
    };
    auto report = grad_check([&] { return sum(broken_square(w)); }, {{"w", w}});
    CHECK_FALSE(report.passed());
    REQUIRE(report.failures().size() == 1);
    CHECK(report.failures()[0] == "w");
  }
}

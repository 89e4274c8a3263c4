#include "ccs/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ccs/errors.hpp"

namespace ccs::nn {

using detail::make_result;

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + " expects a matrix, got " + shape_to_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + " differ");
  }
}

// C[m×n] += A[m×k]·B[k×n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m×k] += G[m×n]·B[k×n]ᵀ
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      c[i * k + p] += acc;
    }
  }
}

// C[k×n] += A[m×k]ᵀ·G[m×n]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
    }
  }
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& x, Forward f, Derivative df) {
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(x.shape(), std::move(out), {x}, [df](Node& self) {
    Node& src = *self.inputs[0];
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(src.value[i], self.value[i]);
  });
}

struct AxisLayout {
  std::size_t outer, n, inner;
};

AxisLayout axis_layout(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_to_string(x.shape()));
  }
  AxisLayout l{1, x.shape()[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) l.outer *= x.shape()[i];
  for (std::size_t i = axis + 1; i < x.rank(); ++i) l.inner *= x.shape()[i];
  return l;
}

void check_finite(const Tensor& x, const char* what) {
  for (double v : x.data()) {
    if (std::isnan(v)) throw NumericError(std::string(what) + ": NaN input");
  }
}

// Softmax restricted to `keep` (all positions when keep == n). Masked
// positions receive exact zeros.
Tensor masked_softmax(const Tensor& x, std::size_t keep, std::size_t axis, const char* what) {
  check_finite(x, what);
  const auto lay = axis_layout(x, axis);
  const auto in = x.data();
  std::vector<double> out(x.size(), 0.0);
  std::vector<std::size_t> order(lay.n);
  for (std::size_t o = 0; o < lay.outer; ++o) {
    for (std::size_t r = 0; r < lay.inner; ++r) {
      const std::size_t base = o * lay.n * lay.inner + r;
      auto at = [&](std::size_t j) { return base + j * lay.inner; };
      std::iota(order.begin(), order.end(), 0);
      const std::size_t survivors = std::min(keep, lay.n);
      if (survivors < lay.n) {
        // Largest first, lowest index first among equals.
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(survivors), order.end(),
                          [&](std::size_t a, std::size_t b) {
                            const double va = in[at(a)], vb = in[at(b)];
                            return va > vb || (va == vb && a < b);
                          });
      }
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < survivors; ++s) peak = std::max(peak, in[at(order[s])]);
      double total = 0.0;
      for (std::size_t s = 0; s < survivors; ++s) {
        const double e = std::exp(in[at(order[s])] - peak);
        out[at(order[s])] = e;
        total += e;
      }
      for (std::size_t s = 0; s < survivors; ++s) out[at(order[s])] /= total;
    }
  }
  return make_result(x.shape(), std::move(out), {x}, [lay](Node& self) {
    Node& src = *self.inputs[0];
    auto& g = src.grad_buffer();
    for (std::size_t o = 0; o < lay.outer; ++o) {
      for (std::size_t r = 0; r < lay.inner; ++r) {
        const std::size_t base = o * lay.n * lay.inner + r;
        double dot = 0.0;
        for (std::size_t j = 0; j < lay.n; ++j) {
          const auto idx = base + j * lay.inner;
          dot += self.value[idx] * self.grad[idx];
        }
        for (std::size_t j = 0; j < lay.n; ++j) {
          const auto idx = base + j * lay.inner;
          g[idx] += self.value[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    if (na.requires_grad) gemm_nt(self.grad.data(), nb.value.data(), na.grad_buffer().data(), m, n, k);
    if (nb.requires_grad) gemm_tn(na.value.data(), self.grad.data(), nb.grad_buffer().data(), m, k, n);
  });
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto in = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
  return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto& g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (self.inputs[0]->requires_grad) {
      auto& g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.inputs[1]->requires_grad) {
      auto& g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    if (na.requires_grad) {
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb.value[i];
    }
    if (nb.requires_grad) {
      auto& g = nb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * na.value[i];
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_matrix(x, "add_bias");
  const std::size_t m = x.rows(), n = x.cols();
  if (bias.size() != n || bias.rank() > 2 || (bias.rank() == 2 && bias.rows() != 1)) {
    throw ShapeError("add_bias: bias " + shape_to_string(bias.shape()) + " does not fit " +
                     shape_to_string(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto b = bias.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  return make_result(x.shape(), std::move(out), {x, bias}, [m, n](Node& self) {
    if (self.inputs[0]->requires_grad) {
      auto& g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.inputs[1]->requires_grad) {
      auto& g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double offset) {
  return unary(x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
  }
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v >= 0.0)) throw NumericError("sqrt: negative input " + std::to_string(v));
  }
  return unary(x, [](double v) { return std::sqrt(v); },
               [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor square(const Tensor& x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor clamp_min(const Tensor& x, double floor) {
  return unary(x, [floor](double v) { return v > floor ? v : floor; },
               [floor](double v, double) { return v > floor ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_result({}, {total}, {x}, [](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor mean_rows(const Tensor& x) {
  require_matrix(x, "mean_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (m == 0) throw ShapeError("mean_rows of a matrix with no rows");
  std::vector<double> out(n, 0.0);
  const auto in = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += in[i * n + j];
  for (auto& v : out) v /= static_cast<double>(m);
  return make_result({n}, std::move(out), {x}, [m, n](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const double w = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j] * w;
  });
}

Tensor norm(const Tensor& x, double floor) {
  double sq = 0.0;
  for (double v : x.data()) sq += v * v;
  const double length = std::sqrt(sq);
  const bool active = length > floor;
  return make_result({}, {active ? length : floor}, {x}, [active, length](Node& self) {
    if (!active) return;
    Node& src = *self.inputs[0];
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * src.value[i] / length;
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const auto n = axis_layout(x, axis).n;
  return masked_softmax(x, n, axis, "softmax");
}

Tensor top_k_softmax(const Tensor& x, std::size_t k, std::size_t axis) {
  if (k == 0) throw ParameterError("top_k_softmax: k must be at least 1");
  return masked_softmax(x, k, axis, "top_k_softmax");
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double epsilon) {
  if (x.rank() == 0) throw ShapeError("layer_norm of a scalar");
  const std::size_t d = x.shape().back();
  if (gain.size() != d || bias.size() != d) {
    throw ShapeError("layer_norm: gain " + shape_to_string(gain.shape()) + " / bias " +
                     shape_to_string(bias.shape()) + " do not match feature size " + std::to_string(d));
  }
  const std::size_t rows = x.size() / d;
  const auto in = x.data();
  const auto gv = gain.data();
  const auto bv = bias.data();
  std::vector<double> out(x.size());
  std::vector<double> normalized(x.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + epsilon);
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (row[j] - mu) * inv_std[r];
      normalized[r * d + j] = xhat;
      out[r * d + j] = xhat * gv[j] + bv[j];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gain, bias},
                     [d, rows, normalized = std::move(normalized), inv_std = std::move(inv_std)](Node& self) {
                       Node& nx = *self.inputs[0];
                       Node& ng = *self.inputs[1];
                       Node& nb = *self.inputs[2];
                       if (ng.requires_grad) {
                         auto& g = ng.grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[r * d + j] * normalized[r * d + j];
                       }
                       if (nb.requires_grad) {
                         auto& g = nb.grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[r * d + j];
                       }
                       if (!nx.requires_grad) return;
                       auto& g = nx.grad_buffer();
                       std::vector<double> dxhat(d);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double mean_d = 0.0, mean_dx = 0.0;
                         for (std::size_t j = 0; j < d; ++j) {
                           dxhat[j] = self.grad[r * d + j] * ng.value[j];
                           mean_d += dxhat[j];
                           mean_dx += dxhat[j] * normalized[r * d + j];
                         }
                         mean_d /= static_cast<double>(d);
                         mean_dx /= static_cast<double>(d);
                         for (std::size_t j = 0; j < d; ++j) {
                           g[r * d + j] += inv_std[r] * (dxhat[j] - mean_d - normalized[r * d + j] * mean_dx);
                         }
                       }
                     });
}

Tensor segment_max_rows(const Tensor& x, std::size_t segment_rows) {
  require_matrix(x, "segment_max_rows");
  const std::size_t m = x.rows(), d = x.cols();
  if (segment_rows == 0 || m % segment_rows != 0) {
    throw ShapeError("segment_max_rows: " + std::to_string(m) + " rows do not split into segments of " +
                     std::to_string(segment_rows));
  }
  const std::size_t segments = m / segment_rows;
  const auto in = x.data();
  std::vector<double> out(segments * d);
  std::vector<std::size_t> argmax(segments * d);
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t j = 0; j < d; ++j) {
      std::size_t best = s * segment_rows;
      for (std::size_t r = best + 1; r < (s + 1) * segment_rows; ++r) {
        if (in[r * d + j] > in[best * d + j]) best = r;
      }
      argmax[s * d + j] = best;
      out[s * d + j] = in[best * d + j];
    }
  }
  return make_result({segments, d}, std::move(out), {x}, [d, argmax = std::move(argmax)](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t idx = 0; idx < argmax.size(); ++idx) g[argmax[idx] * d + idx % d] += self.grad[idx];
  });
}

Tensor max_pool_points(const Tensor& x) {
  require_matrix(x, "max_pool_points");
  if (x.rows() == 0) throw ShapeError("max_pool_points of an empty point set");
  return reshape(segment_max_rows(x, x.rows()), {x.cols()});
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeError("reshape " + shape_to_string(x.shape()) + " to " + shape_to_string(shape));
  }
  return make_result(std::move(shape), x.to_vector(), {x}, [](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_matrix(a, "concat_cols");
  require_matrix(b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row counts differ for " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  const std::size_t m = a.rows(), na = a.cols(), nb = b.cols(), n = na + nb;
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(i * na), na, out.begin() + static_cast<std::ptrdiff_t>(i * n));
    std::copy_n(b.data().begin() + static_cast<std::ptrdiff_t>(i * nb), nb,
                out.begin() + static_cast<std::ptrdiff_t>(i * n + na));
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, na, nb, n](Node& self) {
    if (self.inputs[0]->requires_grad) {
      auto& g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < na; ++j) g[i * na + j] += self.grad[i * n + j];
    }
    if (self.inputs[1]->requires_grad) {
      auto& g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nb; ++j) g[i * nb + j] += self.grad[i * n + na + j];
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    if (p.cols() != n) throw ShapeError("concat_rows: column counts differ (" + shape_to_string(p.shape()) + ")");
    m += p.rows();
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make_result({m, n}, std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (auto& in : self.inputs) {
      if (in->requires_grad) {
        auto& g = in->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offset + i];
      }
      offset += in->value.size();
    }
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_rows");
  if (begin > end || end > x.rows()) {
    throw ShapeError("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                     shape_to_string(x.shape()));
  }
  const std::size_t n = x.cols();
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                          x.data().begin() + static_cast<std::ptrdiff_t>(end * n));
  return make_result({end - begin, n}, std::move(out), {x}, [offset = begin * n](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_cols");
  if (begin > end || end > x.cols()) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                     shape_to_string(x.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols(), w = end - begin;
  std::vector<double> out(m * w);
  const auto in = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = in[i * n + begin + j];
  return make_result({m, w}, std::move(out), {x}, [m, n, w, begin](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * n + begin + j] += self.grad[i * w + j];
  });
}

Tensor normalize_rows(const Tensor& x) {
  require_matrix(x, "normalize_rows");
  const std::size_t m = x.rows(), n = x.cols();
  const auto in = x.data();
  std::vector<double> out(m * n);
  std::vector<double> lengths(m);
  for (std::size_t i = 0; i < m; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) sq += in[i * n + j] * in[i * n + j];
    lengths[i] = std::sqrt(sq);
    if (!(lengths[i] > 1e-12)) throw NumericError("normalize_rows: row " + std::to_string(i) + " has near-zero norm");
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = in[i * n + j] / lengths[i];
  }
  return make_result(x.shape(), std::move(out), {x}, [m, n, lengths = std::move(lengths)](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += self.value[i * n + j] * self.grad[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        g[i * n + j] += (self.grad[i * n + j] - self.value[i * n + j] * dot) / lengths[i];
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  auto y = matmul(x, weight);
  return bias.defined() ? add_bias(y, bias) : y;
}

Tensor quat_to_matrix(const Tensor& q) {
  if (q.size() != 4) throw ShapeError("quat_to_matrix expects 4 entries, got " + shape_to_string(q.shape()));
  const auto v = q.data();
  const double w = v[0], x = v[1], y = v[2], z = v[3];
  std::vector<double> r{1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
                        2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
                        2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
  return make_result({3, 3}, std::move(r), {q}, [](Node& self) {
    Node& src = *self.inputs[0];
    const double w = src.value[0], x = src.value[1], y = src.value[2], z = src.value[3];
    const double dw[9] = {0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0};
    const double dx[9] = {0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x};
    const double dy[9] = {-4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y};
    const double dz[9] = {-4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0};
    auto& g = src.grad_buffer();
    for (int i = 0; i < 9; ++i) {
      g[0] += self.grad[i] * dw[i];
      g[1] += self.grad[i] * dx[i];
      g[2] += self.grad[i] * dy[i];
      g[3] += self.grad[i] * dz[i];
    }
  });
}

Tensor quat_mul_rows(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "quat_mul_rows");
  if (a.rank() != 2 || a.cols() != 4) throw ShapeError("quat_mul_rows expects [n×4], got " + shape_to_string(a.shape()));
  const std::size_t m = a.rows();
  std::vector<double> out(m * 4);
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* p = av.data() + 4 * i;
    const double* q = bv.data() + 4 * i;
    out[4 * i + 0] = p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3];
    out[4 * i + 1] = p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2];
    out[4 * i + 2] = p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1];
    out[4 * i + 3] = p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0];
  }
  return make_result({m, 4}, std::move(out), {a, b}, [m](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    for (std::size_t i = 0; i < m; ++i) {
      const double* p = na.value.data() + 4 * i;
      const double* q = nb.value.data() + 4 * i;
      const double* g = self.grad.data() + 4 * i;
      if (na.requires_grad) {
        // out = R(q)·p
        const double rq[16] = {q[0], -q[1], -q[2], -q[3], q[1], q[0], q[3], -q[2],
                               q[2], -q[3], q[0], q[1],   q[3], q[2], -q[1], q[0]};
        auto& ga = na.grad_buffer();
        for (int r = 0; r < 4; ++r)
          for (int c = 0; c < 4; ++c) ga[4 * i + c] += rq[4 * r + c] * g[r];
      }
      if (nb.requires_grad) {
        // out = L(p)·q
        const double lp[16] = {p[0], -p[1], -p[2], -p[3], p[1], p[0], -p[3], p[2],
                               p[2], p[3],  p[0],  -p[1], p[3], -p[2], p[1], p[0]};
        auto& gb = nb.grad_buffer();
        for (int r = 0; r < 4; ++r)
          for (int c = 0; c < 4; ++c) gb[4 * i + c] += lp[4 * r + c] * g[r];
      }
    }
  });
}

}  // namespace ccs::nn

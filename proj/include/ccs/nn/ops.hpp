#pragma once

#include <cstddef>
#include <vector>

#include "ccs/nn/tensor.hpp"

// Differentiable primitives. Every function records its backward rule when
// grad mode is on and an input requires grad.
namespace ccs::nn {

// Linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise, identical shapes
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// x[m×n] + bias, where bias holds n values ([n] or [1×n]).
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);

Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);
// max(x, floor); zero gradient where the floor is active.
Tensor clamp_min(const Tensor& x, double floor);

// Reductions
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// [m×n] -> [n]
Tensor mean_rows(const Tensor& x);
// max(||x||_2, floor) over all entries; zero gradient where the floor is active
// (which also covers x = 0).
Tensor norm(const Tensor& x, double floor);

// Normalizing maps along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);
// Keeps the k largest logits of every slice (ties: lowest index), writes
// exact zeros elsewhere and normalizes over the survivors.
Tensor top_k_softmax(const Tensor& x, std::size_t k, std::size_t axis);

inline constexpr double kLayerNormEpsilon = 1e-5;
// Normalizes over the last axis, then applies gain and bias (both [d]).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double epsilon = kLayerNormEpsilon);

// [n×d] -> [d]; gradient goes to the first maximal row per feature.
Tensor max_pool_points(const Tensor& x);
// [(s·n)×d] -> [s×d]: max_pool_points over consecutive blocks of n rows.
Tensor segment_max_rows(const Tensor& x, std::size_t segment_rows);

// Layout
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);

// Each row divided by its L2 norm; rows with norm <= 1e-12 raise NumericError.
Tensor normalize_rows(const Tensor& x);

// x·W + b; W is [in×out], b is [out] or undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias = Tensor());

// Unit quaternion (w, x, y, z) with 4 entries -> 3×3 rotation matrix.
Tensor quat_to_matrix(const Tensor& q);
// Row-wise Hamilton product of two [n×4] tensors.
Tensor quat_mul_rows(const Tensor& a, const Tensor& b);

}  // namespace ccs::nn

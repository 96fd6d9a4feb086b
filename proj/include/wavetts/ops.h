#pragma once

#include <vector>

#include "wavetts/tensor.h"

namespace wavetts::ops {

// Elementwise binary ops. Shapes must match exactly, or agree on every axis
// except the last where one operand has extent 1 (trailing-axis broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// Elementwise unary.
Tensor neg(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor log_(const Tensor& x);   // domain error on x <= 0
Tensor exp_(const Tensor& x);
Tensor sqrt_(const Tensor& x);  // domain error on x < 0
Tensor softplus(const Tensor& x);
Tensor expm1_(const Tensor& x);
// log(1 - exp(-x)) for x > 0, numerically stable on both branches.
Tensor log1mexp(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

// Scalar-constant variants.
Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);

// Linear algebra (rank 2).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

// Structure ops (rank 2).
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, size_t r0, size_t r1);
Tensor slice_cols(const Tensor& x, size_t c0, size_t c1);
Tensor flip_rows(const Tensor& x);
// Repeat a [1 x C] row T times -> [T x C].
Tensor broadcast_rows(const Tensor& row, size_t t);
Tensor sum_rows(const Tensor& x);  // [T x C] -> [1 x C]
Tensor sum_last(const Tensor& x);  // [T x K] -> [T x 1]

// Reductions to shape {1}.
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// Row-wise max over the last axis, returned as a constant tensor (no grad).
// Used for the max-shift inside logsumexp, where the shift cancels exactly.
Tensor max_last_const(const Tensor& x);
// log(sum(exp(x), last axis)) -> [T x 1]; composite with exact gradients.
Tensor logsumexp_last(const Tensor& x);

// Causal dilated 1-D convolution. input [Cin x T], weights [Cout x Cin x KW];
// left edge zero-padded by (KW-1)*dilation, so output[t] depends only on
// input[<= t]. Kernel tap order: index KW-1 multiplies the current sample,
// index 0 the most distant past sample. Numeric backward; no second-order
// rule.
Tensor conv1d_causal(const Tensor& input, const Tensor& weights, size_t dilation);

// Transposed 1-D convolution. input [Cin x T], weights [Cin x Cout x KW];
// output is exactly [Cout x T*stride] (tail cropped / zero-padded to the
// contract). Numeric backward; no second-order rule.
Tensor conv1d_transposed(const Tensor& input, const Tensor& weights, size_t stride);

}  // namespace wavetts::ops

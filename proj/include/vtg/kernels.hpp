// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vtg/tensor.hpp"

// Hot numeric kernels. The primary implementations in vtg::kern parallelize
// over independent output elements with OpenMP, so results are bit-identical
// to the serial reference in vtg::kern::serial for any thread count. Tests
// compare the two; tools/bench_kernels times them.

namespace vtg::kern {

// c[m,n] = a[m,k] * b[k,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// c[m,n] = a[m,k] * b[n,k]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// c[m,n] = a[k,m]^T * b[k,n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);

// 1D convolution over rows of x[T,Cin], kernel width 3, zero padding 1.
// w is [Cout, Cin*3] with w(co, ci*3 + k); out is [T_out, Cout] where
// T_out = floor((T-1)/stride) + 1.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride);
Tensor conv1d_grad_input(const Tensor& gy, const Tensor& w, int stride, int64_t t_in);
Tensor conv1d_grad_weight(const Tensor& gy, const Tensor& x, int stride);

// Row-wise softmax over columns where mask[j] != 0; masked columns are
// exactly 0 in the output. mask may be empty (all columns live).
Tensor softmax_masked_rows(const Tensor& x, const Tensor& mask);

// Row-wise layer norm: per row y = (x - mean) / sqrt(var + eps) * gamma + beta.
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

namespace serial {
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride);
Tensor conv1d_grad_input(const Tensor& gy, const Tensor& w, int stride, int64_t t_in);
Tensor conv1d_grad_weight(const Tensor& gy, const Tensor& x, int stride);
Tensor softmax_masked_rows(const Tensor& x, const Tensor& mask);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
}  // namespace serial

}  // namespace vtg::kern

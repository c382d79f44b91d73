// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace vtg::kern {

namespace {
// Below this many multiply-adds the omp fork overhead dominates.
constexpr int64_t kParallelCutoff = 1 << 15;
}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_shape(a.ndim() == 2 && b.ndim() == 2 && a.shape[1] == b.shape[0],
              "matmul " + a.shape_str() + " * " + b.shape_str());
  const int64_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor c({m, n});
#pragma omp parallel for if (m * n * k > kParallelCutoff) schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double* ar = &a.data[static_cast<size_t>(i * k)];
    double* cr = &c.data[static_cast<size_t>(i * n)];
    for (int64_t p = 0; p < k; ++p) {
      const double av = ar[p];
      const double* br = &b.data[static_cast<size_t>(p * n)];
      for (int64_t j = 0; j < n; ++j) cr[j] += av * br[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_shape(a.ndim() == 2 && b.ndim() == 2 && a.shape[1] == b.shape[1],
              "matmul_nt " + a.shape_str() + " * " + b.shape_str());
  const int64_t m = a.shape[0], k = a.shape[1], n = b.shape[0];
  Tensor c({m, n});
#pragma omp parallel for if (m * n * k > kParallelCutoff) schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double* ar = &a.data[static_cast<size_t>(i * k)];
    double* cr = &c.data[static_cast<size_t>(i * n)];
    for (int64_t j = 0; j < n; ++j) {
      const double* br = &b.data[static_cast<size_t>(j * k)];
      double s = 0.0;
      for (int64_t p = 0; p < k; ++p) s += ar[p] * br[p];
      cr[j] = s;
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  check_shape(a.ndim() == 2 && b.ndim() == 2 && a.shape[0] == b.shape[0],
              "matmul_tn " + a.shape_str() + " * " + b.shape_str());
  const int64_t k = a.shape[0], m = a.shape[1], n = b.shape[1];
  Tensor c({m, n});
#pragma omp parallel for if (m * n * k > kParallelCutoff) schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    double* cr = &c.data[static_cast<size_t>(i * n)];
    for (int64_t p = 0; p < k; ++p) {
      const double av = a.data[static_cast<size_t>(p * m + i)];
      const double* br = &b.data[static_cast<size_t>(p * n)];
      for (int64_t j = 0; j < n; ++j) cr[j] += av * br[j];
    }
  }
  return c;
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
  const int64_t t_in = x.shape[0], cin = x.shape[1], cout = w.shape[0];
  check_shape(w.shape[1] == cin * 3 && b.shape[0] == cout, "conv1d weights");
  const int64_t t_out = (t_in - 1) / stride + 1;
  Tensor y({t_out, cout});
#pragma omp parallel for if (t_out * cout * cin > kParallelCutoff) schedule(static)
  for (int64_t t = 0; t < t_out; ++t) {
    double* yr = &y.data[static_cast<size_t>(t * cout)];
    for (int64_t co = 0; co < cout; ++co) {
      double s = b.at(co);
      const double* wr = &w.data[static_cast<size_t>(co * cin * 3)];
      for (int k = 0; k < 3; ++k) {
        const int64_t ti = t * stride - 1 + k;
        if (ti < 0 || ti >= t_in) continue;
        const double* xr = &x.data[static_cast<size_t>(ti * cin)];
        for (int64_t ci = 0; ci < cin; ++ci) s += xr[ci] * wr[ci * 3 + k];
      }
      yr[co] = s;
    }
  }
  return y;
}

Tensor conv1d_grad_input(const Tensor& gy, const Tensor& w, int stride, int64_t t_in) {
  const int64_t t_out = gy.shape[0], cout = gy.shape[1];
  const int64_t cin = w.shape[1] / 3;
  Tensor gx({t_in, cin});
#pragma omp parallel for if (t_in * cout * cin > kParallelCutoff) schedule(static)
  for (int64_t ti = 0; ti < t_in; ++ti) {
    double* gr = &gx.data[static_cast<size_t>(ti * cin)];
    // positions t,k with t*stride - 1 + k == ti
    for (int k = 0; k < 3; ++k) {
      const int64_t num = ti + 1 - k;
      if (num < 0 || num % stride != 0) continue;
      const int64_t t = num / stride;
      if (t >= t_out) continue;
      const double* gyr = &gy.data[static_cast<size_t>(t * cout)];
      for (int64_t co = 0; co < cout; ++co) {
        const double g = gyr[co];
        const double* wr = &w.data[static_cast<size_t>(co * cin * 3)];
        for (int64_t ci = 0; ci < cin; ++ci) gr[ci] += g * wr[ci * 3 + k];
      }
    }
  }
  return gx;
}

Tensor conv1d_grad_weight(const Tensor& gy, const Tensor& x, int stride) {
  const int64_t t_out = gy.shape[0], cout = gy.shape[1];
  const int64_t t_in = x.shape[0], cin = x.shape[1];
  Tensor gw({cout, cin * 3});
#pragma omp parallel for if (t_out * cout * cin > kParallelCutoff) schedule(static)
  for (int64_t co = 0; co < cout; ++co) {
    double* gwr = &gw.data[static_cast<size_t>(co * cin * 3)];
    for (int64_t t = 0; t < t_out; ++t) {
      const double g = gy.at(t, co);
      for (int k = 0; k < 3; ++k) {
        const int64_t ti = t * stride - 1 + k;
        if (ti < 0 || ti >= t_in) continue;
        const double* xr = &x.data[static_cast<size_t>(ti * cin)];
        for (int64_t ci = 0; ci < cin; ++ci) gwr[ci * 3 + k] += g * xr[ci];
      }
    }
  }
  return gw;
}

Tensor softmax_masked_rows(const Tensor& x, const Tensor& mask) {
  const int64_t m = x.shape[0], n = x.shape[1];
  const bool per_row = mask.ndim() == 2;
  check_shape(mask.numel() == 0 || (per_row ? mask.same_shape(x) : mask.shape[0] == n),
              "softmax mask");
  Tensor y({m, n});
#pragma omp parallel for if (m * n > kParallelCutoff) schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double* xr = &x.data[static_cast<size_t>(i * n)];
    double* yr = &y.data[static_cast<size_t>(i * n)];
    auto live = [&](int64_t j) {
      return mask.numel() == 0 || (per_row ? mask.at(i, j) : mask.at(j)) != 0.0;
    };
    double mx = -HUGE_VAL;
    for (int64_t j = 0; j < n; ++j)
      if (live(j)) mx = std::max(mx, xr[j]);
    double s = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      yr[j] = live(j) ? std::exp(xr[j] - mx) : 0.0;
      s += yr[j];
    }
    if (s > 0.0)
      for (int64_t j = 0; j < n; ++j) yr[j] /= s;
  }
  return y;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const int64_t m = x.shape[0], n = x.shape[1];
  check_shape(gamma.numel() == n && beta.numel() == n, "layer_norm params");
  Tensor y({m, n});
#pragma omp parallel for if (m * n > kParallelCutoff) schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double* xr = &x.data[static_cast<size_t>(i * n)];
    double* yr = &y.data[static_cast<size_t>(i * n)];
    double mu = 0.0;
    for (int64_t j = 0; j < n; ++j) mu += xr[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int64_t j = 0; j < n; ++j)
      yr[j] = (xr[j] - mu) * inv * gamma.at(j) + beta.at(j);
  }
  return y;
}

}  // namespace vtg::kern

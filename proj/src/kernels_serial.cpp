// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
//
// Plain-loop reference implementations. Kept deliberately pragma-free and
// unfused; tests assert bitwise equality against the parallel kernels.
#include <algorithm>
#include <cmath>

#include "vtg/kernels.hpp"

namespace vtg::kern::serial {

Tensor matmul(const Tensor& a, const Tensor& b) {
  const int64_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor c({m, n});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t p = 0; p < k; ++p) {
      const double av = a.at(i, p);
      for (int64_t j = 0; j < n; ++j) c.at(i, j) += av * b.at(p, j);
    }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const int64_t m = a.shape[0], k = a.shape[1], n = b.shape[0];
  Tensor c({m, n});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int64_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(j, p);
      c.at(i, j) = s;
    }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  const int64_t k = a.shape[0], m = a.shape[1], n = b.shape[1];
  Tensor c({m, n});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t p = 0; p < k; ++p) {
      const double av = a.at(p, i);
      for (int64_t j = 0; j < n; ++j) c.at(i, j) += av * b.at(p, j);
    }
  return c;
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
  const int64_t t_in = x.shape[0], cin = x.shape[1], cout = w.shape[0];
  const int64_t t_out = (t_in - 1) / stride + 1;
  Tensor y({t_out, cout});
  for (int64_t t = 0; t < t_out; ++t)
    for (int64_t co = 0; co < cout; ++co) {
      double s = b.at(co);
      for (int k = 0; k < 3; ++k) {
        const int64_t ti = t * stride - 1 + k;
        if (ti < 0 || ti >= t_in) continue;
        for (int64_t ci = 0; ci < cin; ++ci) s += x.at(ti, ci) * w.at(co, ci * 3 + k);
      }
      y.at(t, co) = s;
    }
  return y;
}

Tensor conv1d_grad_input(const Tensor& gy, const Tensor& w, int stride, int64_t t_in) {
  const int64_t t_out = gy.shape[0], cout = gy.shape[1];
  const int64_t cin = w.shape[1] / 3;
  Tensor gx({t_in, cin});
  for (int64_t ti = 0; ti < t_in; ++ti)
    for (int k = 0; k < 3; ++k) {
      const int64_t num = ti + 1 - k;
      if (num < 0 || num % stride != 0) continue;
      const int64_t t = num / stride;
      if (t >= t_out) continue;
      for (int64_t co = 0; co < cout; ++co)
        for (int64_t ci = 0; ci < cin; ++ci)
          gx.at(ti, ci) += gy.at(t, co) * w.at(co, ci * 3 + k);
    }
  return gx;
}

Tensor conv1d_grad_weight(const Tensor& gy, const Tensor& x, int stride) {
  const int64_t t_out = gy.shape[0], cout = gy.shape[1];
  const int64_t t_in = x.shape[0], cin = x.shape[1];
  Tensor gw({cout, cin * 3});
  for (int64_t co = 0; co < cout; ++co)
    for (int64_t t = 0; t < t_out; ++t)
      for (int k = 0; k < 3; ++k) {
        const int64_t ti = t * stride - 1 + k;
        if (ti < 0 || ti >= t_in) continue;
        for (int64_t ci = 0; ci < cin; ++ci)
          gw.at(co, ci * 3 + k) += gy.at(t, co) * x.at(ti, ci);
      }
  return gw;
}

Tensor softmax_masked_rows(const Tensor& x, const Tensor& mask) {
  const int64_t m = x.shape[0], n = x.shape[1];
  const bool per_row = mask.ndim() == 2;
  Tensor y({m, n});
  for (int64_t i = 0; i < m; ++i) {
    auto live = [&](int64_t j) {
      return mask.numel() == 0 || (per_row ? mask.at(i, j) : mask.at(j)) != 0.0;
    };
    double mx = -HUGE_VAL;
    for (int64_t j = 0; j < n; ++j)
      if (live(j)) mx = std::max(mx, x.at(i, j));
    double s = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      y.at(i, j) = live(j) ? std::exp(x.at(i, j) - mx) : 0.0;
      s += y.at(i, j);
    }
    if (s > 0.0)
      for (int64_t j = 0; j < n; ++j) y.at(i, j) /= s;
  }
  return y;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const int64_t m = x.shape[0], n = x.shape[1];
  Tensor y({m, n});
  for (int64_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (int64_t j = 0; j < n; ++j) mu += x.at(i, j);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t j = 0; j < n; ++j) var += (x.at(i, j) - mu) * (x.at(i, j) - mu);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int64_t j = 0; j < n; ++j)
      y.at(i, j) = (x.at(i, j) - mu) * inv * gamma.at(j) + beta.at(j);
  }
  return y;
}

}  // namespace vtg::kern::serial

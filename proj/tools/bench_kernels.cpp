// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
//
// Times the OpenMP kernels against the serial reference and checks bitwise
// agreement on the way. Shapes roughly match a training step at default
// scale.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vtg/kernels.hpp"
#include "vtg/rng.hpp"

using vtg::Rng;
using vtg::Tensor;
namespace kern = vtg::kern;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] != b.data[i]) return false;
  return true;
}

double time_ms(const std::function<void()>& fn, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() /
         static_cast<double>(reps);
}

void row(const std::string& name, const std::function<Tensor()>& par,
         const std::function<Tensor()>& ser, int reps) {
  const Tensor a = par();
  const Tensor b = ser();
  const bool ok = bit_equal(a, b);
  const double tp = time_ms([&] { par(); }, reps);
  const double ts = time_ms([&] { ser(); }, reps);
  std::printf("%-28s %10.3f ms %10.3f ms  x%5.2f  %s\n", name.c_str(), tp, ts,
              ts / tp, ok ? "bit-equal" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif
  std::printf("%-28s %13s %13s %7s\n", "kernel", "parallel", "serial", "speedup");

  Rng rng(7);
  const Tensor a = random_tensor({256, 256}, rng);
  const Tensor b = random_tensor({256, 256}, rng);
  const Tensor x = random_tensor({512, 256}, rng);
  const Tensor w = random_tensor({256, 256 * 3}, rng);
  const Tensor bias = random_tensor({256}, rng);
  const Tensor logits = random_tensor({512, 512}, rng);
  const Tensor gamma = random_tensor({256}, rng);
  const Tensor beta = random_tensor({256}, rng);

  row("matmul 256x256x256", [&] { return kern::matmul(a, b); },
      [&] { return kern::serial::matmul(a, b); }, 20);
  row("matmul_nt 256x256x256", [&] { return kern::matmul_nt(a, b); },
      [&] { return kern::serial::matmul_nt(a, b); }, 20);
  row("matmul_tn 256x256x256", [&] { return kern::matmul_tn(a, b); },
      [&] { return kern::serial::matmul_tn(a, b); }, 20);
  row("conv1d 512x256 s1", [&] { return kern::conv1d(x, w, bias, 1); },
      [&] { return kern::serial::conv1d(x, w, bias, 1); }, 10);
  row("conv1d 512x256 s2", [&] { return kern::conv1d(x, w, bias, 2); },
      [&] { return kern::serial::conv1d(x, w, bias, 2); }, 10);
  row("softmax rows 512x512", [&] { return kern::softmax_masked_rows(logits, Tensor{}); },
      [&] { return kern::serial::softmax_masked_rows(logits, Tensor{}); }, 50);
  row("layer_norm rows 512x256", [&] { return kern::layer_norm_rows(x, gamma, beta, 1e-5); },
      [&] { return kern::serial::layer_norm_rows(x, gamma, beta, 1e-5); }, 50);
  return 0;
}

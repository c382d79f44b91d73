// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/autodiff.hpp"

#include <cmath>

#include "vtg/kernels.hpp"

namespace vtg {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

void acc(Tensor& g, const Tensor& d) {
  for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += d.data[i];
}
}  // namespace

void Graph::backward(Var root) {
  check_shape(root->value().numel() == 1, "backward root must be scalar");
  root->ensure_grad().data[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = *it;
    if (n.needs_grad && n.back && n.has_grad()) n.back(n);
  }
}

Var add(Var a, Var b) {
  check_shape(a->value().same_shape(b->value()), "add");
  Tensor out = a->value();
  acc(out, b->value());
  return a->graph->make(std::move(out), any_grad({a, b}), [a, b](Node& self) {
    if (a->needs_grad) acc(a->ensure_grad(), self.grad);
    if (b->needs_grad) acc(b->ensure_grad(), self.grad);
  });
}

Var sub(Var a, Var b) {
  check_shape(a->value().same_shape(b->value()), "sub");
  Tensor out = a->value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value().data[i];
  return a->graph->make(std::move(out), any_grad({a, b}), [a, b](Node& self) {
    if (a->needs_grad) acc(a->ensure_grad(), self.grad);
    if (b->needs_grad) {
      Tensor& g = b->ensure_grad();
      for (size_t i = 0; i < g.data.size(); ++i) g.data[i] -= self.grad.data[i];
    }
  });
}

Var mul(Var a, Var b) {
  check_shape(a->value().same_shape(b->value()), "mul");
  Tensor out = a->value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value().data[i];
  return a->graph->make(std::move(out), any_grad({a, b}), [a, b](Node& self) {
    if (a->needs_grad) {
      Tensor& g = a->ensure_grad();
      for (size_t i = 0; i < g.data.size(); ++i)
        g.data[i] += self.grad.data[i] * b->value().data[i];
    }
    if (b->needs_grad) {
      Tensor& g = b->ensure_grad();
      for (size_t i = 0; i < g.data.size(); ++i)
        g.data[i] += self.grad.data[i] * a->value().data[i];
    }
  });
}

Var div(Var a, Var b) {
  check_shape(a->value().same_shape(b->value()), "div");
  Tensor out = a->value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] /= b->value().data[i];
  return a->graph->make(std::move(out), any_grad({a, b}), [a, b](Node& self) {
    if (a->needs_grad) {
      Tensor& g = a->ensure_grad();
      for (size_t i = 0; i < g.data.size(); ++i)
        g.data[i] += self.grad.data[i] / b->value().data[i];
    }
    if (b->needs_grad) {
      Tensor& g = b->ensure_grad();
      for (size_t i = 0; i < g.data.size(); ++i) {
        const double bv = b->value().data[i];
        g.data[i] -= self.grad.data[i] * a->value().data[i] / (bv * bv);
      }
    }
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  Tensor out = a->value();
  for (double& v : out.data) v *= c;
  return a->graph->make(std::move(out), a->needs_grad, [a, c](Node& self) {
    Tensor& g = a->ensure_grad();
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += c * self.grad.data[i];
  });
}

Var add_scalar(Var a, Var s) {
  check_shape(s->value().numel() == 1, "add_scalar");
  Tensor out = a->value();
  const double sv = s->value().data[0];
  for (double& v : out.data) v += sv;
  return a->graph->make(std::move(out), any_grad({a, s}), [a, s](Node& self) {
    if (a->needs_grad) acc(a->ensure_grad(), self.grad);
    if (s->needs_grad) {
      double t = 0.0;
      for (double g : self.grad.data) t += g;
      s->ensure_grad().data[0] += t;
    }
  });
}

Var mul_scalar(Var a, Var s) {
  check_shape(s->value().numel() == 1, "mul_scalar");
  Tensor out = a->value();
  const double sv = s->value().data[0];
  for (double& v : out.data) v *= sv;
  return a->graph->make(std::move(out), any_grad({a, s}), [a, s](Node& self) {
    if (a->needs_grad) {
      const double sv = s->value().data[0];
      Tensor& g = a->ensure_grad();
      for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += sv * self.grad.data[i];
    }
    if (s->needs_grad) {
      double t = 0.0;
      for (size_t i = 0; i < self.grad.data.size(); ++i)
        t += self.grad.data[i] * a->value().data[i];
      s->ensure_grad().data[0] += t;
    }
  });
}

Var add_rowvec(Var m, Var v) {
  const int64_t r = m->value().rows(), c = m->value().cols();
  check_shape(v->value().numel() == c, "add_rowvec");
  Tensor out = m->value();
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(i, j) += v->value().at(j);
  return m->graph->make(std::move(out), any_grad({m, v}), [m, v, r, c](Node& self) {
    if (m->needs_grad) acc(m->ensure_grad(), self.grad);
    if (v->needs_grad) {
      Tensor& g = v->ensure_grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) g.at(j) += self.grad.at(i, j);
    }
  });
}

Var mul_rowvec(Var m, Var v) {
  const int64_t r = m->value().rows(), c = m->value().cols();
  check_shape(v->value().numel() == c, "mul_rowvec");
  Tensor out = m->value();
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(i, j) *= v->value().at(j);
  return m->graph->make(std::move(out), any_grad({m, v}), [m, v, r, c](Node& self) {
    if (m->needs_grad) {
      Tensor& g = m->ensure_grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(i, j) * v->value().at(j);
    }
    if (v->needs_grad) {
      Tensor& g = v->ensure_grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) g.at(j) += self.grad.at(i, j) * m->value().at(i, j);
    }
  });
}

Var mul_colvec(Var m, Var v) {
  const int64_t r = m->value().rows(), c = m->value().cols();
  check_shape(v->value().numel() == r, "mul_colvec");
  Tensor out = m->value();
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(i, j) *= v->value().at(i);
  return m->graph->make(std::move(out), any_grad({m, v}), [m, v, r, c](Node& self) {
    if (m->needs_grad) {
      Tensor& g = m->ensure_grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(i, j) * v->value().at(i);
    }
    if (v->needs_grad) {
      Tensor& g = v->ensure_grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) g.at(i) += self.grad.at(i, j) * m->value().at(i, j);
    }
  });
}

Var outer(Var a, Var b) {
  const int64_t m = a->value().numel(), n = b->value().numel();
  Tensor out({m, n});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out.at(i, j) = a->value().at(i) * b->value().at(j);
  return a->graph->make(std::move(out), any_grad({a, b}), [a, b, m, n](Node& self) {
    if (a->needs_grad) {
      Tensor& g = a->ensure_grad();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) g.at(i) += self.grad.at(i, j) * b->value().at(j);
    }
    if (b->needs_grad) {
      Tensor& g = b->ensure_grad();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) g.at(j) += self.grad.at(i, j) * a->value().at(i);
    }
  });
}

Var matmul(Var a, Var b) {
  Tensor out = kern::matmul(a->value(), b->value());
  return a->graph->make(std::move(out), any_grad({a, b}), [a, b](Node& self) {
    if (a->needs_grad) acc(a->ensure_grad(), kern::matmul_nt(self.grad, b->value()));
    if (b->needs_grad) acc(b->ensure_grad(), kern::matmul_tn(a->value(), self.grad));
  });
}

Var matmul_nt(Var a, Var b) {
  Tensor out = kern::matmul_nt(a->value(), b->value());
  return a->graph->make(std::move(out), any_grad({a, b}), [a, b](Node& self) {
    if (a->needs_grad) acc(a->ensure_grad(), kern::matmul(self.grad, b->value()));
    if (b->needs_grad) acc(b->ensure_grad(), kern::matmul_tn(self.grad, a->value()));
  });
}

Var matmul_tn(Var a, Var b) {
  Tensor out = kern::matmul_tn(a->value(), b->value());
  return a->graph->make(std::move(out), any_grad({a, b}), [a, b](Node& self) {
    if (a->needs_grad) acc(a->ensure_grad(), kern::matmul_nt(b->value(), self.grad));
    if (b->needs_grad) acc(b->ensure_grad(), kern::matmul(a->value(), self.grad));
  });
}

Var slice_rows(Var a, int64_t r0, int64_t r1) {
  const int64_t c = a->value().cols();
  check_shape(0 <= r0 && r0 < r1 && r1 <= a->value().rows(), "slice_rows");
  Tensor out({r1 - r0, c});
  for (int64_t i = r0; i < r1; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(i - r0, j) = a->value().at(i, j);
  return a->graph->make(std::move(out), a->needs_grad, [a, r0, r1, c](Node& self) {
    Tensor& g = a->ensure_grad();
    for (int64_t i = r0; i < r1; ++i)
      for (int64_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(i - r0, j);
  });
}

Var slice_cols(Var a, int64_t c0, int64_t c1) {
  const int64_t r = a->value().rows();
  check_shape(0 <= c0 && c0 < c1 && c1 <= a->value().cols(), "slice_cols");
  Tensor out({r, c1 - c0});
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = c0; j < c1; ++j) out.at(i, j - c0) = a->value().at(i, j);
  return a->graph->make(std::move(out), a->needs_grad, [a, c0, c1, r](Node& self) {
    Tensor& g = a->ensure_grad();
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = c0; j < c1; ++j) g.at(i, j) += self.grad.at(i, j - c0);
  });
}

Var gather_rows(Var a, std::vector<int64_t> idx) {
  const int64_t c = a->value().cols();
  Tensor out({static_cast<int64_t>(idx.size()), c});
  for (size_t i = 0; i < idx.size(); ++i) {
    check_shape(idx[i] >= 0 && idx[i] < a->value().rows(), "gather_rows index");
    for (int64_t j = 0; j < c; ++j) out.at(static_cast<int64_t>(i), j) = a->value().at(idx[i], j);
  }
  auto ids = std::move(idx);
  return a->graph->make(std::move(out), a->needs_grad, [a, ids, c](Node& self) {
    Tensor& g = a->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i)
      for (int64_t j = 0; j < c; ++j) g.at(ids[i], j) += self.grad.at(static_cast<int64_t>(i), j);
  });
}

Var slice_vec(Var v, int64_t a, int64_t b) {
  return flatten(slice_rows(reshape_rows(v, v->value().numel(), 1), a, b));
}

Var gather_vec(Var v, std::vector<int64_t> idx) {
  return flatten(gather_rows(reshape_rows(v, v->value().numel(), 1), std::move(idx)));
}

Var concat_rows(const std::vector<Var>& parts) {
  const int64_t c = parts.front()->value().cols();
  int64_t r = 0;
  bool needs = false;
  for (Var p : parts) {
    check_shape(p->value().cols() == c, "concat_rows");
    r += p->value().rows();
    needs = needs || p->needs_grad;
  }
  Tensor out({r, c});
  int64_t off = 0;
  for (Var p : parts) {
    for (int64_t i = 0; i < p->value().rows(); ++i)
      for (int64_t j = 0; j < c; ++j) out.at(off + i, j) = p->value().at(i, j);
    off += p->value().rows();
  }
  auto ps = parts;
  return parts.front()->graph->make(std::move(out), needs, [ps, c](Node& self) {
    int64_t off = 0;
    for (Var p : ps) {
      const int64_t pr = p->value().rows();
      if (p->needs_grad) {
        Tensor& g = p->ensure_grad();
        for (int64_t i = 0; i < pr; ++i)
          for (int64_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(off + i, j);
      }
      off += pr;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  const int64_t r = parts.front()->value().rows();
  int64_t c = 0;
  bool needs = false;
  for (Var p : parts) {
    check_shape(p->value().rows() == r, "concat_cols");
    c += p->value().cols();
    needs = needs || p->needs_grad;
  }
  Tensor out({r, c});
  int64_t off = 0;
  for (Var p : parts) {
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < p->value().cols(); ++j) out.at(i, off + j) = p->value().at(i, j);
    off += p->value().cols();
  }
  auto ps = parts;
  return parts.front()->graph->make(std::move(out), needs, [ps, r](Node& self) {
    int64_t off = 0;
    for (Var p : ps) {
      const int64_t pc = p->value().cols();
      if (p->needs_grad) {
        Tensor& g = p->ensure_grad();
        for (int64_t i = 0; i < r; ++i)
          for (int64_t j = 0; j < pc; ++j) g.at(i, j) += self.grad.at(i, off + j);
      }
      off += pc;
    }
  });
}

Var flatten(Var a) {
  Tensor out({a->value().numel()}, a->value().data);
  return a->graph->make(std::move(out), a->needs_grad, [a](Node& self) {
    acc(a->ensure_grad(), Tensor(a->value().shape, self.grad.data));
  });
}

Var reshape_rows(Var a, int64_t r, int64_t c) {
  check_shape(r * c == a->value().numel(), "reshape_rows");
  Tensor out({r, c}, a->value().data);
  return a->graph->make(std::move(out), a->needs_grad, [a](Node& self) {
    acc(a->ensure_grad(), Tensor(a->value().shape, self.grad.data));
  });
}

Var concat_vec(const std::vector<Var>& parts) {
  int64_t n = 0;
  bool needs = false;
  for (Var p : parts) {
    n += p->value().numel();
    needs = needs || p->needs_grad;
  }
  Tensor out({n});
  int64_t off = 0;
  for (Var p : parts)
    for (int64_t i = 0; i < p->value().numel(); ++i) out.at(off++) = p->value().at(i);
  auto ps = parts;
  return parts.front()->graph->make(std::move(out), needs, [ps](Node& self) {
    int64_t off = 0;
    for (Var p : ps) {
      const int64_t pn = p->value().numel();
      if (p->needs_grad) {
        Tensor& g = p->ensure_grad();
        for (int64_t i = 0; i < pn; ++i) g.at(i) += self.grad.at(off + i);
      }
      off += pn;
    }
  });
}

namespace {
template <class F, class D>
Var unary(Var a, F f, D dfdx) {
  Tensor out = a->value();
  for (double& v : out.data) v = f(v);
  return a->graph->make(std::move(out), a->needs_grad, [a, dfdx](Node& self) {
    Tensor& g = a->ensure_grad();
    for (size_t i = 0; i < g.data.size(); ++i)
      g.data[i] += self.grad.data[i] * dfdx(a->value().data[i]);
  });
}
}  // namespace

Var gelu(Var a) {
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [](double x) {
        return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
               x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double x) {
        const double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        return s * (1.0 - s);
      });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); },
      [](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; },
               [](double x) { return x > 0 ? 1.0 : 0.0; });
}

Var log_of(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var exp_of(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var sqrt_of(Var a) {
  return unary(a, [](double x) { return std::sqrt(x); },
               [](double x) { return 0.5 / std::sqrt(x); });
}

Var pow_const(Var a, double p) {
  return unary(a, [p](double x) { return std::pow(x, p); },
               [p](double x) { return x == 0.0 ? 0.0 : p * std::pow(x, p - 1.0); });
}

Var abs_of(Var a) {
  return unary(a, [](double x) { return std::fabs(x); },
               [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var sum(Var a) {
  double t = 0.0;
  for (double v : a->value().data) t += v;
  return a->graph->make(Tensor({1}, {t}), a->needs_grad, [a](Node& self) {
    Tensor& g = a->ensure_grad();
    for (double& v : g.data) v += self.grad.data[0];
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a->value().numel())); }

Var dot(Var a, Var b) {
  check_shape(a->value().numel() == b->value().numel(), "dot");
  double t = 0.0;
  for (int64_t i = 0; i < a->value().numel(); ++i) t += a->value().at(i) * b->value().at(i);
  return a->graph->make(Tensor({1}, {t}), any_grad({a, b}), [a, b](Node& self) {
    const double g = self.grad.data[0];
    if (a->needs_grad) {
      Tensor& ga = a->ensure_grad();
      for (int64_t i = 0; i < ga.numel(); ++i) ga.at(i) += g * b->value().at(i);
    }
    if (b->needs_grad) {
      Tensor& gb = b->ensure_grad();
      for (int64_t i = 0; i < gb.numel(); ++i) gb.at(i) += g * a->value().at(i);
    }
  });
}

Var row_sums(Var a) {
  const int64_t r = a->value().rows(), c = a->value().cols();
  Tensor out({r});
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(i) += a->value().at(i, j);
  return a->graph->make(std::move(out), a->needs_grad, [a, r, c](Node& self) {
    Tensor& g = a->ensure_grad();
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(i);
  });
}

Var col_sums(Var a) {
  const int64_t r = a->value().rows(), c = a->value().cols();
  Tensor out({c});
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(j) += a->value().at(i, j);
  return a->graph->make(std::move(out), a->needs_grad, [a, r, c](Node& self) {
    Tensor& g = a->ensure_grad();
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(j);
  });
}

Var softmax_masked(Var logits, Tensor mask) {
  Tensor out = kern::softmax_masked_rows(logits->value(), mask);
  return logits->graph->make(std::move(out), logits->needs_grad, [logits](Node& self) {
    const Tensor& y = self.value();
    const int64_t r = y.rows(), c = y.cols();
    Tensor& g = logits->ensure_grad();
    for (int64_t i = 0; i < r; ++i) {
      double inner = 0.0;
      for (int64_t j = 0; j < c; ++j) inner += y.at(i, j) * self.grad.at(i, j);
      for (int64_t j = 0; j < c; ++j)
        g.at(i, j) += y.at(i, j) * (self.grad.at(i, j) - inner);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tensor out = kern::layer_norm_rows(x->value(), gamma->value(), beta->value(), eps);
  return x->graph->make(std::move(out), any_grad({x, gamma, beta}),
                        [x, gamma, beta, eps](Node& self) {
    const int64_t r = x->value().rows(), c = x->value().cols();
    const double nd = static_cast<double>(c);
    for (int64_t i = 0; i < r; ++i) {
      double mu = 0.0;
      for (int64_t j = 0; j < c; ++j) mu += x->value().at(i, j);
      mu /= nd;
      double var = 0.0;
      for (int64_t j = 0; j < c; ++j) {
        const double d = x->value().at(i, j) - mu;
        var += d * d;
      }
      var /= nd;
      const double inv = 1.0 / std::sqrt(var + eps);
      double mg = 0.0, mgx = 0.0;
      std::vector<double> xhat(static_cast<size_t>(c)), gg(static_cast<size_t>(c));
      for (int64_t j = 0; j < c; ++j) {
        xhat[j] = (x->value().at(i, j) - mu) * inv;
        gg[j] = self.grad.at(i, j) * gamma->value().at(j);
        mg += gg[j];
        mgx += gg[j] * xhat[j];
      }
      mg /= nd;
      mgx /= nd;
      if (x->needs_grad) {
        Tensor& g = x->ensure_grad();
        for (int64_t j = 0; j < c; ++j)
          g.at(i, j) += inv * (gg[j] - mg - xhat[j] * mgx);
      }
      if (gamma->needs_grad) {
        Tensor& g = gamma->ensure_grad();
        for (int64_t j = 0; j < c; ++j) g.at(j) += self.grad.at(i, j) * xhat[j];
      }
      if (beta->needs_grad) {
        Tensor& g = beta->ensure_grad();
        for (int64_t j = 0; j < c; ++j) g.at(j) += self.grad.at(i, j);
      }
    }
  });
}

Var conv1d(Var x, Var w, Var b, int stride) {
  Tensor out = kern::conv1d(x->value(), w->value(), b->value(), stride);
  return x->graph->make(std::move(out), any_grad({x, w, b}), [x, w, b, stride](Node& self) {
    if (x->needs_grad)
      acc(x->ensure_grad(),
          kern::conv1d_grad_input(self.grad, w->value(), stride, x->value().rows()));
    if (w->needs_grad)
      acc(w->ensure_grad(), kern::conv1d_grad_weight(self.grad, x->value(), stride));
    if (b->needs_grad) {
      Tensor& g = b->ensure_grad();
      for (int64_t t = 0; t < self.grad.rows(); ++t)
        for (int64_t co = 0; co < self.grad.cols(); ++co) g.at(co) += self.grad.at(t, co);
    }
  });
}

Var logsumexp_masked(Var x, const Tensor& mask) {
  const int64_t n = x->value().numel();
  check_shape(mask.numel() == 0 || mask.numel() == n, "logsumexp mask");
  auto live = [&mask](int64_t j) { return mask.numel() == 0 || mask.at(j) != 0.0; };
  double mx = -HUGE_VAL;
  for (int64_t j = 0; j < n; ++j)
    if (live(j)) mx = std::max(mx, x->value().at(j));
  double s = 0.0;
  for (int64_t j = 0; j < n; ++j)
    if (live(j)) s += std::exp(x->value().at(j) - mx);
  const double lse = mx + std::log(s);
  Tensor m = mask;
  return x->graph->make(Tensor({1}, {lse}), x->needs_grad, [x, m, n](Node& self) {
    const double g = self.grad.data[0];
    const double y = self.value().data[0];
    Tensor& gx = x->ensure_grad();
    for (int64_t j = 0; j < n; ++j) {
      const bool ok = m.numel() == 0 || m.at(j) != 0.0;
      if (ok) gx.at(j) += g * std::exp(x->value().at(j) - y);
    }
  });
}

}  // namespace vtg

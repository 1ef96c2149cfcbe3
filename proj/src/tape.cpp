// Copyright 2026 The rankforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rankforge/tape.hpp"

#include <algorithm>
#include <cmath>

#include "rankforge/errors.hpp"

namespace rankforge {

const Array& Var::value() const { return tape_->value(id_); }
const Array& Var::grad() const { return tape_->adjoint(id_); }

Var Tape::constant(Array value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Array value) {
  Var v = constant(std::move(value));
  nodes_[v.id_].requires_grad = true;
  return v;
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  Var v = variable(store.value(name));
  param_nodes_.emplace(name, v.id_);
  return v;
}

Var Tape::record(Array value, std::vector<std::size_t> parents,
                 BackwardFn fn) {
  Node n;
  n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                [&](std::size_t p) {
                                  return nodes_[p].requires_grad;
                                });
  if (n.requires_grad) n.backward = std::move(fn);
  n.value = std::move(value);
  n.parents = std::move(parents);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ConfigError("loss node belongs to another tape");
  if (!nodes_[loss.id_].value.is_scalar()) {
    throw ConfigError("backward needs a scalar loss, got shape " +
                      shape_string(nodes_[loss.id_].value.shape()));
  }
  // Adjoints are allocated here so forward-only tapes never pay for them.
  for (auto& n : nodes_) {
    if (n.adjoint.same_shape(n.value)) n.adjoint.fill(0.0);
    else n.adjoint = Array::zeros_like(n.value);
  }
  nodes_[loss.id_].adjoint[0] = 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

void Tape::backward(Var loss, ParamStore& store) {
  backward(loss);
  for (const auto& [name, id] : param_nodes_) {
    if (!store.contains(name)) continue;
    Array& g = store.grad(name);
    const Array& a = nodes_[id].adjoint;
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += a[k];
  }
}

namespace {

Tape& common_tape(Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw ConfigError("operands live on different tapes");
  }
  return *a.tape();
}

void require_same_shape(const Array& a, const Array& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ConfigError(std::string(op) + ": shape mismatch " +
                      shape_string(a.shape()) + " vs " +
                      shape_string(b.shape()));
  }
}

void require_vector(const Array& a, const char* op) {
  if (!a.is_vector()) {
    throw ConfigError(std::string(op) + ": expected a vector, got " +
                      shape_string(a.shape()));
  }
}

void require_nonempty_vector(const Array& a, const char* op) {
  require_vector(a, op);
  if (a.size() == 0) throw ConfigError(std::string(op) + ": empty input");
}

// Elementwise unary op with local derivative expressed via input and output.
template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tape& t = *a.tape();
  Array out = a.value();
  for (double& v : out.values()) v = fwd(v);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, deriv](Tape& t, std::size_t self) {
    const Array& x = t.value(ia);
    const Array& y = t.value(self);
    const Array& g = t.adjoint(self);
    Array& gx = t.adjoint(ia);
    for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] * deriv(x[k], y[k]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::pair<double, std::vector<double>> shifted_exp(const Array& x) {
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  std::vector<double> e(x.size());
  double z = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    e[k] = std::exp(x[k] - mx);
    z += e[k];
  }
  return {mx, std::move(e)};
}

Selection select_extreme(Var x, bool want_max, const char* op) {
  require_nonempty_vector(x.value(), op);
  const Array& xv = x.value();
  std::size_t best = 0;
  for (std::size_t k = 1; k < xv.size(); ++k) {
    if (want_max ? xv[k] > xv[best] : xv[k] < xv[best]) best = k;
  }
  const std::size_t ix = x.id();
  Var v = x.tape()->record(Array::scalar(xv[best]), {ix},
                           [ix, best](Tape& t, std::size_t self) {
                             t.adjoint(ix)[best] += t.adjoint(self)[0];
                           });
  return {v, best};
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Array out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += b.value()[k];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t s) {
    const Array& g = t.adjoint(s);
    if (t.requires_grad(ia)) {
      Array& ga = t.adjoint(ia);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (t.requires_grad(ib)) {
      Array& gb = t.adjoint(ib);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Array out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= b.value()[k];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t s) {
    const Array& g = t.adjoint(s);
    if (t.requires_grad(ia)) {
      Array& ga = t.adjoint(ia);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (t.requires_grad(ib)) {
      Array& gb = t.adjoint(ib);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Array out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= b.value()[k];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t s) {
    const Array& g = t.adjoint(s);
    const Array& av = t.value(ia);
    const Array& bv = t.value(ib);
    if (t.requires_grad(ia)) {
      Array& ga = t.adjoint(ia);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * bv[k];
    }
    if (t.requires_grad(ib)) {
      Array& gb = t.adjoint(ib);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * av[k];
    }
  });
}

Var div(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "div");
  Array out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= b.value()[k];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t s) {
    const Array& g = t.adjoint(s);
    const Array& bv = t.value(ib);
    const Array& y = t.value(s);
    if (t.requires_grad(ia)) {
      Array& ga = t.adjoint(ia);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] / bv[k];
    }
    if (t.requires_grad(ib)) {
      Array& gb = t.adjoint(ib);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k] * y[k] / bv[k];
    }
  });
}

Var scale(Var a, double c) {
  return unary(
      a, [c](double x) { return c * x; },
      [c](double, double) { return c; });
}

Var shift(Var a, double c) {
  return unary(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  const std::size_t ia = a.id();
  return a.tape()->record(Array::scalar(total), {ia},
                          [ia](Tape& t, std::size_t s) {
                            const double g = t.adjoint(s)[0];
                            for (double& v : t.adjoint(ia).values()) v += g;
                          });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw ConfigError("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var dot(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "dot");
  double total = 0.0;
  for (std::size_t k = 0; k < a.value().size(); ++k) {
    total += a.value()[k] * b.value()[k];
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(Array::scalar(total), {ia, ib},
                  [ia, ib](Tape& t, std::size_t s) {
                    const double g = t.adjoint(s)[0];
                    const Array& av = t.value(ia);
                    const Array& bv = t.value(ib);
                    if (t.requires_grad(ia)) {
                      Array& ga = t.adjoint(ia);
                      for (std::size_t k = 0; k < av.size(); ++k)
                        ga[k] += g * bv[k];
                    }
                    if (t.requires_grad(ib)) {
                      Array& gb = t.adjoint(ib);
                      for (std::size_t k = 0; k < av.size(); ++k)
                        gb[k] += g * av[k];
                    }
                  });
}

Var tanh_map(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, stable_sigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
  return unary(
      a,
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return stable_sigmoid(x); });
}

Var exp_map(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var log_map(Var a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softmax_stable(Var x) {
  require_nonempty_vector(x.value(), "softmax_stable");
  auto [mx, e] = shifted_exp(x.value());
  double z = 0.0;
  for (double v : e) z += v;
  for (double& v : e) v /= z;
  const std::size_t ix = x.id();
  return x.tape()->record(Array::vector(std::move(e)), {ix},
                          [ix](Tape& t, std::size_t s) {
                            const Array& y = t.value(s);
                            const Array& g = t.adjoint(s);
                            double gy = 0.0;
                            for (std::size_t k = 0; k < y.size(); ++k)
                              gy += g[k] * y[k];
                            Array& gx = t.adjoint(ix);
                            for (std::size_t k = 0; k < y.size(); ++k)
                              gx[k] += y[k] * (g[k] - gy);
                          });
}

Var log_softmax(Var x) {
  require_nonempty_vector(x.value(), "log_softmax");
  const Array& xv = x.value();
  auto [mx, e] = shifted_exp(xv);
  double z = 0.0;
  for (double v : e) z += v;
  const double log_z = std::log(z);
  Array out = xv;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (xv[k] - mx) - log_z;
  const std::size_t ix = x.id();
  return x.tape()->record(std::move(out), {ix}, [ix](Tape& t, std::size_t s) {
    const Array& y = t.value(s);
    const Array& g = t.adjoint(s);
    double gsum = 0.0;
    for (double v : g.values()) gsum += v;
    Array& gx = t.adjoint(ix);
    for (std::size_t k = 0; k < y.size(); ++k) {
      gx[k] += g[k] - std::exp(y[k]) * gsum;
    }
  });
}

Var logsumexp(Var x) {
  require_nonempty_vector(x.value(), "logsumexp");
  const Array& xv = x.value();
  auto [mx, e] = shifted_exp(xv);
  double z = 0.0;
  for (double v : e) z += v;
  const double lse = mx + std::log(z);
  const std::size_t ix = x.id();
  return x.tape()->record(
      Array::scalar(lse), {ix}, [ix](Tape& t, std::size_t s) {
        const double g = t.adjoint(s)[0];
        const double lse = t.value(s)[0];
        const Array& xv = t.value(ix);
        Array& gx = t.adjoint(ix);
        for (std::size_t k = 0; k < xv.size(); ++k) {
          gx[k] += g * std::exp(xv[k] - lse);
        }
      });
}

Selection select_max(Var x) { return select_extreme(x, true, "select_max"); }
Selection select_min(Var x) { return select_extreme(x, false, "select_min"); }

Var affine(Var x, Var W, Var b) {
  Tape& t = common_tape(x, W);
  common_tape(x, b);
  const Array& xv = x.value();
  const Array& Wv = W.value();
  const Array& bv = b.value();
  if (!xv.is_vector() || !Wv.is_matrix() || !bv.is_vector() ||
      Wv.cols() != xv.size() || Wv.rows() != bv.size()) {
    throw ConfigError("affine: shape mismatch x" + shape_string(xv.shape()) +
                      " W" + shape_string(Wv.shape()) + " b" +
                      shape_string(bv.shape()));
  }
  const std::size_t m = Wv.rows(), n = Wv.cols();
  Array out = bv;
  for (std::size_t i = 0; i < m; ++i) {
    double acc = out[i];
    for (std::size_t j = 0; j < n; ++j) acc += Wv.at(i, j) * xv[j];
    out[i] = acc;
  }
  const std::size_t ix = x.id(), iw = W.id(), ib = b.id();
  return t.record(
      std::move(out), {ix, iw, ib}, [ix, iw, ib, m, n](Tape& t, std::size_t s) {
        const Array& g = t.adjoint(s);
        const Array& xv = t.value(ix);
        const Array& Wv = t.value(iw);
        if (t.requires_grad(ix)) {
          Array& gx = t.adjoint(ix);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gx[j] += Wv.at(i, j) * g[i];
        }
        if (t.requires_grad(iw)) {
          Array& gW = t.adjoint(iw);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gW.at(i, j) += g[i] * xv[j];
        }
        if (t.requires_grad(ib)) {
          Array& gb = t.adjoint(ib);
          for (std::size_t i = 0; i < m; ++i) gb[i] += g[i];
        }
      });
}

Var element(Var x, std::size_t i) {
  if (i >= x.value().size()) throw ConfigError("element: index out of range");
  const std::size_t ix = x.id();
  return x.tape()->record(Array::scalar(x.value()[i]), {ix},
                          [ix, i](Tape& t, std::size_t s) {
                            t.adjoint(ix)[i] += t.adjoint(s)[0];
                          });
}

Var gather(Var x, std::span<const std::size_t> indices) {
  const Array& xv = x.value();
  std::vector<double> out(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= xv.size()) throw ConfigError("gather: index out of range");
    out[k] = xv[indices[k]];
  }
  const std::size_t ix = x.id();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return x.tape()->record(Array::vector(std::move(out)), {ix},
                          [ix, idx = std::move(idx)](Tape& t, std::size_t s) {
                            const Array& g = t.adjoint(s);
                            Array& gx = t.adjoint(ix);
                            for (std::size_t k = 0; k < idx.size(); ++k)
                              gx[idx[k]] += g[k];
                          });
}

Var slice(Var x, std::size_t begin, std::size_t end) {
  require_vector(x.value(), "slice");
  if (begin > end || end > x.value().size()) {
    throw ConfigError("slice: range out of bounds");
  }
  const auto& v = x.value().data();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(begin),
                          v.begin() + static_cast<std::ptrdiff_t>(end));
  const std::size_t ix = x.id();
  return x.tape()->record(Array::vector(std::move(out)), {ix},
                          [ix, begin](Tape& t, std::size_t s) {
                            const Array& g = t.adjoint(s);
                            Array& gx = t.adjoint(ix);
                            for (std::size_t k = 0; k < g.size(); ++k)
                              gx[begin + k] += g[k];
                          });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ConfigError("concat: no inputs");
  Tape& t = *parts.front().tape();
  std::vector<double> out;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw ConfigError("operands live on different tapes");
    if (p.value().rank() > 1) throw ConfigError("concat: matrix operand");
    offsets.push_back(out.size());
    ids.push_back(p.id());
    out.insert(out.end(), p.value().values().begin(), p.value().values().end());
  }
  std::vector<std::size_t> parents = ids;
  return t.record(Array::vector(std::move(out)), std::move(parents),
                  [ids, offsets](Tape& t, std::size_t s) {
                    const Array& g = t.adjoint(s);
                    for (std::size_t p = 0; p < ids.size(); ++p) {
                      if (!t.requires_grad(ids[p])) continue;
                      Array& gp = t.adjoint(ids[p]);
                      for (std::size_t k = 0; k < gp.size(); ++k)
                        gp[k] += g[offsets[p] + k];
                    }
                  });
}

Var broadcast(Var scalar, std::size_t n) {
  if (!scalar.value().is_scalar()) throw ConfigError("broadcast: not a scalar");
  const std::size_t is = scalar.id();
  return scalar.tape()->record(
      Array::vector(std::vector<double>(n, scalar.value()[0])), {is},
      [is](Tape& t, std::size_t s) {
        double total = 0.0;
        for (double v : t.adjoint(s).values()) total += v;
        t.adjoint(is)[0] += total;
      });
}

Var mean_of(std::span<const Var> parts) {
  if (parts.empty()) throw ConfigError("mean_of: no inputs");
  Tape& t = *parts.front().tape();
  Array out = Array::zeros_like(parts.front().value());
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw ConfigError("operands live on different tapes");
    require_same_shape(out, p.value(), "mean_of");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += p.value()[k];
    ids.push_back(p.id());
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (double& v : out.values()) v *= inv;
  std::vector<std::size_t> parents = ids;
  return t.record(std::move(out), std::move(parents),
                  [ids, inv](Tape& t, std::size_t s) {
                    const Array& g = t.adjoint(s);
                    for (std::size_t id : ids) {
                      if (!t.requires_grad(id)) continue;
                      Array& gp = t.adjoint(id);
                      for (std::size_t k = 0; k < g.size(); ++k)
                        gp[k] += g[k] * inv;
                    }
                  });
}

}  // namespace rankforge

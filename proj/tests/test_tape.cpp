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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rankforge/errors.hpp"
#include "rankforge/tape.hpp"

using namespace rankforge;
using rankforge::testing::check_var_gradients;

namespace {

Array vec(std::vector<double> v) { return Array::vector(std::move(v)); }

}  // namespace

TEST_CASE("elementwise ops compute values") {
  Tape t;
  Var a = t.constant(vec({1.0, -2.0, 3.0}));
  Var b = t.constant(vec({0.5, 4.0, -1.0}));
  CHECK(add(a, b).value() == vec({1.5, 2.0, 2.0}));
  CHECK(sub(a, b).value() == vec({0.5, -6.0, 4.0}));
  CHECK(mul(a, b).value() == vec({0.5, -8.0, -3.0}));
  CHECK(div(a, b).value() == vec({2.0, -0.5, -3.0}));
  CHECK(scale(a, 2.0).value() == vec({2.0, -4.0, 6.0}));
  CHECK(shift(a, 1.0).value() == vec({2.0, -1.0, 4.0}));
  CHECK(sum(a).value().item() == 2.0);
  CHECK(dot(a, b).value().item() == doctest::Approx(-10.5));
  CHECK(relu(a).value() == vec({1.0, 0.0, 3.0}));
}

TEST_CASE("softmax sums to one and matches exp of log_softmax") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    Var x = t.constant(vec(testing::random_vector(rng, 7, 20.0)));
    const Array s = softmax_stable(x).value();
    const Array ls = log_softmax(x).value();
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      total += s[i];
      CHECK(s[i] > 0.0);
      CHECK(s[i] <= 1.0);
      CHECK(std::fabs(std::exp(ls[i]) - s[i]) <= 1e-12);
    }
    CHECK(std::fabs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("softmax survives large logits") {
  Tape t;
  Var x = t.constant(vec({1000.0, 0.0}));
  const Array s = softmax_stable(x).value();
  CHECK(s.all_finite());
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(logsumexp(x).value().item() == doctest::Approx(1000.0));
}

TEST_CASE("softmax jacobian row by hand") {
  Tape t;
  Var x = t.variable(vec({0.0, 0.0}));
  Var loss = element(softmax_stable(x), 0);
  t.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("product rule accumulates over shared inputs") {
  Tape t;
  Var x = t.variable(Array::scalar(3.0));
  Var y = mul(x, x);
  t.backward(add(y, x));
  CHECK(x.grad().item() == doctest::Approx(7.0));
}

TEST_CASE("select_max and select_min prefer the lowest index on ties") {
  Tape t;
  Var x = t.variable(vec({2.0, 5.0, 5.0, -1.0, -1.0}));
  Selection hi = select_max(x);
  Selection lo = select_min(x);
  CHECK(hi.index == 1);
  CHECK(lo.index == 3);
  t.backward(add(hi.value, scale(lo.value, 2.0)));
  CHECK(x.grad() == vec({0.0, 1.0, 0.0, 2.0, 0.0}));
}

TEST_CASE("backward requires a scalar") {
  Tape t;
  Var x = t.variable(vec({1.0, 2.0}));
  CHECK_THROWS_AS(t.backward(x), ConfigError);
}

TEST_CASE("shape mismatch is a configuration error") {
  Tape t;
  Var a = t.constant(vec({1.0, 2.0}));
  Var b = t.constant(vec({1.0, 2.0, 3.0}));
  CHECK_THROWS_AS(add(a, b), ConfigError);
  CHECK_THROWS_AS(slice(a, 1, 4), ConfigError);
}

TEST_CASE("constants do not receive gradient requirements") {
  Tape t;
  Var c = t.constant(vec({1.0, 2.0}));
  Var v = t.variable(vec({3.0, 4.0}));
  Var out = dot(c, v);
  CHECK_FALSE(t.requires_grad(c.id()));
  CHECK(t.requires_grad(out.id()));
  t.backward(out);
  CHECK(v.grad() == vec({1.0, 2.0}));
}

TEST_CASE("param leaves feed gradients into the store") {
  ParamStore store;
  store.add("w", vec({1.0, -1.0}));
  Tape t;
  Var w = t.param(store, "w");
  CHECK(t.param(store, "w").id() == w.id());
  Var x = t.constant(vec({2.0, 3.0}));
  t.backward(dot(w, x), store);
  CHECK(store.grad("w") == vec({2.0, 3.0}));
  Tape t2;
  t2.backward(dot(t2.param(store, "w"), t2.constant(vec({1.0, 1.0}))), store);
  CHECK(store.grad("w") == vec({3.0, 4.0}));
}

TEST_CASE("unary and reduction ops pass finite differences") {
  Rng rng(11);
  auto x0 = vec(testing::random_vector(rng, 6));
  auto positive = vec({0.3, 1.7, 2.2, 0.9, 4.0, 0.5});
  CHECK(check_var_gradients({x0}, [](Tape&, const std::vector<Var>& v) {
          return sum(tanh_map(v[0]));
        }).max_rel_error < 1e-6);
  CHECK(check_var_gradients({x0}, [](Tape&, const std::vector<Var>& v) {
          return dot(sigmoid(v[0]), softplus(v[0]));
        }).max_rel_error < 1e-6);
  CHECK(check_var_gradients({x0}, [](Tape&, const std::vector<Var>& v) {
          return mean(exp_map(scale(v[0], 0.5)));
        }).max_rel_error < 1e-6);
  CHECK(check_var_gradients({positive}, [](Tape&, const std::vector<Var>& v) {
          return sum(log_map(v[0]));
        }).max_rel_error < 1e-6);
  CHECK(check_var_gradients({x0}, [](Tape&, const std::vector<Var>& v) {
          return logsumexp(v[0]);
        }).max_rel_error < 1e-6);
  CHECK(check_var_gradients({x0}, [](Tape& t, const std::vector<Var>& v) {
          Var w = t.constant(vec({1, -2, 3, 0.5, 0, 1}));
          return dot(log_softmax(v[0]), w);
        }).max_rel_error < 1e-6);
  CHECK(check_var_gradients({x0}, [](Tape& t, const std::vector<Var>& v) {
          Var w = t.constant(vec({1, -2, 3, 0.5, 0, 1}));
          return dot(softmax_stable(v[0]), w);
        }).max_rel_error < 1e-6);
}

TEST_CASE("structural ops pass finite differences") {
  Rng rng(12);
  auto x = vec(testing::random_vector(rng, 5));
  auto y = vec(testing::random_vector(rng, 3));
  auto W = Array::matrix(3, 5, testing::random_vector(rng, 15));
  auto b = vec(testing::random_vector(rng, 3));
  CHECK(check_var_gradients({x, W, b}, [](Tape&, const std::vector<Var>& v) {
          return sum(tanh_map(affine(v[0], v[1], v[2])));
        }).max_rel_error < 1e-6);
  CHECK(check_var_gradients({x, y}, [](Tape&, const std::vector<Var>& v) {
          const std::vector<std::size_t> idx{4, 0, 4};
          Var g = gather(v[0], idx);
          return dot(g, div(v[1], shift(mul(v[1], v[1]), 1.0)));
        }).max_rel_error < 1e-6);
  CHECK(check_var_gradients({x, y}, [](Tape&, const std::vector<Var>& v) {
          std::vector<Var> parts{slice(v[0], 1, 3), element(v[1], 2), v[1]};
          Var c = concat(parts);
          return dot(c, c);
        }).max_rel_error < 1e-6);
  CHECK(check_var_gradients({x, y}, [](Tape&, const std::vector<Var>& v) {
          std::vector<Var> parts{slice(v[0], 0, 3), v[1]};
          Var m = mean_of(parts);
          return dot(m, broadcast(sum(v[1]), 3));
        }).max_rel_error < 1e-6);
}

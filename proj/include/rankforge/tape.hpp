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

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rankforge/array.hpp"
#include "rankforge/param_store.hpp"

namespace rankforge {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid as long as the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Array& value() const;
  // Adjoint accumulated by the last Tape::backward call.
  const Array& grad() const;
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }
  std::size_t size() const { return value().size(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

struct Selection {
  Var value;  // rank-0
  std::size_t index = 0;
};

// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so the
// recording order is already a topological order and backward is a single
// reverse sweep. One tape per training example.
class Tape {
 public:
  // Called with the tape and the id of the node whose adjoint is complete;
  // accumulates into the adjoints of that node's parents.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  // Differentiable leaf that is not tied to a ParamStore.
  Var variable(Array value);
  // Leaf bound to `store[name]`. Repeated calls return the same node.
  Var param(const ParamStore& store, const std::string& name);

  Var record(Array value, std::vector<std::size_t> parents, BackwardFn fn);

  // Reverse sweep from a rank-0 node; leaves adjoints on every node.
  void backward(Var loss);
  // As above, then adds each bound parameter's adjoint into store gradients.
  void backward(Var loss, ParamStore& store);

  const Array& value(std::size_t id) const { return nodes_[id].value; }
  const Array& adjoint(std::size_t id) const { return nodes_[id].adjoint; }
  Array& adjoint(std::size_t id) { return nodes_[id].adjoint; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Array value;
    Array adjoint;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  // A deque never relocates existing nodes as the tape grows.
  std::deque<Node> nodes_;
  std::unordered_map<std::string, std::size_t> param_nodes_;
};

// Elementwise and reduction ops. Binary elementwise ops require equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double c);
Var shift(Var a, double c);
Var sum(Var a);
Var mean(Var a);
Var dot(Var a, Var b);

Var tanh_map(Var a);
Var sigmoid(Var a);
// log(1 + exp(a)), stable for large |a|.
Var softplus(Var a);
Var exp_map(Var a);
Var log_map(Var a);
// max(0, a) with zero subgradient at the kink.
Var relu(Var a);

Var softmax_stable(Var x);
Var log_softmax(Var x);
Var logsumexp(Var x);

// Maximum / minimum element of a vector; ties resolve to the lowest index.
// The full output adjoint is routed to the selected element.
Selection select_max(Var x);
Selection select_min(Var x);

// W * x + b for x[n], W[m x n], b[m].
Var affine(Var x, Var W, Var b);

Var element(Var x, std::size_t i);
Var gather(Var x, std::span<const std::size_t> indices);
Var slice(Var x, std::size_t begin, std::size_t end);
// Concatenate scalars and vectors into one vector.
Var concat(std::span<const Var> parts);
Var broadcast(Var scalar, std::size_t n);
// Elementwise mean of equally shaped nodes.
Var mean_of(std::span<const Var> parts);

}  // namespace rankforge

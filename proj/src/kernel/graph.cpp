/*
 Copyright 2026 The octrans Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "octrans/kernel/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

namespace octrans::kernel {

namespace {

std::uint64_t key_bits(double c) { return std::bit_cast<std::uint64_t>(c); }

}  // namespace

int Graph::intern(Node n) {
  auto key = std::make_tuple(static_cast<int>(n.op), n.a, n.b, key_bits(n.c));
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(n);
  memo_.emplace(key, id);
  return id;
}

int Graph::cnst(double v) { return intern(Node{Op::cnst, -1, -1, v}); }

int Graph::input(InputAddress addr, std::string label) {
  for (size_t i = 0; i < inputs_.size(); ++i)
    if (inputs_[i] == addr) return intern(Node{Op::input, static_cast<std::int32_t>(i), -1, 0.0});
  inputs_.push_back(addr);
  input_labels_.push_back(std::move(label));
  return intern(Node{Op::input, static_cast<std::int32_t>(inputs_.size() - 1), -1, 0.0});
}

int Graph::index(double offset) { return intern(Node{Op::index, -1, -1, offset}); }

int Graph::add(int a, int b) {
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  if (node(a).op == Op::cnst && node(b).op == Op::cnst) return cnst(node(a).c + node(b).c);
  return intern(Node{Op::add, a, b, 0.0});
}

int Graph::sub(int a, int b) {
  if (is_zero(b)) return a;
  if (is_zero(a)) return neg(b);
  if (node(a).op == Op::cnst && node(b).op == Op::cnst) return cnst(node(a).c - node(b).c);
  if (a == b) return cnst(0.0);
  return intern(Node{Op::sub, a, b, 0.0});
}

int Graph::mul(int a, int b) {
  if (is_zero(a) || is_zero(b)) return cnst(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (node(a).op == Op::cnst && node(b).op == Op::cnst) return cnst(node(a).c * node(b).c);
  return intern(Node{Op::mul, a, b, 0.0});
}

int Graph::div(int a, int b) {
  if (is_zero(a)) return cnst(0.0);
  if (is_const(b, 1.0)) return a;
  if (node(a).op == Op::cnst && node(b).op == Op::cnst && node(b).c != 0.0) return cnst(node(a).c / node(b).c);
  return intern(Node{Op::div, a, b, 0.0});
}

int Graph::neg(int a) {
  if (node(a).op == Op::cnst) return cnst(-node(a).c);
  if (node(a).op == Op::neg) return node(a).a;
  return intern(Node{Op::neg, a, -1, 0.0});
}

int Graph::pow(int a, double c) {
  if (c == 0.0) return cnst(1.0);
  if (c == 1.0) return a;
  if (node(a).op == Op::cnst) return cnst(std::pow(node(a).c, c));
  return intern(Node{Op::pow, a, -1, c});
}

int Graph::unary(Op op, int a) {
  if (node(a).op == Op::cnst) {
    double x = node(a).c;
    switch (op) {
      case Op::sin: return cnst(std::sin(x));
      case Op::cos: return cnst(std::cos(x));
      case Op::tan: return cnst(std::tan(x));
      case Op::exp: return cnst(std::exp(x));
      case Op::log: return cnst(std::log(x));
      case Op::sqrt: return cnst(std::sqrt(x));
      default: break;
    }
  }
  return intern(Node{op, a, -1, 0.0});
}

std::string Graph::to_prefix(int n) const {
  const Node& nd = node(n);
  auto bin = [&](const char* name) {
    return std::string("(") + name + " " + to_prefix(nd.a) + " " + to_prefix(nd.b) + ")";
  };
  auto un = [&](const char* name) { return std::string("(") + name + " " + to_prefix(nd.a) + ")"; };
  switch (nd.op) {
    case Op::cnst: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", nd.c);
      return buf;
    }
    case Op::input: {
      const std::string& lbl = input_labels_[static_cast<size_t>(nd.a)];
      return lbl.empty() ? "(in " + std::to_string(nd.a) + ")" : lbl;
    }
    case Op::index: return nd.c == 0.0 ? "i" : "(+ i " + std::to_string(static_cast<int>(nd.c)) + ")";
    case Op::add: return bin("+");
    case Op::sub: return bin("-");
    case Op::mul: return bin("*");
    case Op::div: return bin("/");
    case Op::neg: return un("neg");
    case Op::sin: return un("sin");
    case Op::cos: return un("cos");
    case Op::tan: return un("tan");
    case Op::exp: return un("exp");
    case Op::log: return un("log");
    case Op::sqrt: return un("sqrt");
    case Op::pow: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", nd.c);
      return "(^ " + to_prefix(nd.a) + " " + buf + ")";
    }
  }
  return "?";
}

namespace {

/// Symbolic d(node)/d(input j) on a scratch copy of the graph.
class SymbolicDiff {
 public:
  explicit SymbolicDiff(Graph& g) : g_(g) {}

  int diff(int n, int j) {
    auto key = std::make_pair(n, j);
    auto it = memo_.find(key_of(key));
    if (it != memo_.end()) return it->second;
    int r = compute(n, j);
    memo_.emplace(key_of(key), r);
    return r;
  }

 private:
  static std::uint64_t key_of(std::pair<int, int> k) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.first)) << 32) |
           static_cast<std::uint32_t>(k.second);
  }

  int compute(int n, int j) {
    const Node nd = g_.node(n);  // copy: g_ may reallocate while we build
    switch (nd.op) {
      case Op::cnst:
      case Op::index: return g_.cnst(0.0);
      case Op::input: return g_.cnst(nd.a == j ? 1.0 : 0.0);
      case Op::add: return g_.add(diff(nd.a, j), diff(nd.b, j));
      case Op::sub: return g_.sub(diff(nd.a, j), diff(nd.b, j));
      case Op::neg: return g_.neg(diff(nd.a, j));
      case Op::mul: return g_.add(g_.mul(diff(nd.a, j), nd.b), g_.mul(nd.a, diff(nd.b, j)));
      case Op::div:
        return g_.div(g_.sub(g_.mul(diff(nd.a, j), nd.b), g_.mul(nd.a, diff(nd.b, j))),
                      g_.mul(nd.b, nd.b));
      case Op::pow:
        return g_.mul(g_.mul(g_.cnst(nd.c), g_.pow(nd.a, nd.c - 1.0)), diff(nd.a, j));
      case Op::sin: return g_.mul(g_.unary(Op::cos, nd.a), diff(nd.a, j));
      case Op::cos: return g_.neg(g_.mul(g_.unary(Op::sin, nd.a), diff(nd.a, j)));
      case Op::tan: {
        int t = g_.unary(Op::tan, nd.a);
        return g_.mul(g_.add(g_.cnst(1.0), g_.mul(t, t)), diff(nd.a, j));
      }
      case Op::exp: return g_.mul(g_.unary(Op::exp, nd.a), diff(nd.a, j));
      case Op::log: return g_.div(diff(nd.a, j), nd.a);
      case Op::sqrt: return g_.div(diff(nd.a, j), g_.mul(g_.cnst(2.0), g_.unary(Op::sqrt, nd.a)));
    }
    return g_.cnst(0.0);
  }

  Graph& g_;
  std::unordered_map<std::uint64_t, int> memo_;
};

}  // namespace

Pattern detect_pattern(const Kernel& k) {
  Pattern p;
  p.out_dim = k.out_dim();
  p.n_inputs = k.graph.n_inputs();

  Graph scratch = k.graph;  // differentiate on a copy
  SymbolicDiff d(scratch);

  std::vector<std::vector<int>> row_grad(k.roots.size());
  for (size_t r = 0; r < k.roots.size(); ++r) {
    row_grad[r].assign(static_cast<size_t>(p.n_inputs), -1);
    for (int j = 0; j < p.n_inputs; ++j) {
      int dj = d.diff(k.roots[r], j);
      row_grad[r][static_cast<size_t>(j)] = dj;
      if (!scratch.is_zero(dj)) p.jac.emplace_back(static_cast<int>(r), j);
    }
  }
  std::sort(p.jac.begin(), p.jac.end());

  // Hessian pattern: union over rows of structurally nonzero d2/didj, i >= j.
  std::vector<std::pair<int, int>> pairs;
  for (size_t r = 0; r < k.roots.size(); ++r) {
    for (int j = 0; j < p.n_inputs; ++j) {
      int dj = row_grad[r][static_cast<size_t>(j)];
      if (scratch.is_zero(dj)) continue;
      for (int i = j; i < p.n_inputs; ++i) {
        int dij = d.diff(dj, i);
        if (!scratch.is_zero(dij)) pairs.emplace_back(i, j);
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](auto& x, auto& y) {
    return x.second != y.second ? x.second < y.second : x.first < y.first;
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  p.hess = std::move(pairs);

  p.hess_dir_ptr.assign(static_cast<size_t>(p.n_inputs) + 1, 0);
  for (const auto& [i, j] : p.hess) p.hess_dir_ptr[static_cast<size_t>(j) + 1]++;
  for (int j = 0; j < p.n_inputs; ++j)
    p.hess_dir_ptr[static_cast<size_t>(j) + 1] += p.hess_dir_ptr[static_cast<size_t>(j)];
  return p;
}

}  // namespace octrans::kernel

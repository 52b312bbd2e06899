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

#ifndef OCTRANS_KERNEL_GRAPH_HPP_
#define OCTRANS_KERNEL_GRAPH_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace octrans::kernel {

using Index = std::int64_t;

/** Addressing of one scalar kernel input into the flat decision vector.
 *
 * slot(i) = base + stride * i for grid index i. A stride of zero addresses an
 * absolute slot (free variables, endpoint states); nonzero strides address
 * per-node slabs, with node offsets folded into `base`.
 */
struct InputAddress {
  Index base = 0;
  Index stride = 0;

  Index slot(Index i) const { return base + stride * i; }
  bool operator==(const InputAddress& o) const { return base == o.base && stride == o.stride; }
};

enum class Op : std::uint8_t {
  cnst,
  input,  // a = input ordinal
  index,  // grid index plus constant offset c (used for the time value)
  add,
  sub,
  mul,
  div,
  neg,
  sin,
  cos,
  tan,
  exp,
  log,
  sqrt,
  pow,  // a ^ c with constant exponent c
};

struct Node {
  Op op = Op::cnst;
  std::int32_t a = -1;
  std::int32_t b = -1;
  double c = 0.0;
};

/** Hash-consed scalar expression DAG evaluated at one grid index.
 *
 * Construction order is topological by design (operands precede parents).
 * Literal-zero/one folding happens here so that symbolic differentiation
 * yields exact structural sparsity: a derivative that folds to the literal
 * constant 0 is a structural zero.
 */
class Graph {
 public:
  int cnst(double v);
  int input(InputAddress addr, std::string label = "");
  int index(double offset);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int div(int a, int b);
  int neg(int a);
  int pow(int a, double c);
  int unary(Op op, int a);  // sin..sqrt

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
  int n_inputs() const { return static_cast<int>(inputs_.size()); }
  const std::vector<InputAddress>& inputs() const { return inputs_; }
  const std::vector<std::string>& input_labels() const { return input_labels_; }

  bool is_zero(int n) const { return node(n).op == Op::cnst && node(n).c == 0.0; }
  bool is_const(int n, double v) const { return node(n).op == Op::cnst && node(n).c == v; }

  /// Prefix-notation dump of the subtree rooted at n (for debug output).
  std::string to_prefix(int n) const;

 private:
  int intern(Node n);

  std::vector<Node> nodes_;
  std::vector<InputAddress> inputs_;
  std::vector<std::string> input_labels_;
  std::map<std::tuple<int, int, int, std::uint64_t>, int> memo_;
};

/// A multi-output kernel: shared graph plus one root per output row.
struct Kernel {
  Graph graph;
  std::vector<int> roots;

  int out_dim() const { return static_cast<int>(roots.size()); }
};

/** Index-invariant derivative stencil of a kernel.
 *
 * `jac` holds (row, input ordinal) pairs sorted by row then input; `hess`
 * holds unordered input pairs stored as (i, j) with i >= j, sorted by j then
 * i, with `hess_dir_ptr` delimiting the entries of each direction j. The
 * Hessian pattern is the union over all output rows.
 */
struct Pattern {
  int out_dim = 0;
  int n_inputs = 0;
  std::vector<std::pair<int, int>> jac;
  std::vector<std::pair<int, int>> hess;
  std::vector<int> hess_dir_ptr;
};

/// Exact structural sparsity by symbolic differentiation of the graph.
Pattern detect_pattern(const Kernel& k);

}  // namespace octrans::kernel

#endif  // OCTRANS_KERNEL_GRAPH_HPP_

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leo/rng.hpp"
#include "leo/tensor.hpp"

namespace leo::num {

enum class ParamGroup { encoder, selector, classifier };

std::string_view group_name(ParamGroup g);

struct Parameter {
  std::string name;
  ParamGroup group;
  Tensor value;
  Tensor grad;
  bool grad_ready = false;
  // Rows that never move (the PAD embedding row). Their gradient is forced to
  // zero and the optimizer skips them.
  std::vector<std::size_t> pinned_rows;
};

// Named parameters in insertion order. Insertion order is part of the
// serialized model, so it must be deterministic.
class ParameterStore {
 public:
  std::size_t add(std::string name, ParamGroup group, Tensor init);

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  Parameter& get(std::string_view name) { return params_[index_of(name)]; }
  const Parameter& get(std::string_view name) const { return params_[index_of(name)]; }
  Parameter& at(std::size_t i) { return params_.at(i); }
  const Parameter& at(std::size_t i) const { return params_.at(i); }

  std::size_t size() const noexcept { return params_.size(); }
  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

  void zero_grads();
  std::size_t total_elements() const;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct Var {
  static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::size_t id = none;
  bool valid() const noexcept { return id != none; }
};

/// Contiguous run of rows [offset, offset + length) inside a ragged batch.
struct Segment {
  std::size_t offset = 0;
  std::size_t length = 0;
};
using Segments = std::vector<Segment>;

/// Window segments produced by conv1d over `segs` with kernel width `kernel`
/// (each input segment is right-padded with zeros to at least `kernel` rows).
Segments conv_output_segments(const Segments& segs, std::size_t kernel);

// Define-by-run reverse-mode graph. Every op evaluates eagerly, checks its
// output for NaN/Inf and, when gradients are enabled, records a backward
// closure. Nodes are stored in creation order, which is a topological order.
class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  Var constant(Tensor t, std::string name = "constant");
  Var param(ParameterStore& store, std::string_view name);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }

  /// Reverse pass from a scalar loss. Overwrites the gradient of every
  /// parameter in each store this graph touched; parameters the loss does not
  /// reach get an exact zero.
  void backward(Var loss);

  // Linear algebra.
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add_bias(Var a, Var bias);

  // Elementwise. `mul` also broadcasts an (n x 1) column or a scalar on the right.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var log(Var a);
  Var exp(Var a);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);

  /// Row-wise softmax.
  Var softmax(Var a);

  /// 1-D convolution over ragged sequences. x: (rows x d_in), kernel:
  /// (k x d_in x filters), bias: (filters). Output rows follow
  /// conv_output_segments(segs, k).
  Var conv1d(Var x, Var kernel, Var bias, const Segments& segs);
  /// Max over time inside each segment; one output row per segment.
  Var segment_max(Var x, const Segments& segs);
  /// Max over all rows (a single full-width window).
  Var maxpool1d(Var x);

  /// Inverted dropout: train mode keeps each element with probability
  /// `retain` and scales it by 1/retain; eval mode is the identity.
  Var dropout(Var x, double retain, Rng& rng, bool train);

  Var concat(std::span<const Var> parts, int axis);
  /// Mean of the rows: (n x m) -> (1 x m).
  Var row_mean(Var x);
  Var sum(Var x);
  Var mean(Var x);
  Var reshape(Var x, Shape shape);

  /// Row lookup into an embedding table; id 0 (PAD) yields a zero row and no gradient.
  Var embedding(Var table, std::span<const int> ids);
  /// out[dest[i]] = x[i], all other rows zero.
  Var scatter_rows(Var x, std::span<const std::size_t> dest, std::size_t total_rows);
  Var gather_rows(Var x, std::span<const std::size_t> rows);

  /// Binary-Concrete sample z = sigmoid((logit(p) + noise) / nu), with
  /// noise = a - b the difference of two Gumbel draws.
  Var relaxed_bernoulli(Var p, const Tensor& noise, double nu);
  /// Per-row -log probs[row, label], probabilities clamped to [1e-12, 1].
  Var cross_entropy(Var probs, std::span<const int> labels);
  /// Rows scaled to unit L2 norm; rows with norm < 1e-12 map to zero.
  Var l2_normalize_rows(Var x);
  /// Row-wise log-softmax restricted to entries where mask != 0; other
  /// entries are 0 in the output.
  Var masked_log_softmax(Var x, const Tensor& mask);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> backward;
    std::string op;
    bool requires_grad = false;
    ParameterStore* store = nullptr;
    std::size_t param_index = 0;
  };

  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  Tensor& g(Var v) { return nodes_[v.id].grad; }
  const Tensor& val(Var v) const { return nodes_[v.id].value; }
  Var push(Tensor value, std::string op, bool requires_grad);
  void set_backward(Var out, std::function<void()> fn);

  bool grad_enabled_;
  std::deque<Node> nodes_;  // deque: references returned by value() survive later pushes
  std::set<ParameterStore*> stores_;
};

}  // namespace leo::num

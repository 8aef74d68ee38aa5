#pragma once

// Reverse-mode differentiation over dense matrices, restricted to the
// operations the graph networks use. A Tape records values in forward order;
// backward() walks it once in reverse, accumulating gradients.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdgnn/graph.hpp"
#include "cdgnn/matrix.hpp"

namespace cdgnn::nn {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Handle to a tape entry.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

template <class T>
class Tape {
 public:
  /// Backward rule: receives the op's output value and gradient and
  /// accumulates into the parents through Tape::accumulate.
  using Backward =
      std::function<void(Tape&, const Matrix<T>& out_value, const Matrix<T>& out_grad)>;

  /// Value with no gradient.
  Var constant(Matrix<T> value);
  /// Leaf whose gradient is added into *grad on backward.
  Var parameter(const Matrix<T>& value, Matrix<T>* grad);

  const Matrix<T>& value(Var v) const { return nodes_.at(v.id).value; }
  /// Accumulated gradient; empty before backward or for non-differentiable nodes.
  const Matrix<T>& grad(Var v) const { return nodes_.at(v.id).grad; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Records an arbitrary op. `parents` decide whether the result needs a
  /// gradient; `backward` may be empty for constants.
  Var record(Matrix<T> value, std::initializer_list<Var> parents, Backward backward);
  Var record(Matrix<T> value, std::span<const Var> parents, Backward backward);

  /// g(v) += delta. No-op for nodes that do not require a gradient.
  void accumulate(Var v, const Matrix<T>& delta);

  /// Seeds the 1 x 1 `loss` with gradient 1 and runs every backward rule in
  /// reverse recording order.
  void backward(Var loss);

  // Dense algebra
  Var linear(Var x, Var w);  // X W^T, W is d_out x d_in
  Var add(Var a, Var b);
  Var add_n(std::span<const Var> xs);
  Var scale(Var x, T s);
  Var scale_by(Var x, Var s);  // s is 1 x 1
  Var relu(Var x);
  Var concat_cols(std::span<const Var> xs);
  Var slice_cols(Var x, std::size_t begin, std::size_t end);
  Var mul_cols(Var x, Var gamma);  // x(i,c) * gamma(0,c)
  Var add_row(Var x, Var beta);    // x(i,c) + beta(0,c)

  // Graph operators (all symmetric except the incidence pair)
  Var adjacency(const SparseGraph& g, Var x);
  Var degree(const SparseGraph& g, Var x);
  Var broadcast(Var x);
  Var incidence(const EdgeIncidence& p, Var y);            // P Y
  Var incidence_transpose(const EdgeIncidence& p, Var x);  // P^T X

  /// Per-column standardization over rows, (x - mean) / sqrt(var + eps),
  /// population variance.
  Var batch_norm(Var x, T eps = T(1e-5));

  Var softmax_rows(Var x);
  Var log_softmax_rows(Var x);
  /// -sum_i logp(i, label[i]) as a 1 x 1 value.
  Var nll(Var logp, std::span<const std::int32_t> labels);
  Var sum(Var x);

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    Backward backward;
    Matrix<T>* param_grad = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

/// Named parameter matrices in insertion order, each with a gradient buffer.
template <class T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Matrix<T> value;
    Matrix<T> grad;
    bool frozen = false;
  };

  Matrix<T>& add(const std::string& name, std::size_t rows, std::size_t cols);
  Matrix<T>& add(const std::string& name, Matrix<T> value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;
  Matrix<T>& value(const std::string& name) { return entry(name).value; }
  const Matrix<T>& value(const std::string& name) const { return entry(name).value; }

  /// Tape leaf bound to this parameter's gradient buffer (a constant when frozen).
  Var bind(Tape<T>& tape, const std::string& name);

  void zero_grad();
  std::size_t parameter_count() const;
  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& e : entries_) {
      out.add(e.name, e.value.template cast<U>());
      out.entry(e.name).frozen = e.frozen;
    }
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

struct AdamaxConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// m <- b1 m + (1 - b1) g;  u <- max(b2 u, |g|);  theta -= lr / (1 - b1^t) * m / (u + eps).
template <class T>
class Adamax {
 public:
  explicit Adamax(AdamaxConfig cfg = {}) : cfg_(cfg) {}

  /// Applies one update from the stored gradients. Throws NumericError,
  /// leaving parameters and state untouched, if any gradient is not finite.
  void step(ParamStore<T>& params);

  std::size_t steps() const noexcept { return t_; }
  const Matrix<T>& first_moment(const std::string& name) const { return m_.at(name); }
  const Matrix<T>& inf_norm(const std::string& name) const { return u_.at(name); }

 private:
  AdamaxConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, Matrix<T>> m_, u_;
};

/// Binary checkpoint: "CDGNNCKP", u32 version, u32 header length, header
/// text (JSON), u32 array count, then per array: u32 name length, name,
/// u64 rows, u64 cols, rows*cols float32 little-endian values.
struct Checkpoint {
  std::string header;  // architecture description, JSON
  ParamStore<float> params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckp);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cdgnn::nn

#include <algorithm>
#include <cmath>

#include "cdgnn/kernels.hpp"
#include "cdgnn/nn.hpp"

namespace cdgnn::nn {
namespace {

template <class T>
void require(bool ok, const char* what, const Matrix<T>& a, const Matrix<T>& b) {
  if (!ok)
    throw ShapeError(std::string(what) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
}

}  // namespace

template <class T>
Var Tape<T>::constant(Matrix<T> value) {
  nodes_.push_back({std::move(value), {}, {}, nullptr, false});
  return {nodes_.size() - 1};
}

template <class T>
Var Tape<T>::parameter(const Matrix<T>& value, Matrix<T>* grad) {
  if (grad && !grad->same_shape(value)) throw ShapeError("Tape::parameter: gradient shape");
  nodes_.push_back({value, {}, {}, grad, grad != nullptr});
  return {nodes_.size() - 1};
}

template <class T>
Var Tape<T>::record(Matrix<T> value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_.at(p.id).requires_grad;
  nodes_.push_back({std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return {nodes_.size() - 1};
}

template <class T>
Var Tape<T>::record(Matrix<T> value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

template <class T>
void Tape<T>::accumulate(Var v, const Matrix<T>& delta) {
  Node& n = nodes_.at(v.id);
  if (!n.requires_grad) return;
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix<T>(n.value.rows(), n.value.cols());
  require(n.grad.same_shape(delta), "Tape::accumulate", n.grad, delta);
  kernels::active<T>().axpy(T(1), delta.data(), n.grad.data(), delta.size());
}

template <class T>
void Tape<T>::backward(Var loss) {
  Node& l = nodes_.at(loss.id);
  if (l.value.rows() != 1 || l.value.cols() != 1) throw ShapeError("Tape::backward: loss must be 1x1");
  for (auto& n : nodes_) n.grad = Matrix<T>();
  if (!l.requires_grad) return;
  l.grad = Matrix<T>(1, 1, T(1));
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, nodes_[i].value, nodes_[i].grad);
    if (n.param_grad)
      kernels::active<T>().axpy(T(1), n.grad.data(), n.param_grad->data(), n.grad.size());
  }
}

template <class T>
Var Tape<T>::linear(Var x, Var w) {
  const Matrix<T>& xv = value(x);
  const Matrix<T>& wv = value(w);
  require(xv.cols() == wv.cols(), "linear", xv, wv);
  Matrix<T> y(xv.rows(), wv.rows());
  kernels::active<T>().gemm_nt(xv.data(), wv.data(), y.data(), xv.rows(), xv.cols(), wv.rows(), false);
  return record(std::move(y), {x, w}, [x, w](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    const auto& k = kernels::active<T>();
    const Matrix<T>& xv = t.value(x);
    const Matrix<T>& wv = t.value(w);
    if (t.requires_grad(x)) {
      Matrix<T> gx(xv.rows(), xv.cols());
      k.gemm_nn(g.data(), wv.data(), gx.data(), g.rows(), g.cols(), wv.cols(), false);
      t.accumulate(x, gx);
    }
    if (t.requires_grad(w)) {
      Matrix<T> gw(wv.rows(), wv.cols());
      k.gemm_tn(g.data(), xv.data(), gw.data(), g.rows(), g.cols(), xv.cols(), false);
      t.accumulate(w, gw);
    }
  });
}

template <class T>
Var Tape<T>::add(Var a, Var b) {
  const Var xs[2] = {a, b};
  return add_n(xs);
}

template <class T>
Var Tape<T>::add_n(std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("add_n: no operands");
  Matrix<T> y = value(xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const Matrix<T>& v = value(xs[i]);
    require(v.same_shape(y), "add", y, v);
    kernels::active<T>().axpy(T(1), v.data(), y.data(), v.size());
  }
  std::vector<Var> parents(xs.begin(), xs.end());
  return record(std::move(y), parents, [parents](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    for (Var p : parents) t.accumulate(p, g);
  });
}

template <class T>
Var Tape<T>::scale(Var x, T s) {
  Matrix<T> y = value(x);
  for (T& v : y.values()) v *= s;
  return record(std::move(y), {x}, [x, s](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    Matrix<T> gx = g;
    for (T& v : gx.values()) v *= s;
    t.accumulate(x, gx);
  });
}

template <class T>
Var Tape<T>::scale_by(Var x, Var s) {
  const Matrix<T>& sv = value(s);
  require(sv.rows() == 1 && sv.cols() == 1, "scale_by", value(x), sv);
  Matrix<T> y = value(x);
  for (T& v : y.values()) v *= sv(0, 0);
  return record(std::move(y), {x, s}, [x, s](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    const Matrix<T>& xv = t.value(x);
    const T sv = t.value(s)(0, 0);
    Matrix<T> gx = g;
    T gs = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx.data()[i] *= sv;
      gs += g.data()[i] * xv.data()[i];
    }
    t.accumulate(x, gx);
    t.accumulate(s, Matrix<T>(1, 1, gs));
  });
}

template <class T>
Var Tape<T>::relu(Var x) {
  Matrix<T> y = value(x);
  for (T& v : y.values()) v = v > T(0) ? v : T(0);
  return record(std::move(y), {x}, [x](Tape& t, const Matrix<T>& out, const Matrix<T>& g) {
    Matrix<T> gx(g.rows(), g.cols());
    // subgradient 0 at the kink
    for (std::size_t i = 0; i < g.size(); ++i) gx.data()[i] = out.data()[i] > T(0) ? g.data()[i] : T(0);
    t.accumulate(x, gx);
  });
}

template <class T>
Var Tape<T>::concat_cols(std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t rows = value(xs[0]).rows();
  std::vector<std::size_t> offs{0};
  for (Var v : xs) {
    require(value(v).rows() == rows, "concat_cols", value(xs[0]), value(v));
    offs.push_back(offs.back() + value(v).cols());
  }
  Matrix<T> y(rows, offs.back());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const Matrix<T>& v = value(xs[j]);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(&v(r, 0), v.cols(), &y(r, offs[j]));
  }
  std::vector<Var> parents(xs.begin(), xs.end());
  return record(std::move(y), parents, [parents, offs](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    for (std::size_t j = 0; j < parents.size(); ++j) {
      if (!t.requires_grad(parents[j])) continue;
      const std::size_t w = offs[j + 1] - offs[j];
      Matrix<T> gj(g.rows(), w);
      for (std::size_t r = 0; r < g.rows(); ++r) std::copy_n(&g(r, offs[j]), w, &gj(r, 0));
      t.accumulate(parents[j], gj);
    }
  });
}

template <class T>
Var Tape<T>::slice_cols(Var x, std::size_t begin, std::size_t end) {
  const Matrix<T>& v = value(x);
  if (begin > end || end > v.cols()) throw ShapeError("slice_cols: range outside matrix");
  Matrix<T> y(v.rows(), end - begin);
  for (std::size_t r = 0; r < v.rows(); ++r) std::copy_n(&v(r, begin), end - begin, &y(r, 0));
  const std::size_t cols = v.cols();
  return record(std::move(y), {x}, [x, begin, cols](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    Matrix<T> gx(g.rows(), cols);
    for (std::size_t r = 0; r < g.rows(); ++r) std::copy_n(&g(r, 0), g.cols(), &gx(r, begin));
    t.accumulate(x, gx);
  });
}

template <class T>
Var Tape<T>::mul_cols(Var x, Var gamma) {
  const Matrix<T>& xv = value(x);
  const Matrix<T>& gv = value(gamma);
  require(gv.rows() == 1 && gv.cols() == xv.cols(), "mul_cols", xv, gv);
  Matrix<T> y = xv;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) *= gv(0, c);
  return record(std::move(y), {x, gamma}, [x, gamma](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    const Matrix<T>& xv = t.value(x);
    const Matrix<T>& gv = t.value(gamma);
    Matrix<T> gx(g.rows(), g.cols()), gg(1, g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) {
        gx(r, c) = g(r, c) * gv(0, c);
        gg(0, c) += g(r, c) * xv(r, c);
      }
    t.accumulate(x, gx);
    t.accumulate(gamma, gg);
  });
}

template <class T>
Var Tape<T>::add_row(Var x, Var beta) {
  const Matrix<T>& xv = value(x);
  const Matrix<T>& bv = value(beta);
  require(bv.rows() == 1 && bv.cols() == xv.cols(), "add_row", xv, bv);
  Matrix<T> y = xv;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += bv(0, c);
  return record(std::move(y), {x, beta}, [x, beta](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    Matrix<T> gb(1, g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
    t.accumulate(x, g);
    t.accumulate(beta, gb);
  });
}

template <class T>
Var Tape<T>::adjacency(const SparseGraph& g, Var x) {
  Matrix<T> y = adjacency_apply(g, value(x));
  const SparseGraph* gp = &g;
  return record(std::move(y), {x}, [x, gp](Tape& t, const Matrix<T>&, const Matrix<T>& gr) {
    t.accumulate(x, adjacency_apply(*gp, gr));
  });
}

template <class T>
Var Tape<T>::degree(const SparseGraph& g, Var x) {
  Matrix<T> y = degree_apply(g, value(x));
  const SparseGraph* gp = &g;
  return record(std::move(y), {x}, [x, gp](Tape& t, const Matrix<T>&, const Matrix<T>& gr) {
    t.accumulate(x, degree_apply(*gp, gr));
  });
}

template <class T>
Var Tape<T>::broadcast(Var x) {
  Matrix<T> y = broadcast_apply(value(x));
  return record(std::move(y), {x}, [x](Tape& t, const Matrix<T>&, const Matrix<T>& gr) {
    t.accumulate(x, broadcast_apply(gr));
  });
}

template <class T>
Var Tape<T>::incidence(const EdgeIncidence& p, Var y) {
  Matrix<T> out = p.apply(value(y));
  const EdgeIncidence* pp = &p;
  return record(std::move(out), {y}, [y, pp](Tape& t, const Matrix<T>&, const Matrix<T>& gr) {
    t.accumulate(y, pp->apply_transpose(gr));
  });
}

template <class T>
Var Tape<T>::incidence_transpose(const EdgeIncidence& p, Var x) {
  Matrix<T> out = p.apply_transpose(value(x));
  const EdgeIncidence* pp = &p;
  return record(std::move(out), {x}, [x, pp](Tape& t, const Matrix<T>&, const Matrix<T>& gr) {
    t.accumulate(x, pp->apply(gr));
  });
}

template <class T>
Var Tape<T>::batch_norm(Var x, T eps) {
  const Matrix<T>& v = value(x);
  const std::size_t n = v.rows(), d = v.cols();
  if (n < 2) throw ShapeError("batch_norm: needs at least 2 rows");
  std::vector<T> inv_std(d);
  Matrix<T> y(n, d);
  for (std::size_t c = 0; c < d; ++c) {
    // two-pass moments in double for stability in float mode
    double mean = 0;
    for (std::size_t r = 0; r < n; ++r) mean += static_cast<double>(v(r, c));
    mean /= static_cast<double>(n);
    double var = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dv = static_cast<double>(v(r, c)) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + static_cast<double>(eps));
    inv_std[c] = static_cast<T>(is);
    for (std::size_t r = 0; r < n; ++r) y(r, c) = static_cast<T>((static_cast<double>(v(r, c)) - mean) * is);
  }
  return record(std::move(y), {x}, [x, inv_std](Tape& t, const Matrix<T>& out, const Matrix<T>& g) {
    const std::size_t n = g.rows(), d = g.cols();
    Matrix<T> gx(n, d);
    for (std::size_t c = 0; c < d; ++c) {
      double mg = 0, mgy = 0;
      for (std::size_t r = 0; r < n; ++r) {
        mg += static_cast<double>(g(r, c));
        mgy += static_cast<double>(g(r, c)) * static_cast<double>(out(r, c));
      }
      mg /= static_cast<double>(n);
      mgy /= static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r)
        gx(r, c) = static_cast<T>(static_cast<double>(inv_std[c]) *
                                  (static_cast<double>(g(r, c)) - mg - static_cast<double>(out(r, c)) * mgy));
    }
    t.accumulate(x, gx);
  });
}

template <class T>
Var Tape<T>::softmax_rows(Var x) {
  Matrix<T> y = value(x);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    const T top = *std::max_element(row.begin(), row.end());
    T z = 0;
    for (T& v : row) z += v = std::exp(v - top);
    for (T& v : row) v /= z;
  }
  return record(std::move(y), {x}, [x](Tape& t, const Matrix<T>& out, const Matrix<T>& g) {
    Matrix<T> gx(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      T dotv = 0;
      for (std::size_t c = 0; c < g.cols(); ++c) dotv += g(r, c) * out(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) gx(r, c) = out(r, c) * (g(r, c) - dotv);
    }
    t.accumulate(x, gx);
  });
}

template <class T>
Var Tape<T>::log_softmax_rows(Var x) {
  Matrix<T> y = value(x);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    const T top = *std::max_element(row.begin(), row.end());
    T z = 0;
    for (T v : row) z += std::exp(v - top);
    const T lse = top + std::log(z);
    for (T& v : row) v -= lse;
  }
  return record(std::move(y), {x}, [x](Tape& t, const Matrix<T>& out, const Matrix<T>& g) {
    Matrix<T> gx(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      T gs = 0;
      for (std::size_t c = 0; c < g.cols(); ++c) gs += g(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) gx(r, c) = g(r, c) - std::exp(out(r, c)) * gs;
    }
    t.accumulate(x, gx);
  });
}

template <class T>
Var Tape<T>::nll(Var logp, std::span<const std::int32_t> labels) {
  const Matrix<T>& v = value(logp);
  if (labels.size() != v.rows()) throw ShapeError("nll: label count does not match rows");
  T total = 0;
  for (std::size_t r = 0; r < v.rows(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= v.cols())
      throw ShapeError("nll: label out of range");
    total -= v(r, static_cast<std::size_t>(labels[r]));
  }
  std::vector<std::int32_t> lab(labels.begin(), labels.end());
  return record(Matrix<T>(1, 1, total), {logp}, [logp, lab](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    const Matrix<T>& v = t.value(logp);
    Matrix<T> gx(v.rows(), v.cols());
    for (std::size_t r = 0; r < v.rows(); ++r) gx(r, static_cast<std::size_t>(lab[r])) = -g(0, 0);
    t.accumulate(logp, gx);
  });
}

template <class T>
Var Tape<T>::sum(Var x) {
  T total = 0;
  for (T v : value(x).values()) total += v;
  return record(Matrix<T>(1, 1, total), {x}, [x](Tape& t, const Matrix<T>&, const Matrix<T>& g) {
    const Matrix<T>& v = t.value(x);
    t.accumulate(x, Matrix<T>(v.rows(), v.cols(), g(0, 0)));
  });
}

template class Tape<float>;
template class Tape<double>;

}  // namespace cdgnn::nn

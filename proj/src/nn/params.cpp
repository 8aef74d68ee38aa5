#include <cmath>

#include "cdgnn/nn.hpp"

namespace cdgnn::nn {

template <class T>
Matrix<T>& ParamStore<T>::add(const std::string& name, std::size_t rows, std::size_t cols) {
  return add(name, Matrix<T>(rows, cols));
}

template <class T>
Matrix<T>& ParamStore<T>::add(const std::string& name, Matrix<T> value) {
  if (contains(name)) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  Matrix<T> grad(value.rows(), value.cols());
  entries_.push_back({name, std::move(value), std::move(grad), false});
  return entries_.back().value;
}

template <class T>
typename ParamStore<T>::Entry& ParamStore<T>::entry(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
  return entries_[it->second];
}

template <class T>
const typename ParamStore<T>::Entry& ParamStore<T>::entry(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter '" + name + "'");
  return entries_[it->second];
}

template <class T>
Var ParamStore<T>::bind(Tape<T>& tape, const std::string& name) {
  Entry& e = entry(name);
  if (e.frozen) return tape.constant(e.value);
  if (!e.grad.same_shape(e.value)) e.grad = Matrix<T>(e.value.rows(), e.value.cols());
  return tape.parameter(e.value, &e.grad);
}

template <class T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) e.grad = Matrix<T>(e.value.rows(), e.value.cols());
}

template <class T>
std::size_t ParamStore<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

template <class T>
void Adamax<T>::step(ParamStore<T>& params) {
  for (const auto& e : params.entries()) {
    if (e.frozen) continue;
    for (T g : e.grad.values())
      if (!std::isfinite(g)) throw NumericError("adamax: non-finite gradient in '" + e.name + "'");
  }
  ++t_;
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  const T step = static_cast<T>(cfg_.lr / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_))));
  const T eps = static_cast<T>(cfg_.eps);
  for (auto& e : params.entries()) {
    if (e.frozen) continue;
    auto [mit, mnew] = m_.try_emplace(e.name, e.value.rows(), e.value.cols());
    auto [uit, unew] = u_.try_emplace(e.name, e.value.rows(), e.value.cols());
    Matrix<T>& m = mit->second;
    Matrix<T>& u = uit->second;
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const T g = e.grad.data()[i];
      T& mi = m.data()[i];
      T& ui = u.data()[i];
      mi = b1 * mi + (T(1) - b1) * g;
      ui = std::max(b2 * ui, std::abs(g));
      e.value.data()[i] -= step * mi / (ui + eps);
    }
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template class Adamax<float>;
template class Adamax<double>;

}  // namespace cdgnn::nn

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "agree/nn/tensor.hpp"

namespace agree::nn {

// Named trainable tensors, each paired with a gradient slot of the same shape.
// Biases are stored as single-column matrices. Insertion order is preserved.
template <typename Scalar>
class ParamStore {
 public:
  Matrix<Scalar>& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    if (find(name) >= 0) throw std::logic_error("duplicate parameter: " + name);
    names_.push_back(name);
    values_.push_back(Matrix<Scalar>::Zero(rows, cols));
    grads_.push_back(Matrix<Scalar>::Zero(rows, cols));
    return values_.back();
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Matrix<Scalar>& value(std::size_t i) { return values_[i]; }
  const Matrix<Scalar>& value(std::size_t i) const { return values_[i]; }
  Matrix<Scalar>& grad(std::size_t i) { return grads_[i]; }
  const Matrix<Scalar>& grad(std::size_t i) const { return grads_[i]; }

  Matrix<Scalar>& value(const std::string& n) { return values_[index(n)]; }
  const Matrix<Scalar>& value(const std::string& n) const { return values_[index(n)]; }
  Matrix<Scalar>& grad(const std::string& n) { return grads_[index(n)]; }
  const Matrix<Scalar>& grad(const std::string& n) const { return grads_[index(n)]; }

  int find(const std::string& n) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == n) return static_cast<int>(i);
    return -1;
  }
  std::size_t index(const std::string& n) const {
    const int i = find(n);
    if (i < 0) throw std::out_of_range("unknown parameter: " + n);
    return static_cast<std::size_t>(i);
  }

  void zero_grad() {
    for (auto& g : grads_) g.setZero();
  }
  void scale_grad(Scalar s) {
    for (auto& g : grads_) g *= s;
  }
  Scalar grad_norm() const {
    Scalar sq(0);
    for (const auto& g : grads_) sq += g.squaredNorm();
    return std::sqrt(sq);
  }
  // Rescales gradients so their global L2 norm is at most max_norm.
  Scalar clip_grad_norm(Scalar max_norm) {
    const Scalar norm = grad_norm();
    if (norm > max_norm) scale_grad(max_norm / norm);
    return norm;
  }
  bool all_finite() const {
    for (std::size_t i = 0; i < size(); ++i)
      if (!values_[i].allFinite() || !grads_[i].allFinite()) return false;
    return true;
  }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix<Scalar>> values_;
  std::vector<Matrix<Scalar>> grads_;
};

}  // namespace agree::nn

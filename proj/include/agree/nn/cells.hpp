#pragma once

#include <string>
#include <type_traits>

#include "agree/common.hpp"
#include "agree/nn/params.hpp"
#include "agree/nn/tensor.hpp"

namespace agree::nn {

enum class Cell { Lstm, Srn };

// Non-deduced so Eigen expressions can be passed where vectors are expected.
template <typename Scalar>
using InputVector = std::type_identity_t<Vector<Scalar>>;

// Gate weights act on the stacked input z = [x; h_prev] as W^T z + b,
// with each W of shape (d + h) x h.
template <typename Scalar>
struct LstmWeights {
  const Matrix<Scalar>* w_i;
  const Matrix<Scalar>* w_f;
  const Matrix<Scalar>* w_o;
  const Matrix<Scalar>* w_g;
  const Matrix<Scalar>* b_i;
  const Matrix<Scalar>* b_f;
  const Matrix<Scalar>* b_o;
  const Matrix<Scalar>* b_g;

  static LstmWeights from(const ParamStore<Scalar>& p) {
    return {&p.value("W_i"), &p.value("W_f"), &p.value("W_o"), &p.value("W_g"),
            &p.value("b_i"), &p.value("b_f"), &p.value("b_o"), &p.value("b_g")};
  }
};

template <typename Scalar>
struct SrnWeights {
  const Matrix<Scalar>* w;
  const Matrix<Scalar>* b;

  static SrnWeights from(const ParamStore<Scalar>& p) { return {&p.value("W"), &p.value("b")}; }
};

// Everything backward() needs from one LSTM step.
template <typename Scalar>
struct LstmState {
  Vector<Scalar> z;
  Vector<Scalar> i, f, o, g;
  Vector<Scalar> c, tanh_c, h;
};

namespace detail {
inline void check_shape(bool ok, const char* what) {
  if (!ok) throw UsageError(std::string("shape mismatch in recurrent cell: ") + what);
}

template <typename Scalar>
Vector<Scalar> stack(const Vector<Scalar>& x, const Vector<Scalar>& h_prev) {
  Vector<Scalar> z(x.size() + h_prev.size());
  z << x, h_prev;
  return z;
}
}  // namespace detail

template <typename Scalar>
LstmState<Scalar> lstm_step(const LstmWeights<Scalar>& w, const InputVector<Scalar>& x,
                            const InputVector<Scalar>& h_prev, const InputVector<Scalar>& c_prev) {
  const Eigen::Index h = w.w_i->cols();
  detail::check_shape(w.w_i->rows() == x.size() + h, "LSTM input width");
  detail::check_shape(h_prev.size() == h && c_prev.size() == h, "LSTM state width");
  for (const auto* m : {w.w_f, w.w_o, w.w_g})
    detail::check_shape(m->rows() == w.w_i->rows() && m->cols() == h, "LSTM gate weights");
  for (const auto* b : {w.b_i, w.b_f, w.b_o, w.b_g})
    detail::check_shape(b->rows() == h && b->cols() == 1, "LSTM gate bias");

  LstmState<Scalar> s;
  s.z = detail::stack(x, h_prev);
  s.i = sigmoid(w.w_i->transpose() * s.z + *w.b_i);
  s.f = sigmoid(w.w_f->transpose() * s.z + *w.b_f);
  s.o = sigmoid(w.w_o->transpose() * s.z + *w.b_o);
  s.g = tanh(w.w_g->transpose() * s.z + *w.b_g);
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = tanh(s.c);
  s.h = s.o.cwiseProduct(s.tanh_c);
  return s;
}

template <typename Scalar>
struct SrnState {
  Vector<Scalar> z;
  Vector<Scalar> h;
};

template <typename Scalar>
SrnState<Scalar> srn_step(const SrnWeights<Scalar>& w, const InputVector<Scalar>& x, const InputVector<Scalar>& h_prev) {
  const Eigen::Index h = w.w->cols();
  detail::check_shape(w.w->rows() == x.size() + h, "SRN input width");
  detail::check_shape(h_prev.size() == h, "SRN state width");
  detail::check_shape(w.b->rows() == h && w.b->cols() == 1, "SRN bias");
  SrnState<Scalar> s;
  s.z = detail::stack(x, h_prev);
  s.h = tanh(w.w->transpose() * s.z + *w.b);
  return s;
}

}  // namespace agree::nn

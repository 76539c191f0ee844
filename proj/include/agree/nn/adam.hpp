#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "agree/nn/params.hpp"

namespace agree::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::vector<Matrix<Scalar>> m;
  std::vector<Matrix<Scalar>> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const ParamStore<Scalar>& params, AdamConfig cfg) : config(cfg) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m.push_back(Matrix<Scalar>::Zero(params.value(i).rows(), params.value(i).cols()));
      v.push_back(m.back());
    }
  }
};

// One bias-corrected Adam step using the gradients stored in `params`.
// Moments decay everywhere, but an entry is only moved when its current
// gradient is nonzero, so rows of tokens absent from a batch stay put.
template <typename Scalar>
void adam_update(ParamStore<Scalar>& params, AdamState<Scalar>& state) {
  const auto& c = state.config;
  ++state.step;
  const Scalar b1 = static_cast<Scalar>(c.beta1);
  const Scalar b2 = static_cast<Scalar>(c.beta2);
  const Scalar correction1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(state.step));
  const Scalar correction2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(state.step));
  const Scalar lr = static_cast<Scalar>(c.lr);
  const Scalar eps = static_cast<Scalar>(c.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto g = params.grad(i).array();
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    const auto step = lr * (m / correction1) / ((v / correction2).sqrt() + eps);
    params.value(i).array() -= (g != Scalar(0)).select(step, Scalar(0));
  }
}

}  // namespace agree::nn

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "agree/nn/model.hpp"

namespace agree::nn {

struct GradCheckOptions {
  int sequence_length = 6;
  double epsilon = 1e-4;
  double tolerance = 1e-4;
  // Relative errors use max(|analytic|, |numeric|, floor) as denominator so
  // entries whose true gradient is ~0 are judged on absolute error.
  double floor = 1e-6;
  double init_scale = 0.5;
};

struct TensorCheck {
  std::string name;
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double max_relative_error = 0.0;
  bool pass = false;
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares BPTT gradients against central finite differences on a randomly
// initialised model fed a random sequence. `tamper` may modify the analytic
// gradients before comparison.
inline GradCheckReport grad_check(const ModelSpec& spec, std::uint64_t seed, const GradCheckOptions& opt = {},
                                  const std::function<void(ParamStore<double>&)>& tamper = {}) {
  InitOptions init;
  init.scale = opt.init_scale;
  init.forget_bias = 0.5;
  Model<double> model = Model<double>::random(spec, seed, init);
  Rng rng(seed ^ 0x5eedULL);
  // Random biases too, so every bias gradient is exercised away from zero.
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    if (model.params().name(i).rfind("b", 0) == 0) fill_uniform(model.params().value(i), rng, opt.init_scale);
  }

  std::vector<int> ids(static_cast<std::size_t>(opt.sequence_length));
  for (int& id : ids) id = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.vocab)));
  std::vector<int> targets(spec.head == Head::LanguageModel ? ids.size() : 1);
  for (int& t : targets) t = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.outputs())));

  auto& params = model.params();
  params.zero_grad();
  model.forward_backward(ids, targets);
  if (tamper) tamper(params);

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    TensorCheck tc{params.name(p)};
    auto& value = params.value(p);
    for (Eigen::Index k = 0; k < value.size(); ++k) {
      const double saved = value(k);
      value(k) = saved + opt.epsilon;
      const double up = model.loss(ids, targets);
      value(k) = saved - opt.epsilon;
      const double down = model.loss(ids, targets);
      value(k) = saved;
      const double numeric = (up - down) / (2 * opt.epsilon);
      const double analytic = params.grad(p)(k);
      tc.max_relative_error = std::max(tc.max_relative_error, relative_error(analytic, numeric, opt.floor));
      tc.max_abs_analytic = std::max(tc.max_abs_analytic, std::abs(analytic));
    }
    report.max_relative_error = std::max(report.max_relative_error, tc.max_relative_error);
    report.tensors.push_back(tc);
  }
  report.pass = report.max_relative_error < opt.tolerance;
  return report;
}

}  // namespace agree::nn

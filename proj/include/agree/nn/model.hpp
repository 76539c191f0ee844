#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agree/common.hpp"
#include "agree/nn/cells.hpp"
#include "agree/nn/params.hpp"
#include "agree/nn/tensor.hpp"

namespace agree::nn {

// Classifier: one distribution over `classes` from the final state.
// LanguageModel: one distribution over the vocabulary per position.
enum class Head { Classifier, LanguageModel };

struct ModelSpec {
  Cell cell = Cell::Lstm;
  Head head = Head::Classifier;
  int vocab = 0;
  int embed = 50;
  int hidden = 50;
  int classes = 2;

  int outputs() const { return head == Head::LanguageModel ? vocab : classes; }
  bool operator==(const ModelSpec&) const = default;
};

struct InitOptions {
  double scale = 0.05;
  double forget_bias = 1.0;
};

// Per-timestep record of a forward pass. Row t of `hidden`/`cell` is the
// state after reading token t; row t of `probs` is the output distribution
// computed from that state (for classifiers, the classifier applied to an
// intermediate state). `cell` is empty for SRNs.
template <typename Scalar>
struct Trace {
  Matrix<Scalar> hidden;
  Matrix<Scalar> cell;
  Matrix<Scalar> probs;
};

template <typename Scalar>
struct Output {
  std::vector<Vector<Scalar>> distributions;
  Trace<Scalar> trace;
};

template <typename Scalar = double>
class Model {
 public:
  explicit Model(const ModelSpec& spec) : spec_(spec) {
    if (spec.vocab <= 0 || spec.embed <= 0 || spec.hidden <= 0 || spec.outputs() <= 0)
      throw UsageError("model dimensions must be positive");
    const Eigen::Index d = spec.embed, h = spec.hidden;
    params_.add("E", spec.vocab, d);
    if (spec.cell == Cell::Lstm) {
      for (const char* n : {"W_i", "W_f", "W_o", "W_g"}) params_.add(n, d + h, h);
      for (const char* n : {"b_i", "b_f", "b_o", "b_g"}) params_.add(n, h, 1);
    } else {
      params_.add("W", d + h, h);
      params_.add("b", h, 1);
    }
    params_.add("w_out", h, spec.outputs());
    params_.add("b_out", spec.outputs(), 1);
  }

  // Weights uniform in (-scale, scale), biases zero, LSTM forget bias set apart.
  static Model random(const ModelSpec& spec, std::uint64_t seed, const InitOptions& init = {}) {
    Model m(spec);
    Rng rng(seed);
    for (std::size_t i = 0; i < m.params_.size(); ++i) {
      if (m.params_.name(i).rfind("b", 0) == 0) continue;
      fill_uniform(m.params_.value(i), rng, init.scale);
    }
    if (spec.cell == Cell::Lstm) m.params_.value("b_f").setConstant(static_cast<Scalar>(init.forget_bias));
    return m;
  }

  const ModelSpec& spec() const { return spec_; }
  ParamStore<Scalar>& params() { return params_; }
  const ParamStore<Scalar>& params() const { return params_; }

  // Caches intermediate state for a following backward().
  Output<Scalar> forward(std::span<const int> ids) {
    cache_.emplace();
    return run(ids, &*cache_);
  }

  Output<Scalar> infer(std::span<const int> ids) const { return run(ids, nullptr); }

  Vector<Scalar> output_distribution(const Vector<Scalar>& h) const {
    return softmax(params_.value("w_out").transpose() * h + params_.value("b_out"));
  }

  // Accumulates parameter gradients given dLoss/dlogits for each output of the
  // cached forward pass (one for classifiers, one per position for LMs).
  void backward(std::span<const Vector<Scalar>> dlogits) {
    if (!cache_) throw std::logic_error("backward called without a cached forward pass");
    const Cache& k = *cache_;
    const std::size_t steps = k.ids.size();
    const bool lm = spec_.head == Head::LanguageModel;
    if (dlogits.size() != (lm ? steps : 1)) throw std::logic_error("backward: wrong number of output gradients");

    const Eigen::Index d = spec_.embed, h = spec_.hidden;
    const auto& w_out = params_.value("w_out");
    auto& g_w_out = params_.grad("w_out");
    auto& g_b_out = params_.grad("b_out");
    auto& g_e = params_.grad("E");

    Vector<Scalar> dh = Vector<Scalar>::Zero(h);
    Vector<Scalar> dc = Vector<Scalar>::Zero(h);
    for (std::size_t t = steps; t-- > 0;) {
      const Vector<Scalar>& h_t = state_h(k, t);
      const Vector<Scalar>* dl = nullptr;
      if (lm) dl = &dlogits[t];
      else if (t + 1 == steps) dl = &dlogits[0];
      if (dl) {
        g_w_out.noalias() += h_t * dl->transpose();
        g_b_out += *dl;
        dh.noalias() += w_out * *dl;
      }

      Vector<Scalar> dz;
      if (spec_.cell == Cell::Lstm) {
        const auto& s = k.lstm[t];
        const Vector<Scalar> c_prev = t ? k.lstm[t - 1].c : Vector<Scalar>::Zero(h);
        const Vector<Scalar> d_o = dh.cwiseProduct(s.tanh_c);
        dc += dh.cwiseProduct(s.o).cwiseProduct((Scalar(1) - s.tanh_c.array().square()).matrix());
        const Vector<Scalar> da_i = dc.cwiseProduct(s.g).cwiseProduct(s.i.cwiseProduct((Scalar(1) - s.i.array()).matrix()));
        const Vector<Scalar> da_f = dc.cwiseProduct(c_prev).cwiseProduct(s.f.cwiseProduct((Scalar(1) - s.f.array()).matrix()));
        const Vector<Scalar> da_o = d_o.cwiseProduct(s.o.cwiseProduct((Scalar(1) - s.o.array()).matrix()));
        const Vector<Scalar> da_g = dc.cwiseProduct(s.i).cwiseProduct((Scalar(1) - s.g.array().square()).matrix());
        dz = Vector<Scalar>::Zero(d + h);
        accumulate_gate("W_i", "b_i", s.z, da_i, dz);
        accumulate_gate("W_f", "b_f", s.z, da_f, dz);
        accumulate_gate("W_o", "b_o", s.z, da_o, dz);
        accumulate_gate("W_g", "b_g", s.z, da_g, dz);
        dc = dc.cwiseProduct(s.f);
      } else {
        const auto& s = k.srn[t];
        const Vector<Scalar> da = dh.cwiseProduct((Scalar(1) - s.h.array().square()).matrix());
        dz = Vector<Scalar>::Zero(d + h);
        accumulate_gate("W", "b", s.z, da, dz);
      }
      g_e.row(k.ids[t]) += dz.head(d).transpose();
      dh = dz.tail(h);
    }
  }

  // Mean negative log-likelihood of `targets` (one label for classifiers,
  // one next-token id per position for LMs).
  Scalar loss(std::span<const int> ids, std::span<const int> targets) const {
    return nll(infer(ids).distributions, targets);
  }

  // Forward, loss, and gradient accumulation in one call. Returns the loss.
  Scalar forward_backward(std::span<const int> ids, std::span<const int> targets) {
    const auto out = forward(ids);
    const Scalar value = nll(out.distributions, targets);
    const Scalar scale = Scalar(1) / static_cast<Scalar>(out.distributions.size());
    std::vector<Vector<Scalar>> dlogits;
    dlogits.reserve(out.distributions.size());
    for (std::size_t t = 0; t < out.distributions.size(); ++t) {
      Vector<Scalar> g = out.distributions[t];
      g(targets[t]) -= Scalar(1);
      dlogits.push_back(g * scale);
    }
    backward(dlogits);
    return value;
  }

 private:
  struct Cache {
    std::vector<int> ids;
    std::vector<LstmState<Scalar>> lstm;
    std::vector<SrnState<Scalar>> srn;
  };

  static const Vector<Scalar>& state_h(const Cache& k, std::size_t t) {
    return k.lstm.empty() ? k.srn[t].h : k.lstm[t].h;
  }

  void accumulate_gate(const char* w, const char* b, const Vector<Scalar>& z, const Vector<Scalar>& da,
                       Vector<Scalar>& dz) {
    params_.grad(w).noalias() += z * da.transpose();
    params_.grad(b) += da;
    dz.noalias() += params_.value(w) * da;
  }

  Scalar nll(const std::vector<Vector<Scalar>>& dists, std::span<const int> targets) const {
    if (targets.size() != dists.size()) throw DataError("target count does not match model outputs");
    Scalar total(0);
    for (std::size_t t = 0; t < dists.size(); ++t) {
      if (targets[t] < 0 || targets[t] >= dists[t].size()) throw DataError("target id out of range");
      total -= std::log(dists[t](targets[t]));
    }
    return total / static_cast<Scalar>(dists.size());
  }

  Output<Scalar> run(std::span<const int> ids, Cache* cache) const {
    if (ids.empty()) throw DataError("cannot run a recurrent model on an empty sequence");
    for (int id : ids)
      if (id < 0 || id >= spec_.vocab) throw DataError("token id " + std::to_string(id) + " outside vocabulary");

    const Eigen::Index h = spec_.hidden;
    const auto steps = static_cast<Eigen::Index>(ids.size());
    const bool lstm = spec_.cell == Cell::Lstm;
    const auto& emb = params_.value("E");

    Output<Scalar> out;
    out.trace.hidden.resize(steps, h);
    if (lstm) out.trace.cell.resize(steps, h);
    out.trace.probs.resize(steps, spec_.outputs());

    Vector<Scalar> h_prev = Vector<Scalar>::Zero(h);
    Vector<Scalar> c_prev = Vector<Scalar>::Zero(h);
    std::optional<LstmWeights<Scalar>> lw;
    std::optional<SrnWeights<Scalar>> sw;
    if (lstm) lw = LstmWeights<Scalar>::from(params_);
    else sw = SrnWeights<Scalar>::from(params_);
    if (cache) cache->ids.assign(ids.begin(), ids.end());

    for (Eigen::Index t = 0; t < steps; ++t) {
      const Vector<Scalar> x = emb.row(ids[static_cast<std::size_t>(t)]).transpose();
      if (lstm) {
        auto s = lstm_step(*lw, x, h_prev, c_prev);
        h_prev = s.h;
        c_prev = s.c;
        out.trace.cell.row(t) = s.c.transpose();
        if (cache) cache->lstm.push_back(std::move(s));
      } else {
        auto s = srn_step(*sw, x, h_prev);
        h_prev = s.h;
        if (cache) cache->srn.push_back(std::move(s));
      }
      out.trace.hidden.row(t) = h_prev.transpose();
      Vector<Scalar> p = output_distribution(h_prev);
      out.trace.probs.row(t) = p.transpose();
      if (spec_.head == Head::LanguageModel || t + 1 == steps) out.distributions.push_back(std::move(p));
    }
    return out;
  }

  ModelSpec spec_;
  ParamStore<Scalar> params_;
  std::optional<Cache> cache_;
};

}  // namespace agree::nn

#include "agree/train.hpp"

#include <cmath>
#include <numeric>

namespace agree {

void TrainConfig::check() const {
  if (embed <= 0 || hidden <= 0) throw UsageError("model dimensions must be positive");
  if (patience < 1) throw UsageError("patience must be at least 1");
  if (batch_size < 1) throw UsageError("batch size must be at least 1");
  if (max_epochs < 1) throw UsageError("max_epochs must be at least 1");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"objective", to_string(c.objective)},
          {"cell", to_string(c.cell)},
          {"embed", c.embed},
          {"hidden", c.hidden},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"clip_norm", c.clip_norm},
          {"init_scale", c.init_scale},
          {"forget_bias", c.forget_bias},
          {"seed", c.seed},
          {"hard_only", c.hard_only},
          {"train_fraction", c.train_fraction}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (j.contains("objective")) c.objective = objective_from_string(j.at("objective").get<std::string>());
  if (j.contains("cell")) c.cell = cell_from_string(j.at("cell").get<std::string>());
  c.embed = j.value("embed", c.embed);
  c.hidden = j.value("hidden", c.hidden);
  c.adam.lr = j.value("lr", c.adam.lr);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.init_scale = j.value("init_scale", c.init_scale);
  c.forget_bias = j.value("forget_bias", c.forget_bias);
  c.seed = j.value("seed", c.seed);
  c.hard_only = j.value("hard_only", c.hard_only);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  return c;
}

bool EarlyStopper::update(double error) {
  ++epoch_;
  if (error < best_) {
    best_ = error;
    best_epoch_ = epoch_;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

nlohmann::json to_json(const std::vector<EpochLog>& log) {
  auto arr = nlohmann::json::array();
  for (const auto& e : log) arr.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"valid_error", e.valid_error}});
  return arr;
}

int argmax_label(const nn::Vector<double>& dist) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(dist.size()); ++k)
    if (dist(k) > dist(best)) best = k;
  return best;
}

int classify(const nn::Model<double>& model, const ObjectiveExample& example) {
  return argmax_label(model.infer(example.input_ids).distributions.back());
}

double validation_error(const nn::Model<double>& model, const std::vector<ObjectiveExample>& examples) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) {
    if (ex.objective == Objective::LanguageModel) total += model.loss(ex.input_ids, ex.next_ids);
    else total += classify(model, ex) != ex.label ? 1.0 : 0.0;
  }
  return total / static_cast<double>(examples.size());
}

TrainResult train(const TrainConfig& config, int vocab_size, const std::vector<ObjectiveExample>& train_set,
                  const std::vector<ObjectiveExample>& valid_set, const Checkpoint* resume) {
  config.check();
  if (train_set.empty()) throw DataError("training set is empty");
  const bool lm = config.objective == Objective::LanguageModel;
  const nn::ModelSpec spec{config.cell, lm ? nn::Head::LanguageModel : nn::Head::Classifier, vocab_size,
                           config.embed, config.hidden, 2};

  nn::Model<double> model = nn::Model<double>::random(spec, config.seed, {config.init_scale, config.forget_bias});
  int epoch_offset = 0;
  if (resume) {
    if (!(resume->model.spec() == spec)) throw DataError("resume checkpoint does not match the configured model");
    model = resume->model;
    epoch_offset = resume->epoch;
  }
  nn::AdamState<double> adam(model.params(), config.adam);
  nn::Rng rng(config.seed ^ 0xa5a5a5a5ULL);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  EarlyStopper stopper(config.patience);
  TrainResult result{model, {}, epoch_offset};
  const std::vector<int> no_targets;

  for (int e = 1; e <= config.max_epochs; ++e) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double loss_sum = 0.0;
    auto& params = model.params();
    params.zero_grad();
    int in_batch = 0;
    auto flush = [&] {
      params.scale_grad(1.0 / in_batch);
      params.clip_grad_norm(config.clip_norm);
      nn::adam_update(params, adam);
      params.zero_grad();
      in_batch = 0;
    };
    for (std::size_t idx : order) {
      const auto& ex = train_set[idx];
      const int label[1] = {ex.label};
      const double loss = lm ? model.forward_backward(ex.input_ids, ex.next_ids)
                             : model.forward_backward(ex.input_ids, label);
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch_offset + e) +
                           " on example " + ex.instance_id);
      }
      loss_sum += loss;
      if (++in_batch == config.batch_size) flush();
    }
    if (in_batch > 0) flush();
    if (!model.params().all_finite()) throw NumericError("training diverged: non-finite parameters");

    const double verr = validation_error(model, valid_set.empty() ? train_set : valid_set);
    result.log.push_back({epoch_offset + e, loss_sum / static_cast<double>(train_set.size()), verr});
    const bool stop = stopper.update(verr);
    if (stopper.improved()) {
      result.model = model;
      result.best_epoch = epoch_offset + e;
    }
    if (stop) break;
  }
  return result;
}

}  // namespace agree

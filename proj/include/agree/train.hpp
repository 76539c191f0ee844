#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "agree/checkpoint.hpp"
#include "agree/nn/adam.hpp"
#include "agree/nn/model.hpp"
#include "agree/objectives.hpp"
#include "json.hpp"

namespace agree {

struct TrainConfig {
  Objective objective = Objective::NumberPred;
  nn::Cell cell = nn::Cell::Lstm;
  int embed = 50;
  int hidden = 50;
  nn::AdamConfig adam;
  int batch_size = 16;
  int max_epochs = 50;
  int patience = 5;
  double clip_norm = 5.0;
  double init_scale = 0.05;
  double forget_bias = 1.0;
  std::uint64_t seed = 1;
  bool hard_only = false;
  double train_fraction = 0.09;

  void check() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

// Tracks the best validation error and signals a stop once `patience`
// consecutive epochs fail to improve on it.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  // Records the error of the next epoch; returns true when training should stop.
  bool update(double error);
  bool improved() const { return stale_ == 0; }
  int best_epoch() const { return best_epoch_; }
  double best_error() const { return best_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_error = 0.0;
};

struct TrainResult {
  nn::Model<double> model;  // parameters from the best validation epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

nlohmann::json to_json(const std::vector<EpochLog>& log);

// Validation error: misclassification rate for classifiers, mean per-token
// negative log-likelihood for language models.
double validation_error(const nn::Model<double>& model, const std::vector<ObjectiveExample>& examples);

// Adam with early stopping on validation error. `resume`, when given,
// supplies initial parameters and the epoch count already completed.
TrainResult train(const TrainConfig& config, int vocab_size, const std::vector<ObjectiveExample>& train_set,
                  const std::vector<ObjectiveExample>& valid_set, const Checkpoint* resume = nullptr);

// Argmax over the class distribution; ties go to the lowest class index
// (SINGULAR, GRAMMATICAL).
int argmax_label(const nn::Vector<double>& dist);
int classify(const nn::Model<double>& model, const ObjectiveExample& example);

}  // namespace agree

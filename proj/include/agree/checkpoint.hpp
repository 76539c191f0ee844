#pragma once

#include <optional>
#include <string>

#include "agree/nn/model.hpp"
#include "agree/objectives.hpp"
#include "agree/vocab.hpp"
#include "json.hpp"

namespace agree {

std::string_view to_string(nn::Cell c);
nn::Cell cell_from_string(std::string_view s);

// A trained model with everything needed to evaluate it: the vocabulary it
// was trained with, the verb-form table, and an echo of the training config.
struct Checkpoint {
  Objective objective = Objective::NumberPred;
  nn::Model<double> model{nn::ModelSpec{nn::Cell::Lstm, nn::Head::Classifier, 1, 1, 1, 2}};
  Vocab vocab;
  VerbFormTable verb_forms;
  nlohmann::json config = nlohmann::json::object();
  int epoch = 0;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace agree

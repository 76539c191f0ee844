#include "agree/checkpoint.hpp"

#include <fstream>

namespace agree {

namespace {
constexpr std::string_view kFormat = "agree-checkpoint-v1";
}

std::string_view to_string(nn::Cell c) { return c == nn::Cell::Lstm ? "LSTM" : "SRN"; }

nn::Cell cell_from_string(std::string_view s) {
  if (s == "LSTM") return nn::Cell::Lstm;
  if (s == "SRN") return nn::Cell::Srn;
  throw UsageError("unknown cell type: " + std::string(s));
}

nlohmann::json to_json(const Checkpoint& ck) {
  const auto& spec = ck.model.spec();
  auto params = nlohmann::json::array();
  const auto& store = ck.model.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& m = store.value(i);
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    params.push_back({{"name", store.name(i)}, {"shape", {m.rows(), m.cols()}}, {"data", data}});
  }
  return {
      {"format", kFormat},
      {"objective", to_string(ck.objective)},
      {"model",
       {{"cell", to_string(spec.cell)},
        {"head", spec.head == nn::Head::Classifier ? "CLASSIFIER" : "LM"},
        {"vocab", spec.vocab},
        {"embed", spec.embed},
        {"hidden", spec.hidden},
        {"classes", spec.classes}}},
      {"config", ck.config},
      {"epoch", ck.epoch},
      {"seed", ck.seed},
      {"vocab", ck.vocab.to_json()},
      {"vocab_digest", ck.vocab.digest()},
      {"verb_forms", ck.verb_forms.to_json()},
      {"params", params},
  };
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != kFormat) throw DataError("not a checkpoint file (bad format tag)");
  Checkpoint ck;
  ck.objective = objective_from_string(j.at("objective").get<std::string>());
  const auto& m = j.at("model");
  nn::ModelSpec spec;
  spec.cell = cell_from_string(m.at("cell").get<std::string>());
  spec.head = m.at("head").get<std::string>() == "LM" ? nn::Head::LanguageModel : nn::Head::Classifier;
  spec.vocab = m.at("vocab").get<int>();
  spec.embed = m.at("embed").get<int>();
  spec.hidden = m.at("hidden").get<int>();
  spec.classes = m.at("classes").get<int>();
  ck.model = nn::Model<double>(spec);
  ck.config = j.value("config", nlohmann::json::object());
  ck.epoch = j.value("epoch", 0);
  ck.seed = j.value("seed", std::uint64_t{0});
  ck.vocab = Vocab::from_json(j.at("vocab"));
  if (j.contains("vocab_digest") && j.at("vocab_digest").get<std::string>() != ck.vocab.digest())
    throw DataError("checkpoint vocabulary does not match its recorded digest");
  if (static_cast<int>(ck.vocab.size()) != spec.vocab)
    throw DataError("checkpoint vocabulary size does not match the model");
  if (j.contains("verb_forms")) ck.verb_forms = VerbFormTable::from_json(j.at("verb_forms"));

  auto& store = ck.model.params();
  for (const auto& p : j.at("params")) {
    const auto name = p.at("name").get<std::string>();
    auto& value = store.value(name);
    const auto shape = p.at("shape").get<std::vector<Eigen::Index>>();
    const auto data = p.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != value.rows() || shape[1] != value.cols() ||
        static_cast<Eigen::Index>(data.size()) != value.size())
      throw DataError("checkpoint tensor '" + name + "' has the wrong shape");
    for (Eigen::Index r = 0; r < value.rows(); ++r)
      for (Eigen::Index c = 0; c < value.cols(); ++c) value(r, c) = data[static_cast<std::size_t>(r * value.cols() + c)];
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << to_json(ck).dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace agree

#include "agree/config.hpp"

#include <fstream>

#include "agree/common.hpp"

namespace agree {

using nlohmann::json;

namespace {

json defaults() {
  json train = to_json(TrainConfig{});
  return {
      {"corpus", {{"columns", {{"id", 1}, {"form", 2}, {"pos", 5}, {"head", 7}, {"deprel", 8}}}, {"max_len", 50}}},
      {"split", {{"train", 0.09}, {"valid", 0.01}, {"test", 0.90}, {"seed", 0}}},
      {"extract",
       {{"subject_label", "nsubj"},
        {"rc_labels", {"rcmod", "relcl", "acl:relcl"}},
        {"relativizer_tags", {"WDT", "WP", "WP$"}},
        {"relativizer_forms", {"that"}},
        {"seed", 0}}},
      {"vocab", {{"cap", 10000}}},
      {"train", train},
      {"probe", {{"pos_threshold", 0.9}}},
  };
}

bool compatible(const json& base, const json& value) {
  if (base.is_number()) return value.is_number() && (base.is_number_float() || !value.is_number_float());
  if (base.is_boolean()) return value.is_boolean();
  if (base.is_string()) return value.is_string();
  if (base.is_array()) return value.is_array();
  return base.type() == value.type();
}

void merge_into(json& base, const json& overrides, const std::string& path) {
  if (!overrides.is_object()) throw UsageError("config: expected an object at '" + path + "'");
  for (const auto& [key, value] : overrides.items()) {
    std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw UsageError("config: unknown key '" + where + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, where);
    } else {
      if (!compatible(slot, value)) throw UsageError("config: wrong type for '" + where + "': " + value.dump());
      slot = value;
    }
  }
}

std::set<std::string> string_set(const json& j) {
  std::set<std::string> out;
  for (const auto& v : j) out.insert(v.get<std::string>());
  return out;
}

}  // namespace

Config::Config() : tree_(defaults()) {}

void Config::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  merge(j);
}

void Config::merge(const json& overrides) {
  merge_into(tree_, overrides, "");
  if (overrides.contains("train") && overrides["train"].contains("train_fraction")) train_fraction_set_ = true;
}

void Config::set(std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw UsageError("expected key=value, got '" + std::string(assignment) + "'");
  std::string key(assignment.substr(0, eq));
  std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json nested = value;
  std::size_t end = key.size();
  while (true) {
    auto dot = key.rfind('.', end - 1);
    std::string part = key.substr(dot == std::string::npos ? 0 : dot + 1, end - (dot == std::string::npos ? 0 : dot + 1));
    if (part.empty()) throw UsageError("malformed config key '" + key + "'");
    nested = json{{part, nested}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge(nested);
}

const json& Config::at(std::string_view dotted) const {
  const json* node = &tree_;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    auto dot = dotted.find('.', start);
    std::string part(dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (!node->is_object() || !node->contains(part)) throw UsageError("config: unknown key '" + std::string(dotted) + "'");
    node = &(*node)[part];
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return *node;
}

ReadOptions Config::read_options() const {
  ReadOptions o;
  const json& c = tree_["corpus"]["columns"];
  o.columns.id = c["id"].get<int>();
  o.columns.form = c["form"].get<int>();
  o.columns.pos = c["pos"].get<int>();
  o.columns.head = c["head"].get<int>();
  o.columns.deprel = c["deprel"].get<int>();
  for (int col : {o.columns.id, o.columns.form, o.columns.pos, o.columns.head, o.columns.deprel})
    if (col < 1) throw UsageError("config: corpus columns are 1-based");
  int max_len = tree_["corpus"]["max_len"].get<int>();
  if (max_len < 0) throw UsageError("config: corpus.max_len must be >= 0");
  o.max_len = static_cast<std::size_t>(max_len);
  return o;
}

SplitAssignment Config::split() const {
  SplitAssignment s;
  const json& j = tree_["split"];
  s.train = j["train"].get<double>();
  s.valid = j["valid"].get<double>();
  s.test = j["test"].get<double>();
  s.seed = j["seed"].get<std::uint64_t>();
  // The training fraction of a hard-only run takes its share from the test split.
  TrainConfig t = train_config();
  if (train_fraction_set_ || t.hard_only) {
    s.train = t.train_fraction;
    s.test = 1.0 - s.train - s.valid;
  }
  s.check();
  return s;
}

ExtractOptions Config::extract_options() const {
  ExtractOptions o;
  const json& j = tree_["extract"];
  o.subject_label = j["subject_label"].get<std::string>();
  o.rc_labels = string_set(j["rc_labels"]);
  o.relativizer_tags = string_set(j["relativizer_tags"]);
  o.relativizer_forms = string_set(j["relativizer_forms"]);
  return o;
}

std::uint64_t Config::extract_seed() const { return tree_["extract"]["seed"].get<std::uint64_t>(); }

std::size_t Config::vocab_cap() const {
  long long cap = tree_["vocab"]["cap"].get<long long>();
  if (cap < 1) throw UsageError("config: vocab.cap must be positive");
  return static_cast<std::size_t>(cap);
}

TrainConfig Config::train_config() const {
  TrainConfig c = train_config_from_json(tree_["train"]);
  if (c.hard_only && !train_fraction_set_) c.train_fraction = 0.20;
  c.check();
  return c;
}

double Config::probe_threshold() const { return tree_["probe"]["pos_threshold"].get<double>(); }

}  // namespace agree

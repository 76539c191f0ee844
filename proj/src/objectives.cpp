#include "agree/objectives.hpp"

#include <algorithm>
#include <set>

namespace agree {

namespace {

constexpr std::pair<std::string_view, Objective> kObjectiveNames[] = {
    {"NUMBER_PRED", Objective::NumberPred},         {"VERB_INFLECT", Objective::VerbInflect},
    {"GRAMMATICALITY", Objective::Grammaticality},   {"LM", Objective::LanguageModel},
    {"NOUNS_ONLY_COMMON", Objective::NounsOnlyCommon}, {"NOUNS_ONLY_ALL", Objective::NounsOnlyAll},
};

constexpr std::pair<std::string_view, std::string_view> kIrregular[] = {
    {"is", "are"}, {"has", "have"}, {"does", "do"}};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) { return std::string_view("aeiou").find(c) != std::string_view::npos; }

std::vector<int> ids_of(const std::vector<PrefixToken>& tokens, const Vocab& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t.form, t.pos));
  return ids;
}

// Base forms whose regular singular is `singular`, most plausible first.
std::vector<std::string> plural_candidates(const std::string& singular) {
  std::vector<std::string> out;
  auto consider = [&](std::string base) {
    if (!base.empty() && regular_singular(base) == singular &&
        std::find(out.begin(), out.end(), base) == out.end())
      out.push_back(std::move(base));
  };
  if (singular.size() > 4 && ends_with(singular, "ies")) consider(singular.substr(0, singular.size() - 3) + "y");
  for (std::string_view cluster : {"sses", "xes", "zzes", "ches", "shes", "oes"}) {
    if (ends_with(singular, cluster)) consider(singular.substr(0, singular.size() - 2));
  }
  if (ends_with(singular, "s")) consider(singular.substr(0, singular.size() - 1));
  if (ends_with(singular, "es")) consider(singular.substr(0, singular.size() - 2));
  return out;
}

}  // namespace

std::string_view to_string(Objective o) {
  for (const auto& [name, value] : kObjectiveNames)
    if (value == o) return name;
  return "NUMBER_PRED";
}

Objective objective_from_string(std::string_view s) {
  for (const auto& [name, value] : kObjectiveNames)
    if (name == s) return value;
  throw UsageError("unknown objective: " + std::string(s));
}

bool is_classification(Objective o) { return o != Objective::LanguageModel; }

std::string_view to_string(Judgement j) { return j == Judgement::Grammatical ? "GRAMMATICAL" : "UNGRAMMATICAL"; }

nlohmann::json to_json(const ObjectiveExample& ex) {
  nlohmann::json target;
  if (ex.objective == Objective::LanguageModel) target = ex.next_ids;
  else if (ex.objective == Objective::Grammaticality) target = to_string(static_cast<Judgement>(ex.label));
  else target = to_string(static_cast<Number>(ex.label));
  return {{"objective", to_string(ex.objective)},
          {"input_ids", ex.input_ids},
          {"target", target},
          {"meta", {{"instance_id", ex.instance_id}}}};
}

ObjectiveExample example_from_json(const nlohmann::json& j) {
  ObjectiveExample ex;
  ex.objective = objective_from_string(j.at("objective").get<std::string>());
  ex.input_ids = j.at("input_ids").get<std::vector<int>>();
  const auto& target = j.at("target");
  if (ex.objective == Objective::LanguageModel) {
    ex.next_ids = target.get<std::vector<int>>();
  } else if (ex.objective == Objective::Grammaticality) {
    ex.label = target.get<std::string>() == "UNGRAMMATICAL" ? 1 : 0;
  } else {
    ex.label = static_cast<int>(number_from_string(target.get<std::string>()));
  }
  ex.instance_id = j.at("meta").value("instance_id", std::string{});
  return ex;
}

bool VerbFormTable::add(const std::string& singular, const std::string& plural) {
  if (to_plural_.count(singular) || to_singular_.count(plural)) {
    return to_plural_.count(singular) && to_plural_.at(singular) == plural;
  }
  to_plural_.emplace(singular, plural);
  to_singular_.emplace(plural, singular);
  return true;
}

std::optional<std::string> VerbFormTable::plural_of(std::string_view singular) const {
  auto it = to_plural_.find(to_lower(singular));
  if (it == to_plural_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> VerbFormTable::singular_of(std::string_view plural) const {
  auto it = to_singular_.find(to_lower(plural));
  if (it == to_singular_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> VerbFormTable::flip(std::string_view form, Number number) const {
  return number == Number::Singular ? plural_of(form) : singular_of(form);
}

nlohmann::json VerbFormTable::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& [sg, pl] : to_plural_) arr.push_back({sg, pl});
  return {{"pairs", arr}};
}

VerbFormTable VerbFormTable::from_json(const nlohmann::json& j) {
  VerbFormTable t;
  for (const auto& p : j.at("pairs")) t.add(p.at(0).get<std::string>(), p.at(1).get<std::string>());
  return t;
}

std::string regular_singular(std::string_view plural) {
  std::string p(plural);
  if (p.size() >= 2 && ends_with(p, "y") && !is_vowel(p[p.size() - 2])) return p.substr(0, p.size() - 1) + "ies";
  for (std::string_view s : {"s", "x", "z", "ch", "sh", "o"})
    if (ends_with(p, s)) return p + "es";
  return p + "s";
}

VerbFormTable build_verb_form_table(const std::vector<Sentence>& train) {
  std::set<std::string> singular_seen, plural_seen;
  for (const auto& s : train) {
    for (const auto& t : s.tokens) {
      if (t.form.empty() || t.form.front() == '\'') continue;
      if (t.pos == "VBZ") singular_seen.insert(to_lower(t.form));
      if (t.pos == "VBP") plural_seen.insert(to_lower(t.form));
    }
  }

  VerbFormTable table;
  std::set<std::string> irregular_forms;
  for (const auto& [sg, pl] : kIrregular) {
    table.add(std::string(sg), std::string(pl));
    irregular_forms.insert(std::string(sg));
    irregular_forms.insert(std::string(pl));
  }
  irregular_forms.insert("am");

  // Candidate pairs from both sides; pairs attested on both sides win conflicts.
  std::set<std::pair<std::string, std::string>> candidates;
  for (const auto& pl : plural_seen) {
    if (!irregular_forms.count(pl)) candidates.emplace(regular_singular(pl), pl);
  }
  for (const auto& sg : singular_seen) {
    if (irregular_forms.count(sg)) continue;
    auto bases = plural_candidates(sg);
    if (bases.empty()) continue;
    auto attested = std::find_if(bases.begin(), bases.end(), [&](const auto& b) { return plural_seen.count(b) > 0; });
    candidates.emplace(sg, attested != bases.end() ? *attested : bases.front());
  }
  for (int pass = 2; pass >= 1; --pass) {
    for (const auto& [sg, pl] : candidates) {
      const int attested = static_cast<int>(singular_seen.count(sg)) + static_cast<int>(plural_seen.count(pl));
      if (attested == pass && !irregular_forms.count(sg) && !irregular_forms.count(pl)) table.add(sg, pl);
    }
  }
  return table;
}

bool grammaticality_coin(std::string_view instance_id) {
  return (stable_hash(instance_id, 0, HashStream::Coin) >> 63) != 0;
}

ObjectiveExample make_number_pred(const AgreementInstance& inst, const Vocab& vocab) {
  ObjectiveExample ex;
  ex.objective = Objective::NumberPred;
  ex.input_ids = ids_of(inst.prefix, vocab);
  ex.label = static_cast<int>(inst.verb_number);
  ex.instance_id = inst.id();
  return ex;
}

std::optional<ObjectiveExample> make_verb_inflect(const AgreementInstance& inst, const Vocab& vocab,
                                                  const VerbFormTable& table) {
  std::optional<std::string> singular;
  if (inst.verb_number == Number::Singular) singular = to_lower(inst.verb_form);
  else singular = table.singular_of(inst.verb_form);
  if (!singular) return std::nullopt;
  ObjectiveExample ex = make_number_pred(inst, vocab);
  ex.objective = Objective::VerbInflect;
  ex.input_ids.push_back(vocab.id(*singular, "VBZ"));
  return ex;
}

std::vector<PrefixToken> full_sentence(const AgreementInstance& inst) {
  std::vector<PrefixToken> tokens = inst.prefix;
  tokens.push_back({inst.verb_form, inst.verb_pos});
  tokens.insert(tokens.end(), inst.suffix.begin(), inst.suffix.end());
  return tokens;
}

std::optional<std::vector<PrefixToken>> flipped_sentence(const AgreementInstance& inst, const VerbFormTable& table) {
  auto other = table.flip(inst.verb_form, inst.verb_number);
  if (!other) return std::nullopt;
  std::vector<PrefixToken> tokens = full_sentence(inst);
  tokens[inst.prefix.size()] = {*other, inst.verb_number == Number::Singular ? "VBP" : "VBZ"};
  return tokens;
}

std::optional<ObjectiveExample> make_grammaticality(const AgreementInstance& inst, const Vocab& vocab,
                                                    const VerbFormTable& table, bool flip) {
  // Unflippable verbs are skipped whichever way the coin falls, so the kept
  // set does not depend on the coin.
  auto flipped = flipped_sentence(inst, table);
  if (!flipped) return std::nullopt;
  ObjectiveExample ex;
  ex.objective = Objective::Grammaticality;
  ex.input_ids = ids_of(flip ? *flipped : full_sentence(inst), vocab);
  ex.label = static_cast<int>(flip ? Judgement::Ungrammatical : Judgement::Grammatical);
  ex.instance_id = inst.id();
  return ex;
}

ObjectiveExample make_lm(const Sentence& s, const Vocab& vocab) {
  ObjectiveExample ex;
  ex.objective = Objective::LanguageModel;
  ex.input_ids.push_back(Vocab::kBos);
  for (const auto& t : s.tokens) {
    const int id = vocab.id(t.form, t.pos);
    ex.input_ids.push_back(id);
    ex.next_ids.push_back(id);
  }
  ex.next_ids.push_back(Vocab::kEos);
  ex.instance_id = s.id;
  return ex;
}

ObjectiveExample make_nouns_only(const AgreementInstance& inst, const Vocab& vocab, NounMode mode) {
  static const std::set<std::string> common{"NN", "NNS"};
  static const std::set<std::string> all{"NN", "NNS", "NNP", "NNPS", "PRP"};
  const auto& keep = mode == NounMode::Common ? common : all;
  ObjectiveExample ex;
  ex.objective = mode == NounMode::Common ? Objective::NounsOnlyCommon : Objective::NounsOnlyAll;
  for (const auto& t : inst.prefix)
    if (keep.count(t.pos)) ex.input_ids.push_back(vocab.id(t.form, t.pos));
  if (ex.input_ids.empty()) ex.input_ids.push_back(Vocab::kEmpty);
  ex.label = static_cast<int>(inst.verb_number);
  ex.instance_id = inst.id();
  return ex;
}

std::vector<AgreementInstance> hard_only(const std::vector<AgreementInstance>& instances) {
  std::vector<AgreementInstance> out;
  std::copy_if(instances.begin(), instances.end(), std::back_inserter(out),
               [](const auto& i) { return !i.intervening_numbers.empty(); });
  return out;
}

Dataset build_dataset(Objective objective, const std::vector<AgreementInstance>& instances, const Vocab& vocab,
                      const VerbFormTable& table) {
  if (objective == Objective::LanguageModel)
    throw UsageError("LM datasets are built from sentences, not agreement instances");
  Dataset ds;
  for (const auto& inst : instances) {
    std::optional<ObjectiveExample> ex;
    switch (objective) {
      case Objective::NumberPred: ex = make_number_pred(inst, vocab); break;
      case Objective::VerbInflect: ex = make_verb_inflect(inst, vocab, table); break;
      case Objective::Grammaticality: ex = make_grammaticality(inst, vocab, table); break;
      case Objective::NounsOnlyCommon: ex = make_nouns_only(inst, vocab, NounMode::Common); break;
      case Objective::NounsOnlyAll: ex = make_nouns_only(inst, vocab, NounMode::All); break;
      case Objective::LanguageModel: break;
    }
    if (ex) ds.examples.push_back(std::move(*ex));
    else ++ds.skipped;
  }
  return ds;
}

Dataset build_lm_dataset(const std::vector<Sentence>& sentences, const Vocab& vocab) {
  Dataset ds;
  for (const auto& s : sentences) ds.examples.push_back(make_lm(s, vocab));
  return ds;
}

}  // namespace agree

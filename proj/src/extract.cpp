#include "agree/extract.hpp"

#include <algorithm>

#include "agree/parallel.hpp"

namespace agree {

std::string_view to_string(LastIntervening l) {
  switch (l) {
    case LastIntervening::None: return "NONE";
    case LastIntervening::Same: return "SAME";
    case LastIntervening::Opposite: return "OPPOSITE";
  }
  return "NONE";
}

namespace {

LastIntervening last_intervening_from_string(std::string_view s) {
  if (s == "NONE") return LastIntervening::None;
  if (s == "SAME") return LastIntervening::Same;
  if (s == "OPPOSITE") return LastIntervening::Opposite;
  throw DataError("unknown last_intervening value: " + std::string(s));
}

nlohmann::json tokens_to_json(const std::vector<PrefixToken>& tokens) {
  auto arr = nlohmann::json::array();
  for (const auto& t : tokens) arr.push_back({t.form, t.pos});
  return arr;
}

std::vector<PrefixToken> tokens_from_json(const nlohmann::json& j) {
  std::vector<PrefixToken> out;
  for (const auto& t : j) out.push_back({t.at(0).get<std::string>(), t.at(1).get<std::string>()});
  return out;
}

// True when `index` lies in the subtree rooted at `ancestor`.
bool dominated_by(const Sentence& s, int index, int ancestor) {
  int cur = index;
  for (std::size_t steps = 0; cur != 0 && steps <= s.size(); ++steps) {
    if (cur == ancestor) return true;
    cur = s.at(cur).head;
  }
  return false;
}

}  // namespace

void to_json(nlohmann::json& j, const AgreementInstance& inst) {
  auto numbers = nlohmann::json::array();
  for (Number n : inst.intervening_numbers) numbers.push_back(to_string(n));
  j = nlohmann::json{
      {"sentence_id", inst.sentence_id},
      {"subject_index", inst.subject_index},
      {"verb_index", inst.verb_index},
      {"subject_number", inst.subject_number ? nlohmann::json(to_string(*inst.subject_number)) : nlohmann::json()},
      {"verb_number", to_string(inst.verb_number)},
      {"prefix", tokens_to_json(inst.prefix)},
      {"distance", inst.distance},
      {"intervening_numbers", numbers},
      {"n_attractors", inst.n_attractors},
      {"homogeneous", inst.homogeneous},
      {"last_intervening", to_string(inst.last_intervening)},
      {"has_rel_clause", inst.has_rel_clause},
      {"has_overt_relativizer", inst.has_overt_relativizer},
      {"subject_pos", inst.subject_pos},
      {"verb_form", inst.verb_form},
      {"verb_pos", inst.verb_pos},
      {"suffix", tokens_to_json(inst.suffix)},
  };
}

void from_json(const nlohmann::json& j, AgreementInstance& inst) {
  inst.sentence_id = j.at("sentence_id").get<std::string>();
  inst.subject_index = j.at("subject_index").get<int>();
  inst.verb_index = j.at("verb_index").get<int>();
  const auto& sn = j.at("subject_number");
  inst.subject_number = sn.is_null() ? std::nullopt
                                     : std::optional<Number>(number_from_string(sn.get<std::string>()));
  inst.verb_number = number_from_string(j.at("verb_number").get<std::string>());
  inst.prefix = tokens_from_json(j.at("prefix"));
  inst.distance = j.at("distance").get<int>();
  inst.intervening_numbers.clear();
  for (const auto& n : j.at("intervening_numbers")) inst.intervening_numbers.push_back(number_from_string(n.get<std::string>()));
  inst.n_attractors = j.at("n_attractors").get<int>();
  inst.homogeneous = j.at("homogeneous").get<bool>();
  inst.last_intervening = last_intervening_from_string(j.at("last_intervening").get<std::string>());
  inst.has_rel_clause = j.at("has_rel_clause").get<bool>();
  inst.has_overt_relativizer = j.at("has_overt_relativizer").get<bool>();
  inst.subject_pos = j.value("subject_pos", std::string{});
  inst.verb_form = j.value("verb_form", std::string{});
  inst.verb_pos = j.value("verb_pos", std::string{});
  inst.suffix = j.contains("suffix") ? tokens_from_json(j.at("suffix")) : std::vector<PrefixToken>{};
}

std::optional<Number> noun_number(std::string_view pos) {
  if (pos == "NN" || pos == "NNP") return Number::Singular;
  if (pos == "NNS" || pos == "NNPS") return Number::Plural;
  return std::nullopt;
}

std::optional<Number> pronoun_number(std::string_view lower_form) {
  static constexpr std::string_view singular[] = {"he", "she", "it", "this", "that"};
  static constexpr std::string_view plural[] = {"they", "these", "those", "we"};
  if (std::find(std::begin(singular), std::end(singular), lower_form) != std::end(singular)) return Number::Singular;
  if (std::find(std::begin(plural), std::end(plural), lower_form) != std::end(plural)) return Number::Plural;
  return std::nullopt;
}

std::optional<Number> verb_number(std::string_view pos) {
  if (pos == "VBZ") return Number::Singular;
  if (pos == "VBP") return Number::Plural;
  return std::nullopt;
}

std::vector<std::pair<int, int>> find_dependencies(const Sentence& s, const ExtractOptions& options) {
  std::vector<std::pair<int, int>> pairs;
  for (const Token& subj : s.tokens) {
    if (subj.deprel != options.subject_label || subj.head == 0) continue;
    const Token& verb = s.at(subj.head);
    if (!verb_number(verb.pos)) continue;
    if (subj.index < verb.index) pairs.emplace_back(subj.index, verb.index);
  }
  std::sort(pairs.begin(), pairs.end(), [](auto a, auto b) { return a.second < b.second || (a.second == b.second && a.first < b.first); });
  return pairs;
}

std::optional<std::pair<int, int>> select_one(const std::vector<std::pair<int, int>>& pairs,
                                              std::uint64_t seed, std::string_view sentence_id) {
  if (pairs.empty()) return std::nullopt;
  if (pairs.size() == 1) return pairs.front();
  // Multiply-shift maps the hash onto [0, n) without modulo bias.
  const std::uint64_t h = stable_hash(sentence_id, seed, HashStream::Select);
  const auto pick = static_cast<std::size_t>((static_cast<unsigned __int128>(h) * pairs.size()) >> 64);
  return pairs[pick];
}

AgreementInstance annotate(const Sentence& s, int subject_index, int verb_index, const ExtractOptions& options) {
  const Token& subj = s.at(subject_index);
  const Token& verb = s.at(verb_index);

  AgreementInstance inst;
  inst.sentence_id = s.id;
  inst.subject_index = subject_index;
  inst.verb_index = verb_index;
  inst.subject_pos = subj.pos;
  inst.subject_number = noun_number(subj.pos);
  if (!inst.subject_number && subj.pos == "PRP") inst.subject_number = pronoun_number(subj.lower);
  inst.verb_number = verb_number(verb.pos).value_or(Number::Singular);
  inst.verb_form = verb.form;
  inst.verb_pos = verb.pos;
  for (const Token& t : s.tokens) {
    if (t.index < verb_index) inst.prefix.push_back({t.form, t.pos});
    if (t.index > verb_index) inst.suffix.push_back({t.form, t.pos});
  }
  inst.distance = verb_index - subject_index - 1;

  for (int i = subject_index + 1; i < verb_index; ++i) {
    if (auto n = noun_number(s.at(i).pos)) inst.intervening_numbers.push_back(*n);
  }
  // Attractors are defined against the subject; numberless subjects fall back
  // to the verb's number, which is what the subject carries in grammatical text.
  const Number reference = inst.subject_number.value_or(inst.verb_number);
  inst.n_attractors = static_cast<int>(
      std::count_if(inst.intervening_numbers.begin(), inst.intervening_numbers.end(),
                    [&](Number n) { return n != reference; }));
  inst.homogeneous = std::all_of(inst.intervening_numbers.begin(), inst.intervening_numbers.end(),
                                 [&](Number n) { return inst.intervening_numbers.empty() || n == inst.intervening_numbers.front(); });
  if (!inst.intervening_numbers.empty()) {
    inst.last_intervening = inst.intervening_numbers.back() == reference ? LastIntervening::Same : LastIntervening::Opposite;
  }

  for (int i = subject_index + 1; i < verb_index; ++i) {
    const Token& t = s.at(i);
    if (!options.rc_labels.count(t.deprel) || t.head == 0) continue;
    if (!dominated_by(s, t.head, subject_index)) continue;
    inst.has_rel_clause = true;
    for (int j = 1; j < t.index; ++j) {
      const Token& r = s.at(j);
      if (!dominated_by(s, j, t.index)) continue;
      if (options.relativizer_tags.count(r.pos) || options.relativizer_forms.count(r.lower)) {
        inst.has_overt_relativizer = true;
      }
    }
  }
  return inst;
}

Extraction extract_instances(const std::vector<Sentence>& sentences, const ExtractOptions& options,
                             std::uint64_t seed, std::size_t workers) {
  std::vector<std::optional<AgreementInstance>> slots(sentences.size());
  std::vector<std::size_t> candidates(sentences.size(), 0);
  parallel_for(sentences.size(), workers, [&](std::size_t i) {
    const auto pairs = find_dependencies(sentences[i], options);
    candidates[i] = pairs.size();
    if (auto pick = select_one(pairs, seed, sentences[i].id)) {
      slots[i] = annotate(sentences[i], pick->first, pick->second, options);
    }
  });

  Extraction out;
  auto& st = out.stats;
  st.sentences = sentences.size();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    st.candidate_dependencies += candidates[i];
    if (!slots[i]) continue;
    ++st.sentences_with_dependency;
    const auto& inst = *slots[i];
    if (!inst.subject_number) {
      ++st.numberless_subjects;
    } else {
      ++(*inst.subject_number == Number::Singular ? st.singular_subjects : st.plural_subjects);
      const auto bin = std::min<std::size_t>(static_cast<std::size_t>(inst.n_attractors), st.attractor_histogram.size() - 1);
      ++st.attractor_histogram[bin];
    }
    ++(inst.verb_number == Number::Singular ? st.singular_verbs : st.plural_verbs);
    out.instances.push_back(std::move(*slots[i]));
  }
  st.instances = out.instances.size();
  return out;
}

nlohmann::json to_json(const ExtractStats& st) {
  const double with_number = static_cast<double>(st.singular_subjects + st.plural_subjects);
  return {
      {"sentences", st.sentences},
      {"sentences_with_dependency", st.sentences_with_dependency},
      {"candidate_dependencies", st.candidate_dependencies},
      {"instances", st.instances},
      {"singular_subjects", st.singular_subjects},
      {"plural_subjects", st.plural_subjects},
      {"numberless_subjects", st.numberless_subjects},
      {"singular_subject_fraction", with_number > 0 ? static_cast<double>(st.singular_subjects) / with_number : 0.0},
      {"singular_verbs", st.singular_verbs},
      {"plural_verbs", st.plural_verbs},
      {"attractor_histogram", st.attractor_histogram},
  };
}

}  // namespace agree

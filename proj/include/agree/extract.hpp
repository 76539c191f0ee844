#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "agree/common.hpp"
#include "agree/corpus.hpp"
#include "json.hpp"

namespace agree {

enum class LastIntervening : std::uint8_t { None, Same, Opposite };
std::string_view to_string(LastIntervening l);

struct PrefixToken {
  std::string form;
  std::string pos;
  bool operator==(const PrefixToken&) const = default;
};

struct AgreementInstance {
  std::string sentence_id;
  int subject_index = 0;
  int verb_index = 0;
  std::string subject_pos;
  // Absent when the subject head carries no number (e.g. "you", "which").
  std::optional<Number> subject_number;
  Number verb_number = Number::Singular;
  std::string verb_form;
  std::string verb_pos;
  std::vector<PrefixToken> prefix;  // tokens before the verb
  std::vector<PrefixToken> suffix;  // tokens after the verb
  int distance = 0;
  std::vector<Number> intervening_numbers;
  int n_attractors = 0;
  bool homogeneous = true;
  LastIntervening last_intervening = LastIntervening::None;
  bool has_rel_clause = false;
  bool has_overt_relativizer = false;

  std::string id() const { return sentence_id + "#" + std::to_string(verb_index); }
};

void to_json(nlohmann::json& j, const AgreementInstance& inst);
void from_json(const nlohmann::json& j, AgreementInstance& inst);

struct ExtractOptions {
  std::string subject_label = "nsubj";
  std::set<std::string> rc_labels = {"rcmod", "relcl", "acl:relcl"};
  std::set<std::string> relativizer_tags = {"WDT", "WP", "WP$"};
  std::set<std::string> relativizer_forms = {"that"};
};

// NN, NNP -> singular; NNS, NNPS -> plural; anything else -> none.
std::optional<Number> noun_number(std::string_view pos);
// Number of a personal pronoun by form; "you" and "i" carry none.
std::optional<Number> pronoun_number(std::string_view lower_form);
// VBZ -> singular, VBP -> plural.
std::optional<Number> verb_number(std::string_view pos);

std::vector<std::pair<int, int>> find_dependencies(const Sentence& s, const ExtractOptions& options = {});

std::optional<std::pair<int, int>> select_one(const std::vector<std::pair<int, int>>& pairs,
                                              std::uint64_t seed, std::string_view sentence_id);

AgreementInstance annotate(const Sentence& s, int subject_index, int verb_index,
                           const ExtractOptions& options = {});

struct ExtractStats {
  std::size_t sentences = 0;
  std::size_t sentences_with_dependency = 0;
  std::size_t candidate_dependencies = 0;
  std::size_t instances = 0;
  std::size_t singular_subjects = 0;
  std::size_t plural_subjects = 0;
  std::size_t numberless_subjects = 0;
  std::size_t singular_verbs = 0;
  std::size_t plural_verbs = 0;
  // Index k counts instances with k attractors; the last bin is open-ended.
  std::vector<std::size_t> attractor_histogram = std::vector<std::size_t>(5, 0);
};

struct Extraction {
  std::vector<AgreementInstance> instances;
  ExtractStats stats;
};

// One randomly selected dependency per sentence, in sentence order.
Extraction extract_instances(const std::vector<Sentence>& sentences, const ExtractOptions& options,
                             std::uint64_t seed, std::size_t workers = 1);

nlohmann::json to_json(const ExtractStats& stats);

}  // namespace agree

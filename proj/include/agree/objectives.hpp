#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agree/common.hpp"
#include "agree/corpus.hpp"
#include "agree/extract.hpp"
#include "agree/vocab.hpp"
#include "json.hpp"

namespace agree {

enum class Objective { NumberPred, VerbInflect, Grammaticality, LanguageModel, NounsOnlyCommon, NounsOnlyAll };

std::string_view to_string(Objective o);
Objective objective_from_string(std::string_view s);
bool is_classification(Objective o);

enum class Judgement : int { Grammatical = 0, Ungrammatical = 1 };
std::string_view to_string(Judgement j);

// Classification targets are stored as class indices: Number for the
// number-style objectives, Judgement for GRAMMATICALITY. LM examples carry the
// next-token sequence instead.
struct ObjectiveExample {
  Objective objective = Objective::NumberPred;
  std::vector<int> input_ids;
  int label = 0;
  std::vector<int> next_ids;
  std::string instance_id;

  bool operator==(const ObjectiveExample&) const = default;
};

nlohmann::json to_json(const ObjectiveExample& ex);
ObjectiveExample example_from_json(const nlohmann::json& j);

// Bidirectional singular <-> plural map for present-tense verb forms (lowercase).
class VerbFormTable {
 public:
  // False if either side is already mapped to something else.
  bool add(const std::string& singular, const std::string& plural);
  std::optional<std::string> plural_of(std::string_view singular) const;
  std::optional<std::string> singular_of(std::string_view plural) const;
  // Opposite-number form of `form`, looked up on the side given by `number`.
  std::optional<std::string> flip(std::string_view form, Number number) const;
  std::size_t size() const { return to_plural_.size(); }
  const std::map<std::string, std::string>& pairs() const { return to_plural_; }

  nlohmann::json to_json() const;
  static VerbFormTable from_json(const nlohmann::json& j);

 private:
  std::map<std::string, std::string> to_plural_;
  std::map<std::string, std::string> to_singular_;
};

// Regular third-person singular of a base form: fly -> flies, watch -> watches,
// go -> goes, walk -> walks. Irregular pairs are handled by the table builder.
std::string regular_singular(std::string_view plural);

VerbFormTable build_verb_form_table(const std::vector<Sentence>& train);

// Deterministic per-instance coin: true means the verb is flipped.
bool grammaticality_coin(std::string_view instance_id);

ObjectiveExample make_number_pred(const AgreementInstance& inst, const Vocab& vocab);
std::optional<ObjectiveExample> make_verb_inflect(const AgreementInstance& inst, const Vocab& vocab,
                                                  const VerbFormTable& table);
// The full sentence (verb flipped when `flip` is true).
std::optional<ObjectiveExample> make_grammaticality(const AgreementInstance& inst, const Vocab& vocab,
                                                    const VerbFormTable& table, bool flip);
inline std::optional<ObjectiveExample> make_grammaticality(const AgreementInstance& inst, const Vocab& vocab,
                                                           const VerbFormTable& table) {
  return make_grammaticality(inst, vocab, table, grammaticality_coin(inst.id()));
}
ObjectiveExample make_lm(const Sentence& s, const Vocab& vocab);

enum class NounMode { Common, All };
ObjectiveExample make_nouns_only(const AgreementInstance& inst, const Vocab& vocab, NounMode mode);

// The sentence tokens of an instance with the verb replaced by its opposite form.
std::optional<std::vector<PrefixToken>> flipped_sentence(const AgreementInstance& inst, const VerbFormTable& table);
std::vector<PrefixToken> full_sentence(const AgreementInstance& inst);

// Instances with at least one intervening noun.
std::vector<AgreementInstance> hard_only(const std::vector<AgreementInstance>& instances);

struct Dataset {
  std::vector<ObjectiveExample> examples;
  std::size_t skipped = 0;
};

// Builds examples of a classification objective, skipping (and counting)
// instances the objective cannot express.
Dataset build_dataset(Objective objective, const std::vector<AgreementInstance>& instances, const Vocab& vocab,
                      const VerbFormTable& table);
Dataset build_lm_dataset(const std::vector<Sentence>& sentences, const Vocab& vocab);

}  // namespace agree

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agree/checkpoint.hpp"
#include "agree/extract.hpp"
#include "agree/objectives.hpp"
#include "json.hpp"

namespace agree {

// Wilson score interval for a binomial proportion errors / n.
std::pair<double, double> binomial_ci(std::size_t errors, std::size_t n, double level = 0.95);

struct Stratum {
  std::size_t n = 0;
  std::size_t errors = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Error rates for the whole set and for each stratum. Strata are kept in a
// fixed canonical order; empty strata are omitted.
//
// Keys:
//   overall
//   subject_number=S                           S in SINGULAR, PLURAL
//   distance=K                                 no intervening nouns; K in 0..14, 15+
//   last_intervening=L,subject_number=S        L in NONE, SAME, OPPOSITE
//   n_attractors=K                             homogeneous intervention; K in 0..4
//   n_attractors=0,no_intervening              the stricter reading of the 0 bin
//   rc_condition=C                             one attractor, no other interveners;
//                                              C in NO_RC, OVERT_RC, REDUCED_RC
// Strata that need the subject's number skip instances whose subject has none.
struct EvalReport {
  std::vector<std::pair<std::string, Stratum>> strata;
  std::size_t excluded = 0;

  const Stratum* find(std::string_view key) const;
  const Stratum& overall() const;
  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  std::string to_csv() const;
};

// Outcome per instance: true = correct, false = error, nullopt = excluded.
EvalReport stratify_outcomes(std::span<const std::optional<bool>> correct,
                             const std::vector<AgreementInstance>& instances);
// Number predictions scored against each instance's verb number.
EvalReport stratify(std::span<const std::optional<Number>> predictions,
                    const std::vector<AgreementInstance>& instances);

// PLURAL iff the plural-form score is strictly higher; ties go to SINGULAR.
Number choose_number(double singular_score, double plural_score);

// Compares the LM's probabilities for the attested verb form and its flipped
// form right after the prefix. nullopt when the instance cannot be scored
// (no flipped form, or either form is not a vocabulary word).
std::optional<Number> lm_compare(const nn::Model<double>& model, const Vocab& vocab, const AgreementInstance& inst,
                                 const VerbFormTable& table);

// Per-instance outcomes of a checkpoint on its own objective.
std::vector<std::optional<bool>> evaluate_outcomes(const Checkpoint& ck, const std::vector<AgreementInstance>& instances,
                                                   std::size_t workers = 1);

EvalReport majority_baseline(const std::vector<AgreementInstance>& instances);
EvalReport recency_baseline(const std::vector<AgreementInstance>& instances);
// Number of the last noun in the prefix; SINGULAR when there is none.
Number recency_prediction(const AgreementInstance& inst);

struct ExternalScore {
  double logp_correct = 0.0;
  double logp_flipped = 0.0;
};
using ExternalScoreFile = std::map<std::string, ExternalScore>;

ExternalScoreFile read_score_file(const std::string& path);
// Prediction from two log-probabilities: the attested form's number when it
// scores higher, the flipped number when lower, SINGULAR on ties.
Number external_prediction(const AgreementInstance& inst, const ExternalScore& score);
EvalReport eval_external(const ExternalScoreFile& scores, const std::vector<AgreementInstance>& instances);

// Up to `per_bin` instances per attractor count 0..4 (homogeneous, subject
// number known), chosen by a seeded hash of the instance id.
std::vector<AgreementInstance> sample_by_attractors(const std::vector<AgreementInstance>& instances,
                                                    std::size_t per_bin = 500, std::uint64_t seed = 0);

// Pooled counts across runs alongside the mean of per-run error rates.
struct MergedStratum {
  Stratum pooled;
  double mean_rate = 0.0;
  std::size_t runs = 0;
};
struct MergedReport {
  std::vector<std::pair<std::string, MergedStratum>> strata;
  std::size_t runs = 0;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};
MergedReport merge_reports(const std::vector<EvalReport>& reports);

}  // namespace agree

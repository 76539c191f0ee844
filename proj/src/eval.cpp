#include "agree/eval.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "agree/parallel.hpp"
#include "agree/train.hpp"

namespace agree {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8f", v);
  return buf;
}

Stratum finish(std::size_t n, std::size_t errors) {
  Stratum s{n, errors, 0.0, 0.0, 0.0};
  s.rate = static_cast<double>(errors) / static_cast<double>(n);
  std::tie(s.ci_low, s.ci_high) = binomial_ci(errors, n);
  return s;
}

class Tally {
 public:
  void declare(std::string key) {
    order_.push_back(key);
    counts_.emplace(std::move(key), std::pair<std::size_t, std::size_t>{0, 0});
  }
  void add(const std::string& key, bool correct) {
    auto& c = counts_.at(key);
    ++c.first;
    if (!correct) ++c.second;
  }
  EvalReport report(std::size_t excluded) const {
    EvalReport r;
    r.excluded = excluded;
    for (const auto& key : order_) {
      const auto& [n, errors] = counts_.at(key);
      if (n > 0) r.strata.emplace_back(key, finish(n, errors));
    }
    return r;
  }

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts_;
};

std::string subject_key(Number n) { return "subject_number=" + std::string(to_string(n)); }

}  // namespace

std::pair<double, double> binomial_ci(std::size_t errors, std::size_t n, double level) {
  if (n == 0) throw std::invalid_argument("binomial_ci: n must be positive");
  if (errors > n) throw std::invalid_argument("binomial_ci: errors exceed n");
  const double z = boost::math::quantile(boost::math::normal(), 1.0 - (1.0 - level) / 2.0);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(errors) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  double low = std::clamp(center - half, 0.0, 1.0);
  double high = std::clamp(center + half, 0.0, 1.0);
  if (errors == 0) low = 0.0;
  if (errors == n) high = 1.0;
  return {low, high};
}

const Stratum* EvalReport::find(std::string_view key) const {
  for (const auto& [k, s] : strata)
    if (k == key) return &s;
  return nullptr;
}

const Stratum& EvalReport::overall() const {
  static const Stratum empty{};
  const Stratum* s = find("overall");
  return s ? *s : empty;
}

nlohmann::json EvalReport::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& [k, s] : strata) {
    arr.push_back({{"key", k}, {"n", s.n}, {"errors", s.errors}, {"rate", s.rate}, {"ci_low", s.ci_low}, {"ci_high", s.ci_high}});
  }
  return {{"overall_error", overall().rate}, {"excluded", excluded}, {"strata", arr}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.excluded = j.value("excluded", std::size_t{0});
  for (const auto& s : j.at("strata")) {
    r.strata.emplace_back(s.at("key").get<std::string>(),
                          Stratum{s.at("n").get<std::size_t>(), s.at("errors").get<std::size_t>(), s.at("rate").get<double>(),
                                  s.at("ci_low").get<double>(), s.at("ci_high").get<double>()});
  }
  return r;
}

std::string EvalReport::to_csv() const {
  std::string out = "key,n,errors,rate,ci_low,ci_high\n";
  for (const auto& [k, s] : strata) {
    out += "\"" + k + "\"," + std::to_string(s.n) + "," + std::to_string(s.errors) + "," + fmt_double(s.rate) + "," +
           fmt_double(s.ci_low) + "," + fmt_double(s.ci_high) + "\n";
  }
  return out;
}

EvalReport stratify_outcomes(std::span<const std::optional<bool>> correct,
                             const std::vector<AgreementInstance>& instances) {
  if (correct.size() != instances.size()) throw std::invalid_argument("stratify: predictions and instances differ in length");
  Tally t;
  t.declare("overall");
  for (Number n : {Number::Singular, Number::Plural}) t.declare(subject_key(n));
  for (int d = 0; d < 15; ++d) t.declare("distance=" + std::to_string(d));
  t.declare("distance=15+");
  for (auto l : {LastIntervening::None, LastIntervening::Same, LastIntervening::Opposite})
    for (Number n : {Number::Singular, Number::Plural})
      t.declare("last_intervening=" + std::string(to_string(l)) + "," + subject_key(n));
  for (int k = 0; k <= 4; ++k) t.declare("n_attractors=" + std::to_string(k));
  t.declare("n_attractors=0,no_intervening");
  for (const char* c : {"NO_RC", "OVERT_RC", "REDUCED_RC"}) t.declare(std::string("rc_condition=") + c);

  std::size_t excluded = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!correct[i]) {
      ++excluded;
      continue;
    }
    const bool ok = *correct[i];
    const auto& inst = instances[i];
    t.add("overall", ok);
    if (inst.intervening_numbers.empty()) {
      t.add(inst.distance >= 15 ? "distance=15+" : "distance=" + std::to_string(inst.distance), ok);
    }
    if (!inst.subject_number) continue;
    t.add(subject_key(*inst.subject_number), ok);
    t.add("last_intervening=" + std::string(to_string(inst.last_intervening)) + "," + subject_key(*inst.subject_number), ok);
    if (inst.homogeneous && inst.n_attractors <= 4) {
      t.add("n_attractors=" + std::to_string(inst.n_attractors), ok);
      if (inst.intervening_numbers.empty()) t.add("n_attractors=0,no_intervening", ok);
    }
    if (inst.n_attractors == 1 && inst.intervening_numbers.size() == 1) {
      const char* c = !inst.has_rel_clause ? "NO_RC" : inst.has_overt_relativizer ? "OVERT_RC" : "REDUCED_RC";
      t.add(std::string("rc_condition=") + c, ok);
    }
  }
  return t.report(excluded);
}

EvalReport stratify(std::span<const std::optional<Number>> predictions, const std::vector<AgreementInstance>& instances) {
  if (predictions.size() != instances.size()) throw std::invalid_argument("stratify: predictions and instances differ in length");
  std::vector<std::optional<bool>> correct(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i]) correct[i] = *predictions[i] == instances[i].verb_number;
  return stratify_outcomes(correct, instances);
}

Number choose_number(double singular_score, double plural_score) {
  return plural_score > singular_score ? Number::Plural : Number::Singular;
}

std::optional<Number> lm_compare(const nn::Model<double>& model, const Vocab& vocab, const AgreementInstance& inst,
                                 const VerbFormTable& table) {
  const auto flipped = table.flip(inst.verb_form, inst.verb_number);
  if (!flipped) return std::nullopt;
  const auto correct_id = vocab.word_id(inst.verb_form);
  const auto flipped_id = vocab.word_id(*flipped);
  if (!correct_id || !flipped_id || *correct_id == *flipped_id) return std::nullopt;

  std::vector<int> ids{Vocab::kBos};
  for (const auto& t : inst.prefix) ids.push_back(vocab.id(t.form, t.pos));
  const auto dist = model.infer(ids).distributions.back();
  const double p_correct = dist(*correct_id);
  const double p_flipped = dist(*flipped_id);
  return inst.verb_number == Number::Singular ? choose_number(p_correct, p_flipped) : choose_number(p_flipped, p_correct);
}

std::vector<std::optional<bool>> evaluate_outcomes(const Checkpoint& ck, const std::vector<AgreementInstance>& instances,
                                                   std::size_t workers) {
  std::vector<std::optional<bool>> out(instances.size());
  parallel_for(instances.size(), workers, [&](std::size_t i) {
    const auto& inst = instances[i];
    std::optional<ObjectiveExample> ex;
    switch (ck.objective) {
      case Objective::LanguageModel:
        if (auto n = lm_compare(ck.model, ck.vocab, inst, ck.verb_forms)) out[i] = *n == inst.verb_number;
        return;
      case Objective::NumberPred: ex = make_number_pred(inst, ck.vocab); break;
      case Objective::VerbInflect: ex = make_verb_inflect(inst, ck.vocab, ck.verb_forms); break;
      case Objective::Grammaticality: ex = make_grammaticality(inst, ck.vocab, ck.verb_forms); break;
      case Objective::NounsOnlyCommon: ex = make_nouns_only(inst, ck.vocab, NounMode::Common); break;
      case Objective::NounsOnlyAll: ex = make_nouns_only(inst, ck.vocab, NounMode::All); break;
    }
    if (ex) out[i] = classify(ck.model, *ex) == ex->label;
  });
  return out;
}

EvalReport majority_baseline(const std::vector<AgreementInstance>& instances) {
  std::vector<std::optional<Number>> preds(instances.size(), Number::Singular);
  return stratify(preds, instances);
}

Number recency_prediction(const AgreementInstance& inst) {
  for (auto it = inst.prefix.rbegin(); it != inst.prefix.rend(); ++it)
    if (auto n = noun_number(it->pos)) return *n;
  return Number::Singular;
}

EvalReport recency_baseline(const std::vector<AgreementInstance>& instances) {
  std::vector<std::optional<Number>> preds;
  preds.reserve(instances.size());
  for (const auto& inst : instances) preds.push_back(recency_prediction(inst));
  return stratify(preds, instances);
}

ExternalScoreFile read_score_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read score file: " + path);
  ExternalScoreFile scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ExternalScore s{j.at("logp_correct").get<double>(), j.at("logp_flipped").get<double>()};
      if (!std::isfinite(s.logp_correct) || !std::isfinite(s.logp_flipped))
        throw DataError("non-finite log-probability");
      scores[j.at("instance_id").get<std::string>()] = s;
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad score record: " + e.what());
    }
  }
  return scores;
}

Number external_prediction(const AgreementInstance& inst, const ExternalScore& score) {
  if (score.logp_correct == score.logp_flipped) return Number::Singular;
  return score.logp_correct > score.logp_flipped ? inst.verb_number : flip(inst.verb_number);
}

EvalReport eval_external(const ExternalScoreFile& scores, const std::vector<AgreementInstance>& instances) {
  std::vector<std::optional<Number>> preds(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto it = scores.find(instances[i].id());
    if (it != scores.end()) preds[i] = external_prediction(instances[i], it->second);
  }
  return stratify(preds, instances);
}

std::vector<AgreementInstance> sample_by_attractors(const std::vector<AgreementInstance>& instances, std::size_t per_bin,
                                                    std::uint64_t seed) {
  std::vector<AgreementInstance> out;
  for (int k = 0; k <= 4; ++k) {
    std::vector<std::pair<std::uint64_t, std::size_t>> bin;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      if (inst.subject_number && inst.homogeneous && inst.n_attractors == k)
        bin.emplace_back(stable_hash(inst.id(), seed, HashStream::Sample), i);
    }
    std::sort(bin.begin(), bin.end());
    if (bin.size() > per_bin) bin.resize(per_bin);
    std::sort(bin.begin(), bin.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [h, i] : bin) out.push_back(instances[i]);
  }
  return out;
}

MergedReport merge_reports(const std::vector<EvalReport>& reports) {
  MergedReport merged;
  merged.runs = reports.size();
  std::vector<std::string> order;
  std::map<std::string, std::tuple<std::size_t, std::size_t, double, std::size_t>> acc;
  for (const auto& r : reports) {
    for (const auto& [key, s] : r.strata) {
      auto [it, inserted] = acc.try_emplace(key, 0, 0, 0.0, 0);
      if (inserted) order.push_back(key);
      auto& [n, errors, rate_sum, runs] = it->second;
      n += s.n;
      errors += s.errors;
      rate_sum += s.rate;
      ++runs;
    }
  }
  for (const auto& key : order) {
    const auto& [n, errors, rate_sum, runs] = acc.at(key);
    merged.strata.emplace_back(key, MergedStratum{finish(n, errors), rate_sum / static_cast<double>(runs), runs});
  }
  return merged;
}

nlohmann::json MergedReport::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& [k, m] : strata) {
    arr.push_back({{"key", k}, {"n", m.pooled.n}, {"errors", m.pooled.errors}, {"rate", m.pooled.rate},
                   {"ci_low", m.pooled.ci_low}, {"ci_high", m.pooled.ci_high}, {"mean_rate", m.mean_rate}, {"runs", m.runs}});
  }
  return {{"runs", runs}, {"strata", arr}};
}

std::string MergedReport::to_csv() const {
  std::string out = "key,n,errors,rate,ci_low,ci_high,mean_rate,runs\n";
  for (const auto& [k, m] : strata) {
    out += "\"" + k + "\"," + std::to_string(m.pooled.n) + "," + std::to_string(m.pooled.errors) + "," +
           fmt_double(m.pooled.rate) + "," + fmt_double(m.pooled.ci_low) + "," + fmt_double(m.pooled.ci_high) + "," +
           fmt_double(m.mean_rate) + "," + std::to_string(m.runs) + "\n";
  }
  return out;
}

}  // namespace agree

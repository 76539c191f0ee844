#include <cmath>
#include <random>

#include "agree/checkpoint.hpp"
#include "agree/eval.hpp"
#include "agree/pipeline.hpp"
#include "agree/synth.hpp"
#include "agree/train.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agree;

namespace {

// Closed-form Wilson score interval at 95%.
std::pair<double, double> wilson(double errors, double n) {
  const double z = 1.959963984540054;
  const double p = errors / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  return {center - half, center + half};
}

std::vector<AgreementInstance> fixture_instances() {
  auto corpus = read_conll(fixture("annotated.conll"));
  std::vector<AgreementInstance> out;
  for (const auto& s : corpus.sentences)
    for (auto [subj, verb] : find_dependencies(s)) out.push_back(annotate(s, subj, verb));
  return out;
}

ObjectiveExample toy(int token, int label) {
  ObjectiveExample ex;
  ex.input_ids = {5, token, 5};
  ex.label = label;
  return ex;
}

}  // namespace

TEST_CASE("Wilson interval matches the closed form") {
  for (auto [e, n] : {std::pair{0, 100}, {50, 100}, {100, 100}, {3, 17}, {1, 1}}) {
    auto [lo, hi] = binomial_ci(static_cast<std::size_t>(e), static_cast<std::size_t>(n));
    auto [elo, ehi] = wilson(e, n);
    CHECK(std::abs(lo - elo) < 1e-10);
    CHECK(std::abs(hi - ehi) < 1e-10);
    CHECK(lo <= double(e) / n);
    CHECK(hi >= double(e) / n);
  }
  auto [lo, hi] = binomial_ci(0, 100);
  CHECK(lo == 0.0);
  CHECK(hi == doctest::Approx(0.0370).epsilon(1e-3));
}

TEST_CASE("early stopping picks the best epoch") {
  EarlyStopper s(1);
  CHECK_FALSE(s.update(0.30));
  CHECK_FALSE(s.update(0.20));
  CHECK(s.improved());
  CHECK(s.update(0.25));
  CHECK(s.best_epoch() == 2);

  EarlyStopper patient(3);
  for (double e : {0.5, 0.4, 0.45, 0.41}) CHECK_FALSE(patient.update(e));
  CHECK(patient.update(0.42));
  CHECK(patient.best_epoch() == 2);
}

TEST_CASE("argmax ties go to the first class") {
  nn::Vector<double> d(2);
  d << 0.5, 0.5;
  CHECK(argmax_label(d) == 0);
  d << 0.4, 0.6;
  CHECK(argmax_label(d) == 1);
  CHECK(choose_number(0.3, 0.3) == Number::Singular);
}

TEST_CASE("toy separable task is learned within five epochs") {
  std::vector<ObjectiveExample> data;
  for (int i = 0; i < 200; ++i) data.push_back(toy(6 + i % 2, i % 2));
  TrainConfig c;
  c.embed = 8;
  c.hidden = 8;
  c.adam.lr = 0.05;
  c.max_epochs = 5;
  c.patience = 5;
  auto r = train(c, 8, data, data);
  REQUIRE(r.log.size() == 5);
  CHECK(validation_error(r.model, data) == 0.0);
  CHECK(r.log.back().train_loss < r.log.front().train_loss);
}

TEST_CASE("training is deterministic for a fixed seed") {
  std::vector<ObjectiveExample> data;
  for (int i = 0; i < 64; ++i) data.push_back(toy(6 + i % 2, i % 2));
  TrainConfig c;
  c.embed = 4;
  c.hidden = 4;
  c.max_epochs = 3;
  auto a = train(c, 8, data, data);
  auto b = train(c, 8, data, data);
  for (std::size_t p = 0; p < a.model.params().size(); ++p)
    CHECK((a.model.params().value(p).array() == b.model.params().value(p).array()).all());
  CHECK(to_json(a.log) == to_json(b.log));

  c.seed = 2;
  auto other = train(c, 8, data, data);
  CHECK_FALSE((other.model.params().value(0).array() == a.model.params().value(0).array()).all());
}

TEST_CASE("training rejects a non-finite loss") {
  std::vector<ObjectiveExample> data{toy(6, 0), toy(7, 1)};
  TrainConfig c;
  c.embed = 2;
  c.hidden = 2;
  c.adam.lr = std::numeric_limits<double>::quiet_NaN();
  c.max_epochs = 3;
  CHECK_THROWS_AS(train(c, 8, data, data), NumericError);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  auto sentences = generate_synthetic(300);
  auto ex = extract_instances(sentences, {}, 0);
  Resources res = build_resources(sentences, 1000);
  auto ds = objective_dataset(Objective::NumberPred, ex.instances, sentences, res, false);
  TrainConfig c;
  c.embed = 6;
  c.hidden = 5;
  c.max_epochs = 1;
  auto run = train_run(c, res, ds, ds);

  TempDir dir;
  save_checkpoint(run.checkpoint, dir.file("ck.json"));
  Checkpoint back = load_checkpoint(dir.file("ck.json"));
  const auto& pa = run.checkpoint.model.params();
  const auto& pb = back.model.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t p = 0; p < pa.size(); ++p) {
    CHECK(pa.name(p) == pb.name(p));
    CHECK((pa.value(p).array() == pb.value(p).array()).all());
  }
  CHECK(back.vocab.digest() == res.vocab.digest());
  CHECK(back.verb_forms.pairs() == res.verb_forms.pairs());
  CHECK(back.epoch == run.checkpoint.epoch);
  CHECK(to_json(back).dump() == to_json(run.checkpoint).dump());

  auto j = to_json(run.checkpoint);
  j["vocab_digest"] = "0000";
  CHECK_THROWS_AS(checkpoint_from_json(j), DataError);
}

TEST_CASE("stratification agrees with a direct recount") {
  auto sentences = generate_synthetic(4000);
  auto instances = extract_instances(sentences, {}, 0).instances;
  std::mt19937 gen(5);
  std::vector<std::optional<bool>> outcomes(instances.size());
  for (auto& o : outcomes) {
    int r = static_cast<int>(gen() % 10);
    if (r > 0) o = r > 3;
  }
  auto report = stratify_outcomes(outcomes, instances);

  auto recount = [&](auto&& member) {
    Stratum s;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (!outcomes[i] || !member(instances[i])) continue;
      ++s.n;
      s.errors += !*outcomes[i];
    }
    return s;
  };
  auto expect = [&](const std::string& key, auto&& member) {
    CAPTURE(key);
    Stratum s = recount(member);
    const Stratum* got = report.find(key);
    if (s.n == 0) {
      CHECK(got == nullptr);
      return;
    }
    REQUIRE(got);
    CHECK(got->n == s.n);
    CHECK(got->errors == s.errors);
    CHECK(got->rate == doctest::Approx(double(s.errors) / s.n));
  };

  expect("overall", [](const auto&) { return true; });
  for (Number n : {Number::Singular, Number::Plural}) {
    std::string sn(to_string(n));
    expect("subject_number=" + sn, [&](const auto& i) { return i.subject_number == n; });
    for (auto l : {LastIntervening::None, LastIntervening::Same, LastIntervening::Opposite})
      expect("last_intervening=" + std::string(to_string(l)) + ",subject_number=" + sn,
             [&](const auto& i) { return i.subject_number == n && i.last_intervening == l; });
  }
  for (int d = 0; d < 15; ++d)
    expect("distance=" + std::to_string(d),
           [&](const auto& i) { return i.intervening_numbers.empty() && i.distance == d; });
  expect("distance=15+", [](const auto& i) { return i.intervening_numbers.empty() && i.distance >= 15; });
  for (int k = 0; k <= 4; ++k)
    expect("n_attractors=" + std::to_string(k),
           [&](const auto& i) { return i.subject_number && i.homogeneous && i.n_attractors == k; });
  expect("n_attractors=0,no_intervening",
         [](const auto& i) { return i.subject_number && i.intervening_numbers.empty(); });
  auto single = [](const auto& i) { return i.subject_number && i.intervening_numbers.size() == 1 && i.n_attractors == 1; };
  expect("rc_condition=NO_RC", [&](const auto& i) { return single(i) && !i.has_rel_clause; });
  expect("rc_condition=OVERT_RC", [&](const auto& i) { return single(i) && i.has_overt_relativizer; });
  expect("rc_condition=REDUCED_RC",
         [&](const auto& i) { return single(i) && i.has_rel_clause && !i.has_overt_relativizer; });

  std::size_t excluded = 0;
  for (const auto& o : outcomes) excluded += !o;
  CHECK(report.excluded == excluded);
  CHECK(stratify_outcomes(outcomes, instances).to_csv() == report.to_csv());
}

TEST_CASE("report serialization") {
  auto instances = fixture_instances();
  auto r = majority_baseline(instances);
  auto back = EvalReport::from_json(r.to_json());
  CHECK(back.to_csv() == r.to_csv());
  auto csv = r.to_csv();
  CHECK(csv.rfind("key,n,errors,rate,ci_low,ci_high\n", 0) == 0);
  CHECK(csv.find("\"overall\",31,") != std::string::npos);
}

TEST_CASE("baselines on the hand-annotated fixture") {
  auto instances = fixture_instances();
  REQUIRE(instances.size() == 31);

  std::size_t plural = 0;
  for (const auto& i : instances) plural += i.verb_number == Number::Plural;
  auto maj = majority_baseline(instances);
  CHECK(maj.overall().errors == plural);
  CHECK(maj.overall().rate == doctest::Approx(double(plural) / 31.0));

  std::size_t opposite = 0, opposite_wrong = 0, clean = 0, clean_wrong = 0;
  for (const auto& i : instances) {
    bool wrong = recency_prediction(i) != i.verb_number;
    if (i.last_intervening == LastIntervening::Opposite) {
      ++opposite;
      opposite_wrong += wrong;
    }
    if (i.intervening_numbers.empty() && noun_number(i.subject_pos)) {
      ++clean;
      clean_wrong += wrong;
    }
  }
  CHECK(opposite > 5);
  CHECK(opposite_wrong == opposite);
  CHECK(clean > 5);
  CHECK(clean_wrong == 0);

  auto rec = recency_baseline(instances);
  for (const char* key : {"last_intervening=OPPOSITE,subject_number=SINGULAR", "last_intervening=OPPOSITE,subject_number=PLURAL"}) {
    REQUIRE(rec.find(key));
    CHECK(rec.find(key)->rate == 1.0);
  }
}

TEST_CASE("recency falls back to singular without nouns") {
  AgreementInstance i;
  i.prefix = {{"They", "PRP"}};
  i.verb_number = Number::Plural;
  CHECK(recency_prediction(i) == Number::Singular);
}

TEST_CASE("external scores") {
  auto instances = fixture_instances();
  TempDir dir;
  std::string text;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    double correct = k % 3 == 0 ? -5.0 : -1.0;
    text += "{\"instance_id\": \"" + instances[k].id() + "\", \"logp_correct\": " + std::to_string(correct) +
            ", \"logp_flipped\": -2.0}\n";
  }
  auto scores = read_score_file(dir.write("scores.jsonl", text));
  CHECK(scores.size() == instances.size());
  auto r = eval_external(scores, instances);
  CHECK(r.overall().n == instances.size());
  CHECK(r.overall().errors == (instances.size() + 2) / 3);

  AgreementInstance plural;
  plural.verb_number = Number::Plural;
  CHECK(external_prediction(plural, {-1.0, -1.0}) == Number::Singular);
  CHECK(external_prediction(plural, {-1.0, -2.0}) == Number::Plural);
  CHECK(external_prediction(plural, {-3.0, -2.0}) == Number::Singular);

  CHECK_THROWS_AS(read_score_file(dir.write("bad.jsonl", "{\"instance_id\": \"x\", \"logp_correct\": \"a\"}\n")),
                  DataError);
}

TEST_CASE("attractor sampler is seeded and capped") {
  auto sentences = generate_synthetic(5000);
  auto instances = extract_instances(sentences, {}, 0).instances;
  auto a = sample_by_attractors(instances, 100, 3);
  auto b = sample_by_attractors(instances, 100, 3);
  auto c = sample_by_attractors(instances, 100, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id() == b[i].id());
  int bins[5] = {0, 0, 0, 0, 0};
  for (const auto& i : a) {
    CHECK(i.homogeneous);
    ++bins[i.n_attractors];
  }
  CHECK(bins[0] == 100);
  CHECK(bins[1] == 100);
  bool differs = a.size() != c.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i) differs = a[i].id() != c[i].id();
  CHECK(differs);
}

TEST_CASE("merging reports") {
  auto instances = fixture_instances();
  auto maj = majority_baseline(instances);
  auto rec = recency_baseline(instances);

  auto one = merge_reports({maj});
  for (const auto& [key, m] : one.strata) {
    const Stratum* s = maj.find(key);
    REQUIRE(s);
    CHECK(m.pooled.n == s->n);
    CHECK(m.pooled.errors == s->errors);
    CHECK(m.mean_rate == doctest::Approx(s->rate));
    CHECK(m.runs == 1);
  }

  auto two = merge_reports({maj, rec});
  CHECK(two.runs == 2);
  const auto& overall = two.strata.front();
  CHECK(overall.first == "overall");
  CHECK(overall.second.pooled.n == 62);
  CHECK(overall.second.pooled.errors == maj.overall().errors + rec.overall().errors);
  CHECK(overall.second.mean_rate == doctest::Approx((maj.overall().rate + rec.overall().rate) / 2));
  CHECK(two.to_csv().rfind("key,n,errors,rate,ci_low,ci_high,mean_rate,runs\n", 0) == 0);
}

TEST_CASE("language model comparison on a toy corpus") {
  // "the dog barks" / "the dogs bark" in equal measure.
  std::vector<Sentence> sentences;
  for (int i = 0; i < 200; ++i) {
    bool pl = i % 2;
    Sentence s{"lm:" + std::to_string(i),
               {{1, "the", "the", "DT", 2, "det"},
                {2, pl ? "dogs" : "dog", pl ? "dogs" : "dog", pl ? "NNS" : "NN", 3, "nsubj"},
                {3, pl ? "bark" : "barks", pl ? "bark" : "barks", pl ? "VBP" : "VBZ", 0, "root"}}};
    sentences.push_back(s);
  }
  Resources res = build_resources(sentences, 100);
  CHECK(res.verb_forms.plural_of("barks") == "bark");
  auto ds = objective_dataset(Objective::LanguageModel, {}, sentences, res, false);
  TrainConfig c;
  c.objective = Objective::LanguageModel;
  c.embed = 8;
  c.hidden = 8;
  c.adam.lr = 0.02;
  c.max_epochs = 20;
  auto run = train_run(c, res, ds, ds);

  auto ex = extract_instances(sentences, {}, 0).instances;
  REQUIRE(ex.size() == 200);
  for (const auto& inst : ex) CHECK(lm_compare(run.checkpoint.model, res.vocab, inst, res.verb_forms) == inst.verb_number);
  auto outcomes = evaluate_outcomes(run.checkpoint, ex, 2);
  for (const auto& o : outcomes) CHECK(o == true);

  AgreementInstance odd = ex.front();
  odd.verb_form = "growls";
  CHECK_FALSE(lm_compare(run.checkpoint.model, res.vocab, odd, res.verb_forms));
}

TEST_CASE("evaluation does not depend on worker count") {
  auto sentences = generate_synthetic(2000);
  auto ex = extract_instances(sentences, {}, 0).instances;
  Resources res = build_resources(sentences, 1000);
  auto ds = objective_dataset(Objective::NumberPred, ex, sentences, res, false);
  TrainConfig c;
  c.embed = 6;
  c.hidden = 6;
  c.max_epochs = 1;
  auto run = train_run(c, res, ds, ds);
  auto a = stratify_outcomes(evaluate_outcomes(run.checkpoint, ex, 1), ex);
  auto b = stratify_outcomes(evaluate_outcomes(run.checkpoint, ex, 3), ex);
  CHECK(a.to_csv() == b.to_csv());
}

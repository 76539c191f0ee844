#include <algorithm>
#include <fstream>

#include "agree/extract.hpp"
#include "agree/synth.hpp"
#include "agree/vocab.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

using namespace agree;
using nlohmann::json;

namespace {

Sentence parse(const std::string& id, std::initializer_list<std::tuple<const char*, const char*, int, const char*>> rows) {
  Sentence s{id, {}};
  int i = 0;
  for (const auto& [form, pos, head, rel] : rows) s.tokens.push_back({++i, form, to_lower(form), pos, head, rel});
  return s;
}

Sentence keys_sentence() {
  return parse("fig", {{"The", "DT", 2, "det"},
                       {"keys", "NNS", 6, "nsubj"},
                       {"to", "TO", 2, "prep"},
                       {"the", "DT", 5, "det"},
                       {"cabinet", "NN", 3, "pobj"},
                       {"are", "VBP", 0, "root"},
                       {"on", "IN", 6, "prep"},
                       {"the", "DT", 9, "det"},
                       {"table", "NN", 7, "pobj"}});
}

std::optional<Number> number_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return number_from_string(j.get<std::string>());
}

}  // namespace

TEST_CASE("noun, pronoun and verb number from tags") {
  CHECK(noun_number("NNS") == Number::Plural);
  CHECK(noun_number("NNPS") == Number::Plural);
  CHECK(noun_number("NN") == Number::Singular);
  CHECK(noun_number("NNP") == Number::Singular);
  CHECK_FALSE(noun_number("JJ"));
  CHECK_FALSE(noun_number("PRP"));
  CHECK(verb_number("VBZ") == Number::Singular);
  CHECK(verb_number("VBP") == Number::Plural);
  CHECK_FALSE(verb_number("VBD"));
  CHECK(pronoun_number("they") == Number::Plural);
  CHECK(pronoun_number("it") == Number::Singular);
  CHECK_FALSE(pronoun_number("you"));
}

TEST_CASE("the keys to the cabinet") {
  Sentence s = keys_sentence();
  auto deps = find_dependencies(s);
  REQUIRE(deps.size() == 1);
  CHECK(deps[0] == std::pair{2, 6});

  auto inst = annotate(s, 2, 6);
  CHECK(inst.subject_number == Number::Plural);
  CHECK(inst.verb_number == Number::Plural);
  CHECK(inst.distance == 3);
  CHECK(inst.intervening_numbers == std::vector<Number>{Number::Singular});
  CHECK(inst.n_attractors == 1);
  CHECK(inst.homogeneous);
  CHECK(inst.last_intervening == LastIntervening::Opposite);
  CHECK(inst.prefix.size() == 5);
  CHECK(inst.prefix.back().form == "cabinet");
  CHECK(inst.suffix.size() == 3);
  CHECK(inst.id() == "fig#6");
}

TEST_CASE("no present-tense verb, no dependencies") {
  Sentence s = parse("past", {{"Dogs", "NNS", 2, "nsubj"}, {"barked", "VBD", 0, "root"}});
  CHECK(find_dependencies(s).empty());
}

TEST_CASE("adjacent subject and verb") {
  Sentence s = parse("adj", {{"Dogs", "NNS", 2, "nsubj"}, {"bark", "VBP", 0, "root"}});
  auto inst = annotate(s, 1, 2);
  CHECK(inst.distance == 0);
  CHECK(inst.intervening_numbers.empty());
  CHECK(inst.last_intervening == LastIntervening::None);
  CHECK(inst.homogeneous);
  CHECK(inst.prefix.size() == 1);
}

TEST_CASE("two clauses give two dependencies in verb order") {
  Sentence s = parse("two", {{"The", "DT", 2, "det"},
                             {"dog", "NN", 3, "nsubj"},
                             {"barks", "VBZ", 0, "root"},
                             {"and", "CC", 3, "cc"},
                             {"cats", "NNS", 6, "nsubj"},
                             {"sleep", "VBP", 3, "conj"}});
  auto deps = find_dependencies(s);
  REQUIRE(deps.size() == 2);
  CHECK(deps[0] == std::pair{2, 3});
  CHECK(deps[1] == std::pair{5, 6});
}

TEST_CASE("subject label is configurable") {
  Sentence s = parse("ud", {{"Dogs", "NNS", 2, "subj"}, {"bark", "VBP", 0, "root"}});
  CHECK(find_dependencies(s).empty());
  ExtractOptions o;
  o.subject_label = "subj";
  CHECK(find_dependencies(s, o).size() == 1);
}

TEST_CASE("hand-annotated fixture") {
  auto corpus = read_conll(fixture("annotated.conll"));
  REQUIRE(corpus.warnings.empty());
  std::ifstream in(fixture("annotated.expected.json"));
  json expected = json::parse(in);
  REQUIRE(corpus.sentences.size() == expected.size());
  REQUIRE(corpus.sentences.size() >= 20);

  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    const auto& e = expected[i];
    CAPTURE(e["text"].get<std::string>());
    auto deps = find_dependencies(s);
    REQUIRE(deps.size() == e["dependencies"].size());
    for (std::size_t k = 0; k < deps.size(); ++k) {
      const auto& d = e["dependencies"][k];
      CHECK(deps[k].first == d["subject"].get<int>());
      CHECK(deps[k].second == d["verb"].get<int>());
      auto inst = annotate(s, deps[k].first, deps[k].second);
      CHECK(inst.subject_number == number_or_null(d["subject_number"]));
      CHECK(inst.verb_number == number_from_string(d["verb_number"].get<std::string>()));
      CHECK(inst.distance == d["distance"].get<int>());
      std::vector<Number> inter;
      for (const auto& n : d["intervening_numbers"]) inter.push_back(number_from_string(n.get<std::string>()));
      CHECK(inst.intervening_numbers == inter);
      CHECK(inst.n_attractors == d["n_attractors"].get<int>());
      CHECK(inst.homogeneous == d["homogeneous"].get<bool>());
      CHECK(to_string(inst.last_intervening) == d["last_intervening"].get<std::string>());
      CHECK(inst.has_rel_clause == d["has_rel_clause"].get<bool>());
      CHECK(inst.has_overt_relativizer == d["has_overt_relativizer"].get<bool>());
    }
  }
}

TEST_CASE("select_one") {
  std::vector<std::pair<int, int>> none, one{{1, 2}}, two{{1, 2}, {4, 5}};
  CHECK_FALSE(select_one(none, 3, "s"));
  for (std::uint64_t seed = 0; seed < 100; ++seed) CHECK(*select_one(one, seed, "s") == std::pair{1, 2});
  CHECK(select_one(two, 9, "s") == select_one(two, 9, "s"));

  int first = 0;
  const int trials = 10000;
  for (int seed = 0; seed < trials; ++seed) first += *select_one(two, static_cast<std::uint64_t>(seed), "sent") == two[0];
  CHECK(std::abs(first / double(trials) - 0.5) <= 0.02);
}

TEST_CASE("dependency choice is independent of the split") {
  std::vector<std::pair<int, int>> two{{1, 2}, {4, 5}};
  SplitAssignment split;
  int train = 0, first = 0;
  for (int i = 0; i < 40000; ++i) {
    const std::string id = "synth:" + std::to_string(i);
    if (assign_split(id, split) != Split::Train) continue;
    ++train;
    first += *select_one(two, 0, id) == two[0];
  }
  REQUIRE(train > 3000);
  CHECK(std::abs(first / double(train) - 0.5) <= 0.03);
}

TEST_CASE("instance JSON round trip") {
  auto inst = annotate(keys_sentence(), 2, 6);
  json j = inst;
  for (const char* key : {"sentence_id", "subject_index", "verb_index", "subject_number", "verb_number", "prefix",
                          "distance", "intervening_numbers", "n_attractors", "homogeneous", "last_intervening",
                          "has_rel_clause", "has_overt_relativizer"})
    CHECK(j.contains(key));
  auto back = j.get<AgreementInstance>();
  CHECK(json(back) == j);
  CHECK(back.prefix == inst.prefix);
}

TEST_CASE("annotation invariants hold on generated sentences") {
  SynthOptions o;
  o.seed = 11;
  auto sentences = generate_synthetic(3000, o);
  std::size_t checked = 0;
  for (const auto& s : sentences) {
    REQUIRE(validate(s).empty());
    for (auto [subj, verb] : find_dependencies(s)) {
      auto inst = annotate(s, subj, verb);
      ++checked;
      CHECK(inst.subject_index < inst.verb_index);
      CHECK(inst.n_attractors <= static_cast<int>(inst.intervening_numbers.size()));
      if (inst.intervening_numbers.size() <= 1) CHECK(inst.homogeneous);
      CHECK((inst.last_intervening == LastIntervening::None) == inst.intervening_numbers.empty());
      if (inst.has_overt_relativizer) CHECK(inst.has_rel_clause);
      CHECK(inst.distance == static_cast<int>(inst.prefix.size()) - inst.subject_index);
      // Grammatical generator: the verb always agrees with a numbered subject.
      if (inst.subject_number) CHECK(*inst.subject_number == inst.verb_number);
    }
  }
  CHECK(checked > 3000);
}

TEST_CASE("extraction is independent of worker count") {
  auto sentences = generate_synthetic(2000);
  auto a = extract_instances(sentences, {}, 5, 1);
  auto b = extract_instances(sentences, {}, 5, 4);
  REQUIRE(a.instances.size() == b.instances.size());
  for (std::size_t i = 0; i < a.instances.size(); ++i) CHECK(json(a.instances[i]) == json(b.instances[i]));
  CHECK(to_json(a.stats) == to_json(b.stats));
  CHECK(a.stats.instances == a.instances.size());
}

TEST_CASE("extraction stats histogram") {
  auto corpus = read_conll(fixture("annotated.conll"));
  auto ex = extract_instances(corpus.sentences, {}, 0);
  CHECK(ex.stats.sentences == 25);
  CHECK(ex.stats.sentences_with_dependency == 22);
  CHECK(ex.stats.candidate_dependencies == 31);
  std::size_t total = 0;
  for (auto c : ex.stats.attractor_histogram) total += c;
  CHECK(total == ex.stats.singular_subjects + ex.stats.plural_subjects);
  CHECK(ex.stats.attractor_histogram.size() == 5);
}

TEST_CASE("vocabulary cap replaces the rarest word by its tag") {
  Sentence s = parse("v", {{"a", "DT", 0, "root"}, {"a", "DT", 1, "x"}, {"a", "DT", 1, "x"},
                           {"b", "NN", 1, "x"}, {"b", "NN", 1, "x"}, {"c", "JJ", 1, "x"}});
  Vocab v = build_vocab({s}, 2);
  CHECK(v.word_id("a"));
  CHECK(v.word_id("b"));
  CHECK_FALSE(v.word_id("c"));
  CHECK(v.id("c", "JJ") == *v.tag_id("JJ"));
  CHECK(v.id("zzz", "FW") == Vocab::kUnknown);
  CHECK(v.id("A", "DT") == *v.word_id("a"));
  CHECK(*v.word_id("a") < *v.word_id("b"));
  CHECK(v.token_string(*v.tag_id("JJ")) == "JJ");
  // reserved ids, two words, three tags
  CHECK(v.size() == static_cast<std::size_t>(Vocab::kReserved) + 2 + 3);
}

TEST_CASE("frequency ties at the cap are broken lexicographically") {
  Sentence s = parse("t", {{"zeta", "NN", 0, "root"}, {"alpha", "NN", 1, "x"}, {"mid", "NN", 1, "x"},
                           {"mid", "NN", 1, "x"}});
  Vocab v = build_vocab({s}, 2);
  CHECK(v.word_id("mid"));
  CHECK(v.word_id("alpha"));
  CHECK_FALSE(v.word_id("zeta"));
}

TEST_CASE("vocabulary JSON round trip preserves ids and digest") {
  auto sentences = generate_synthetic(500);
  Vocab v = build_vocab(sentences, 40);
  Vocab w = Vocab::from_json(v.to_json());
  CHECK(w.size() == v.size());
  CHECK(w.digest() == v.digest());
  for (const auto& s : sentences)
    for (const auto& t : s.tokens) CHECK(w.id(t.form, t.pos) == v.id(t.form, t.pos));
  CHECK(replaced_fraction(v, sentences) > 0.0);
  CHECK_THROWS_AS(build_vocab({}, 10), DataError);
}

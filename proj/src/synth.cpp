#include "agree/synth.hpp"

#include <array>
#include <cctype>
#include <string_view>

#include "agree/common.hpp"
#include "agree/nn/tensor.hpp"

namespace agree {

namespace {

struct NounForms {
  std::string_view sg, pl;
};
struct VerbForms {
  std::string_view sg, pl;
};

constexpr std::array<NounForms, 28> kNouns{{
    {"toy", "toys"},       {"boy", "boys"},           {"house", "houses"},     {"girl", "girls"},
    {"computer", "computers"}, {"student", "students"}, {"man", "men"},       {"office", "offices"},
    {"street", "streets"}, {"teacher", "teachers"},   {"dog", "dogs"},         {"author", "authors"},
    {"book", "books"},     {"car", "cars"},           {"key", "keys"},         {"cabinet", "cabinets"},
    {"table", "tables"},   {"door", "doors"},         {"vase", "vases"},       {"rose", "roses"},
    {"chair", "chairs"},   {"friend", "friends"},     {"doctor", "doctors"},   {"painting", "paintings"},
    {"city", "cities"},    {"farmer", "farmers"},     {"window", "windows"},   {"woman", "women"},
}};

constexpr std::array<VerbForms, 10> kTransitive{{
    {"likes", "like"}, {"sees", "see"}, {"knows", "know"}, {"admires", "admire"}, {"watches", "watch"},
    {"finds", "find"}, {"carries", "carry"}, {"fixes", "fix"}, {"pushes", "push"}, {"has", "have"},
}};

constexpr std::array<VerbForms, 6> kIntransitive{{
    {"sleeps", "sleep"}, {"works", "work"}, {"falls", "fall"}, {"waits", "wait"}, {"stays", "stay"}, {"is", "are"},
}};

constexpr std::array<std::string_view, 9> kPreps{"of", "in", "near", "by", "with", "from", "behind", "on", "across"};
constexpr std::array<std::string_view, 4> kAdverbs{"here", "often", "today", "again"};

struct PronounForm {
  std::string_view form;
  bool plural;
};
constexpr std::array<PronounForm, 4> kPronouns{{{"it", false}, {"he", false}, {"they", true}, {"we", true}}};

class Builder {
 public:
  int add(std::string_view form, std::string_view pos, std::string_view deprel = "dep", int head = 0) {
    Token t;
    t.index = static_cast<int>(tokens_.size()) + 1;
    t.form = std::string(form);
    t.lower = to_lower(form);
    t.pos = std::string(pos);
    t.deprel = std::string(deprel);
    t.head = head;
    tokens_.push_back(std::move(t));
    return tokens_.back().index;
  }
  void attach(int index, int head, std::string_view deprel) {
    auto& t = tokens_[static_cast<std::size_t>(index - 1)];
    t.head = head;
    t.deprel = std::string(deprel);
  }
  std::vector<Token> take() { return std::move(tokens_); }

 private:
  std::vector<Token> tokens_;
};

class Generator {
 public:
  explicit Generator(const SynthOptions& o) : opt_(o), rng_(o.seed) {}

  std::vector<Token> sentence() {
    Builder b;
    int subject = 0;
    bool subject_plural = false;
    const double r = rng_.uniform();
    if (r < opt_.p_pronoun) {
      const auto& p = kPronouns[rng_.below(kPronouns.size())];
      subject = b.add(capitalise(p.form), "PRP");
      subject_plural = p.plural;
    } else {
      subject_plural = coin(opt_.p_plural);
      subject = noun_phrase(b, subject_plural, true);
      modifier(b, subject, subject_plural);
    }
    const int verb = predicate(b, subject_plural);
    b.attach(subject, verb, "nsubj");
    b.add(".", ".", "punct", verb);
    return b.take();
  }

 private:
  bool coin(double p) { return rng_.uniform() < p; }
  template <typename Array>
  const auto& pick(const Array& a) {
    return a[rng_.below(a.size())];
  }

  static std::string capitalise(std::string_view s) {
    std::string out(s);
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
  }

  // "the N"; returns the noun index (head left for the caller).
  int noun_phrase(Builder& b, bool plural, bool sentence_initial = false) {
    const auto& n = pick(kNouns);
    const int det = b.add(sentence_initial ? "The" : "the", "DT");
    const int noun = b.add(plural ? n.pl : n.sg, plural ? "NNS" : "NN");
    b.attach(det, noun, "det");
    return noun;
  }

  // One or more PPs; each attaches to the most recent noun.
  void pp_chain(Builder& b, int head_noun, int length) {
    int attach_to = head_noun;
    for (int i = 0; i < length; ++i) {
      const int prep = b.add(pick(kPreps), "IN", "prep", attach_to);
      const int obj = noun_phrase(b, coin(opt_.p_plural));
      b.attach(obj, prep, "pobj");
      attach_to = obj;
    }
  }

  void modifier(Builder& b, int subject, bool subject_plural) {
    const double r = rng_.uniform();
    double edge = opt_.p_pp;
    if (r < edge) {
      pp_chain(b, subject, 1 + static_cast<int>(rng_.below(static_cast<std::uint64_t>(opt_.max_pp))));
      return;
    }
    if (r < (edge += opt_.p_object_rc)) {
      object_rc(b, subject, true);
      return;
    }
    if (r < (edge += opt_.p_reduced_rc)) {
      object_rc(b, subject, false);
      return;
    }
    if (r < (edge += opt_.p_subject_rc)) {
      const int rel = b.add("that", "WDT");
      const auto& v = pick(kTransitive);
      const int verb = b.add(subject_plural ? v.pl : v.sg, subject_plural ? "VBP" : "VBZ", "rcmod", subject);
      b.attach(rel, verb, "nsubj");
      const int obj = noun_phrase(b, coin(opt_.p_plural));
      b.attach(obj, verb, "dobj");
    }
  }

  void object_rc(Builder& b, int subject, bool overt) {
    const int rel = overt ? b.add("that", "WDT") : 0;
    const bool plural = coin(opt_.p_plural);
    const int inner = noun_phrase(b, plural);
    if (coin(0.25)) pp_chain(b, inner, 1);
    const auto& v = pick(kTransitive);
    const int verb = b.add(plural ? v.pl : v.sg, plural ? "VBP" : "VBZ", "rcmod", subject);
    b.attach(inner, verb, "nsubj");
    if (rel) b.attach(rel, verb, "dobj");
  }

  int predicate(Builder& b, bool plural) {
    const double r = rng_.uniform();
    if (r < 0.45) {
      const auto& v = pick(kTransitive);
      const int verb = b.add(plural ? v.pl : v.sg, plural ? "VBP" : "VBZ", "root", 0);
      const int obj = noun_phrase(b, coin(opt_.p_plural));
      b.attach(obj, verb, "dobj");
      return verb;
    }
    const auto& v = pick(kIntransitive);
    const int verb = b.add(plural ? v.pl : v.sg, plural ? "VBP" : "VBZ", "root", 0);
    if (r < 0.8) {
      const int prep = b.add(pick(kPreps), "IN", "prep", verb);
      const int obj = noun_phrase(b, coin(opt_.p_plural));
      b.attach(obj, prep, "pobj");
    } else {
      b.add(pick(kAdverbs), "RB", "advmod", verb);
    }
    return verb;
  }

  SynthOptions opt_;
  nn::Rng rng_;
};

}  // namespace

std::vector<Sentence> generate_synthetic(std::size_t count, const SynthOptions& options, const std::string& id_prefix) {
  Generator gen(options);
  std::vector<Sentence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Sentence s;
    s.id = id_prefix + ":" + std::to_string(i);
    s.tokens = gen.sentence();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace agree

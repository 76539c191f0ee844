#include "agree/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace agree {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string_view to_string(Modifier m) { return m == Modifier::PP ? "PP" : "RC"; }

Number template_expected(Modifier m, Number noun1, Number noun2) { return m == Modifier::PP ? noun1 : noun2; }

std::vector<NounPair> default_probe_lexicon(const Vocab& vocab, std::size_t size) {
  std::vector<NounPair> lex{{"toy", "toys"},           {"boy", "boys"},         {"house", "houses"},
                            {"girl", "girls"},         {"computer", "computers"}, {"student", "students"}};
  std::set<std::string> used;
  for (const auto& p : lex) used.insert(p.singular);
  const auto& words = vocab.words();
  for (std::size_t i = 0; i < words.size() && lex.size() < size; ++i) {
    const auto& w = words[i];
    if (used.count(w) || vocab.info(i).majority_tag != "NN") continue;
    const auto pl = vocab.word_id(w + "s");
    if (!pl) continue;
    const auto rank = static_cast<std::size_t>(*pl - Vocab::kReserved);
    if (vocab.info(rank).majority_tag != "NNS") continue;
    lex.push_back({w, w + "s"});
    used.insert(w);
  }
  return lex;
}

std::vector<TemplateSentence> generate_templates(std::span<const NounPair> lexicon, const Vocab& vocab) {
  std::vector<std::string> missing;
  for (const auto& p : lexicon) {
    for (const auto& w : {p.singular, p.plural})
      if (!vocab.word_id(w)) missing.push_back(w);
  }
  for (const char* w : {"the", "of", "that"})
    if (!vocab.word_id(w)) missing.emplace_back(w);
  if (!missing.empty()) {
    std::string msg = "probe lexicon items missing from the vocabulary:";
    for (const auto& w : missing) msg += " " + w;
    throw DataError(msg);
  }

  std::vector<TemplateSentence> out;
  for (std::size_t set = 0; set < lexicon.size(); ++set) {
    const auto& pair = lexicon[set];
    for (Modifier m : {Modifier::PP, Modifier::RC}) {
      for (Number n1 : {Number::Singular, Number::Plural}) {
        for (Number n2 : {Number::Singular, Number::Plural}) {
          auto noun = [&](const NounPair& p, Number n) {
            return n == Number::Singular ? PrefixToken{p.singular, "NN"} : PrefixToken{p.plural, "NNS"};
          };
          // Second noun comes from the next lexical set so N1 and N2 differ.
          const auto& other = lexicon[(set + 1) % lexicon.size()];
          TemplateSentence t;
          t.modifier = m;
          t.noun1 = n1;
          t.noun2 = n2;
          t.lexical_set = set;
          t.tokens = {{"The", "DT"}, noun(pair, n1), m == Modifier::PP ? PrefixToken{"of", "IN"} : PrefixToken{"that", "WDT"},
                      {"the", "DT"}, noun(other, n2)};
          t.expected = template_expected(m, n1, n2);
          out.push_back(std::move(t));
        }
      }
    }
  }
  return out;
}

ActivationTrace trace(const Checkpoint& ck, const std::vector<PrefixToken>& tokens) {
  if (ck.model.spec().head != nn::Head::Classifier) throw UsageError("activation traces need a classifier checkpoint");
  std::vector<int> ids;
  ActivationTrace t;
  for (const auto& tok : tokens) {
    ids.push_back(ck.vocab.id(tok.form, tok.pos));
    t.tokens.push_back(tok.form);
  }
  auto out = ck.model.infer(ids);
  t.hidden = std::move(out.trace.hidden);
  t.p_plural = out.trace.probs.col(static_cast<Eigen::Index>(Number::Plural));
  return t;
}

std::pair<std::vector<PrefixToken>, std::vector<PrefixToken>> long_modifier_sentences() {
  std::vector<PrefixToken> pp{{"The", "DT"}, {"houses", "NNS"}, {"of", "IN"},     {"the", "DT"},
                              {"man", "NN"}, {"from", "IN"},    {"the", "DT"},    {"office", "NN"},
                              {"across", "IN"}, {"the", "DT"},  {"street", "NN"}};
  auto rc = pp;
  rc[2] = {"that", "WDT"};
  return {pp, rc};
}

std::pair<ActivationTrace, ActivationTrace> long_modifier_probe(const Checkpoint& ck) {
  const auto [pp, rc] = long_modifier_sentences();
  return {trace(ck, pp), trace(ck, rc)};
}

std::vector<ConditionAverage> average_by_condition(const std::vector<TemplateSentence>& templates,
                                                   const std::vector<ActivationTrace>& traces) {
  if (templates.size() != traces.size()) throw std::invalid_argument("average_by_condition: size mismatch");
  std::vector<ConditionAverage> out;
  for (Modifier m : {Modifier::PP, Modifier::RC}) {
    for (Number n1 : {Number::Singular, Number::Plural}) {
      for (Number n2 : {Number::Singular, Number::Plural}) {
        ConditionAverage avg{m, n1, n2, {}};
        std::size_t count = 0;
        for (std::size_t i = 0; i < templates.size(); ++i) {
          const auto& t = templates[i];
          if (t.modifier != m || t.noun1 != n1 || t.noun2 != n2) continue;
          if (count++ == 0) {
            avg.mean = traces[i];
          } else {
            avg.mean.hidden += traces[i].hidden;
            avg.mean.p_plural += traces[i].p_plural;
          }
        }
        if (count == 0) continue;
        avg.mean.hidden /= static_cast<double>(count);
        avg.mean.p_plural /= static_cast<double>(count);
        out.push_back(std::move(avg));
      }
    }
  }
  return out;
}

Pca principal_components(const nn::Matrix<double>& data, int k) {
  const Eigen::Index n = data.rows(), dim = data.cols();
  if (n < 2) throw DataError("PCA needs at least two rows");
  if (k < 1 || k > dim) throw std::invalid_argument("PCA: component count out of range");

  Pca out;
  out.mean = data.colwise().mean().transpose();
  const nn::Matrix<double> centered = data.rowwise() - out.mean.transpose();
  nn::Matrix<double> cov = centered.transpose() * centered / static_cast<double>(n - 1);
  out.components.resize(dim, k);
  out.variances.resize(k);

  nn::Rng rng(0x9ca);
  for (int c = 0; c < k; ++c) {
    nn::Vector<double> v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = rng.uniform(-1.0, 1.0);
    v.normalize();
    for (int iter = 0; iter < 100000; ++iter) {
      nn::Vector<double> next = cov * v;
      const double norm = next.norm();
      if (norm == 0.0) break;
      next /= norm;
      const double change = (next - v).norm();
      v = std::move(next);
      if (change < 1e-15) break;
    }
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    const double lambda = v.dot(cov * v);
    out.components.col(c) = v;
    out.variances(c) = lambda;
    cov -= lambda * v * v.transpose();
  }
  return out;
}

EmbeddingPca pca_embeddings(const Checkpoint& ck, double threshold) {
  const auto& vocab = ck.vocab;
  const auto& emb = ck.model.params().value("E");
  std::vector<std::pair<std::string, Number>> words;
  std::vector<int> rows;
  for (std::size_t i = 0; i < vocab.words().size(); ++i) {
    const auto& info = vocab.info(i);
    if ((info.majority_tag != "NN" && info.majority_tag != "NNS") || info.majority_fraction < threshold) continue;
    words.emplace_back(vocab.words()[i], info.majority_tag == "NN" ? Number::Singular : Number::Plural);
    rows.push_back(Vocab::kReserved + static_cast<int>(i));
  }
  if (words.size() < 3) throw DataError("PCA needs at least 3 candidate nouns, found " + std::to_string(words.size()));

  nn::Matrix<double> data(static_cast<Eigen::Index>(rows.size()), emb.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) data.row(static_cast<Eigen::Index>(r)) = emb.row(rows[r]);

  EmbeddingPca out;
  out.pca = principal_components(data, std::min<int>(2, static_cast<int>(data.cols())));
  const nn::Matrix<double> proj = (data.rowwise() - out.pca.mean.transpose()) * out.pca.components;
  for (std::size_t r = 0; r < words.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    out.points.push_back({words[r].first, words[r].second, proj(i, 0), proj.cols() > 1 ? proj(i, 1) : 0.0});
  }
  return out;
}

std::string trace_csv(const ActivationTrace& t) {
  std::string out = "series";
  for (const auto& tok : t.tokens) out += "," + csv_field(tok);
  out += "\np_plural";
  for (Eigen::Index i = 0; i < t.p_plural.size(); ++i) out += "," + fmt(t.p_plural(i));
  out += "\n";
  for (Eigen::Index u = 0; u < t.hidden.cols(); ++u) {
    out += "unit_" + std::to_string(u);
    for (Eigen::Index i = 0; i < t.hidden.rows(); ++i) out += "," + fmt(t.hidden(i, u));
    out += "\n";
  }
  return out;
}

std::string pca_csv(const EmbeddingPca& p) {
  std::string out = "word,label,pc1,pc2\n";
  for (const auto& pt : p.points)
    out += csv_field(pt.word) + "," + std::string(to_string(pt.label)) + "," + fmt(pt.pc1) + "," + fmt(pt.pc2) + "\n";
  return out;
}

}  // namespace agree

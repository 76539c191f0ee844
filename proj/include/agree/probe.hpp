#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agree/checkpoint.hpp"
#include "agree/extract.hpp"
#include "agree/nn/tensor.hpp"

namespace agree {

enum class Modifier { PP, RC };
std::string_view to_string(Modifier m);

struct NounPair {
  std::string singular;
  std::string plural;
};

struct TemplateSentence {
  Modifier modifier = Modifier::PP;
  Number noun1 = Number::Singular;
  Number noun2 = Number::Singular;
  std::size_t lexical_set = 0;
  std::vector<PrefixToken> tokens;  // "The N1 of/that the N2"
  Number expected = Number::Singular;
};

// PP prefixes agree with the head noun, RC prefixes with the embedded subject.
Number template_expected(Modifier m, Number noun1, Number noun2);

// The six pairs used in the constructed-sentence probes, padded with the most
// frequent regular nouns of the vocabulary (sing/sing+s, both tagged as nouns).
std::vector<NounPair> default_probe_lexicon(const Vocab& vocab, std::size_t size = 10);

// All modifier x number x number x lexical-set combinations, lexical set
// outermost. Throws DataError naming any form missing from the vocabulary.
std::vector<TemplateSentence> generate_templates(std::span<const NounPair> lexicon, const Vocab& vocab);

struct ActivationTrace {
  std::vector<std::string> tokens;
  nn::Matrix<double> hidden;     // tokens x hidden units
  nn::Vector<double> p_plural;   // classifier applied after each token
};

ActivationTrace trace(const Checkpoint& ck, const std::vector<PrefixToken>& tokens);

// "The houses of/that the man from the office across the street": PP first, RC second.
std::pair<std::vector<PrefixToken>, std::vector<PrefixToken>> long_modifier_sentences();
std::pair<ActivationTrace, ActivationTrace> long_modifier_probe(const Checkpoint& ck);

struct ConditionAverage {
  Modifier modifier;
  Number noun1;
  Number noun2;
  ActivationTrace mean;  // tokens taken from the first member
};
// Averages template traces over lexical sets sharing a condition (8 curves).
std::vector<ConditionAverage> average_by_condition(const std::vector<TemplateSentence>& templates,
                                                   const std::vector<ActivationTrace>& traces);

struct Pca {
  nn::Matrix<double> components;  // columns are unit principal axes
  nn::Vector<double> variances;   // eigenvalues of the sample covariance
  nn::Vector<double> mean;
};

// Top-k principal axes of the rows of `data` by power iteration with
// deflation on the sample covariance. Axis signs are fixed so the largest
// absolute coordinate is positive.
Pca principal_components(const nn::Matrix<double>& data, int k = 2);

struct PcaPoint {
  std::string word;
  Number label;
  double pc1 = 0.0;
  double pc2 = 0.0;
};

struct EmbeddingPca {
  Pca pca;
  std::vector<PcaPoint> points;
};

// Noun embeddings (majority tag NN or NNS held by at least `threshold` of a
// word's occurrences) projected on their top two principal components.
EmbeddingPca pca_embeddings(const Checkpoint& ck, double threshold = 0.9);

std::string trace_csv(const ActivationTrace& t);
std::string pca_csv(const EmbeddingPca& p);

}  // namespace agree

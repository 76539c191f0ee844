#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agree/corpus.hpp"

namespace agree {

// Probabilities of each subject modifier; the remainder is "no modifier".
struct SynthOptions {
  std::uint64_t seed = 1;
  double p_pp = 0.45;            // chain of 1..max_pp prepositional phrases
  double p_object_rc = 0.12;     // "that the N (PP) V"
  double p_reduced_rc = 0.06;    // "the N (PP) V"
  double p_subject_rc = 0.10;    // "that V the N"
  double p_pronoun = 0.04;       // pronoun subject
  int max_pp = 3;
  double p_plural = 0.35;        // number of every noun, drawn independently
};

// Dependency-parsed sentences from a small English grammar, labelled with
// Stanford basic dependencies (nsubj, dobj, det, prep, pobj, rcmod, advmod,
// punct). Sentence ids are "<prefix>:<n>".
std::vector<Sentence> generate_synthetic(std::size_t count, const SynthOptions& options = {},
                                         const std::string& id_prefix = "synth");

}  // namespace agree

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "agree/checkpoint.hpp"
#include "agree/corpus.hpp"
#include "agree/eval.hpp"
#include "agree/extract.hpp"
#include "agree/objectives.hpp"
#include "agree/probe.hpp"
#include "agree/train.hpp"
#include "agree/vocab.hpp"
#include "json.hpp"

// Stage functions shared by the command-line tool and the end-to-end tests.
namespace agree {

struct LoadedCorpus {
  std::vector<Sentence> sentences;
  std::vector<std::string> warnings;  // "<path>:<line>: <message>"
  std::size_t filtered = 0;
};

LoadedCorpus load_corpora(const std::vector<std::string>& paths, const ReadOptions& options);

struct SplitData {
  std::vector<Sentence> train_sentences;
  std::vector<Sentence> valid_sentences;
  std::vector<AgreementInstance> train;
  std::vector<AgreementInstance> valid;
  std::vector<AgreementInstance> test;
};

// Partitions sentences by id and sends each instance to its sentence's split.
SplitData split_data(const std::vector<Sentence>& sentences, const std::vector<AgreementInstance>& instances,
                     const SplitAssignment& split);

struct Resources {
  Vocab vocab;
  VerbFormTable verb_forms;
};

Resources build_resources(const std::vector<Sentence>& train_sentences, std::size_t vocab_cap);

// Examples of `objective`; LM examples come from `sentences`, every other
// objective from `instances` (restricted to hard dependencies when asked).
Dataset objective_dataset(Objective objective, const std::vector<AgreementInstance>& instances,
                          const std::vector<Sentence>& sentences, const Resources& res, bool hard_only);

struct TrainedRun {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

TrainedRun train_run(const TrainConfig& config, const Resources& res, const Dataset& train_set,
                     const Dataset& valid_set, const Checkpoint* resume = nullptr);

struct TemplateResult {
  TemplateSentence sentence;
  ActivationTrace trace;
  Number predicted = Number::Singular;
  bool correct() const { return predicted == sentence.expected; }
};

std::vector<TemplateResult> run_templates(const Checkpoint& ck, std::size_t workers = 1);

std::string histogram_csv(const ExtractStats& stats);
std::string templates_csv(const std::vector<TemplateResult>& results);
// One row per condition and timestep: averaged PLURAL probability.
std::string condition_csv(const std::vector<ConditionAverage>& averages);

// File helpers. Writers create parent directories.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);
std::vector<nlohmann::json> read_jsonl(const std::string& path);

std::vector<AgreementInstance> read_instances(const std::string& path);
void write_instances(const std::string& path, const std::vector<AgreementInstance>& instances);
std::vector<ObjectiveExample> read_examples(const std::string& path);
void write_examples(const std::string& path, const std::vector<ObjectiveExample>& examples);

}  // namespace agree

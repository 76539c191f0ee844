#include "agree/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "agree/parallel.hpp"

namespace agree {

namespace fs = std::filesystem;
using nlohmann::json;

LoadedCorpus load_corpora(const std::vector<std::string>& paths, const ReadOptions& options) {
  LoadedCorpus out;
  for (const auto& path : paths) {
    if (!fs::exists(path)) throw DataError("corpus file not found: " + path);
    ConllReader reader(path, options);
    while (auto s = reader.next()) out.sentences.push_back(std::move(*s));
    for (const auto& w : reader.warnings())
      out.warnings.push_back(path + ":" + std::to_string(w.line) + ": " + w.message);
    out.filtered += reader.filtered();
  }
  return out;
}

SplitData split_data(const std::vector<Sentence>& sentences, const std::vector<AgreementInstance>& instances,
                     const SplitAssignment& split) {
  split.check();
  SplitData out;
  for (const auto& s : sentences) {
    Split where = assign_split(s.id, split);
    if (where == Split::Train) out.train_sentences.push_back(s);
    else if (where == Split::Valid) out.valid_sentences.push_back(s);
  }
  for (const auto& inst : instances) {
    switch (assign_split(inst.sentence_id, split)) {
      case Split::Train: out.train.push_back(inst); break;
      case Split::Valid: out.valid.push_back(inst); break;
      case Split::Test: out.test.push_back(inst); break;
    }
  }
  return out;
}

Resources build_resources(const std::vector<Sentence>& train_sentences, std::size_t vocab_cap) {
  return {build_vocab(train_sentences, vocab_cap), build_verb_form_table(train_sentences)};
}

Dataset objective_dataset(Objective objective, const std::vector<AgreementInstance>& instances,
                          const std::vector<Sentence>& sentences, const Resources& res, bool hard_only) {
  if (objective == Objective::LanguageModel) return build_lm_dataset(sentences, res.vocab);
  if (hard_only) return build_dataset(objective, agree::hard_only(instances), res.vocab, res.verb_forms);
  return build_dataset(objective, instances, res.vocab, res.verb_forms);
}

TrainedRun train_run(const TrainConfig& config, const Resources& res, const Dataset& train_set,
                     const Dataset& valid_set, const Checkpoint* resume) {
  if (train_set.examples.empty()) throw DataError("training set is empty");
  if (valid_set.examples.empty()) throw DataError("validation set is empty");
  if (resume) {
    if (resume->objective != config.objective)
      throw UsageError("resume checkpoint was trained on " + std::string(to_string(resume->objective)));
    if (resume->vocab.digest() != res.vocab.digest())
      throw DataError("resume checkpoint vocabulary does not match the data");
  }
  TrainResult r = train(config, static_cast<int>(res.vocab.size()), train_set.examples, valid_set.examples, resume);
  TrainedRun out;
  out.checkpoint.objective = config.objective;
  out.checkpoint.model = std::move(r.model);
  out.checkpoint.vocab = res.vocab;
  out.checkpoint.verb_forms = res.verb_forms;
  out.checkpoint.config = to_json(config);
  out.checkpoint.epoch = r.log.empty() ? (resume ? resume->epoch : 0) : r.log.back().epoch;
  out.checkpoint.seed = config.seed;
  out.log = std::move(r.log);
  out.best_epoch = r.best_epoch;
  return out;
}

std::vector<TemplateResult> run_templates(const Checkpoint& ck, std::size_t workers) {
  auto templates = generate_templates(default_probe_lexicon(ck.vocab), ck.vocab);
  std::vector<TemplateResult> out(templates.size());
  parallel_for(templates.size(), workers, [&](std::size_t i) {
    out[i].sentence = templates[i];
    out[i].trace = trace(ck, templates[i].tokens);
    double p = out[i].trace.p_plural(out[i].trace.p_plural.size() - 1);
    out[i].predicted = choose_number(1.0 - p, p);
  });
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8f", v);
  return buf;
}

std::string join_tokens(const std::vector<PrefixToken>& tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t.form;
  }
  return s;
}

}  // namespace

std::string histogram_csv(const ExtractStats& stats) {
  std::string out = "n_attractors,count\n";
  for (std::size_t k = 0; k < stats.attractor_histogram.size(); ++k) {
    bool last = k + 1 == stats.attractor_histogram.size();
    out += std::to_string(k) + (last ? "+" : "") + "," + std::to_string(stats.attractor_histogram[k]) + "\n";
  }
  return out;
}

std::string templates_csv(const std::vector<TemplateResult>& results) {
  std::string out = "lexical_set,modifier,noun1,noun2,prefix,expected,predicted,p_plural,correct\n";
  for (const auto& r : results) {
    const auto& t = r.sentence;
    out += std::to_string(t.lexical_set) + "," + std::string(to_string(t.modifier)) + "," +
           std::string(to_string(t.noun1)) + "," + std::string(to_string(t.noun2)) + ",\"" + join_tokens(t.tokens) +
           "\"," + std::string(to_string(t.expected)) + "," + std::string(to_string(r.predicted)) + "," +
           fmt(r.trace.p_plural(r.trace.p_plural.size() - 1)) + "," + (r.correct() ? "1" : "0") + "\n";
  }
  return out;
}

std::string condition_csv(const std::vector<ConditionAverage>& averages) {
  std::string out = "modifier,noun1,noun2,position,token,p_plural\n";
  for (const auto& a : averages) {
    for (Eigen::Index t = 0; t < a.mean.p_plural.size(); ++t) {
      out += std::string(to_string(a.modifier)) + "," + std::string(to_string(a.noun1)) + "," +
             std::string(to_string(a.noun2)) + "," + std::to_string(t) + ",\"" +
             a.mean.tokens[static_cast<std::size_t>(t)] + "\"," + fmt(a.mean.p_plural(t)) + "\n";
    }
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
  std::string text;
  for (const auto& r : rows) text += r.dump() + "\n";
  write_text(path, text);
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::vector<json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<AgreementInstance> read_instances(const std::string& path) {
  std::vector<AgreementInstance> out;
  for (const auto& j : read_jsonl(path)) {
    try {
      out.push_back(j.get<AgreementInstance>());
    } catch (const json::exception& e) {
      throw DataError(path + ": malformed instance: " + e.what());
    }
  }
  return out;
}

void write_instances(const std::string& path, const std::vector<AgreementInstance>& instances) {
  std::vector<json> rows;
  rows.reserve(instances.size());
  for (const auto& i : instances) rows.emplace_back(i);
  write_jsonl(path, rows);
}

std::vector<ObjectiveExample> read_examples(const std::string& path) {
  std::vector<ObjectiveExample> out;
  for (const auto& j : read_jsonl(path)) {
    try {
      out.push_back(example_from_json(j));
    } catch (const json::exception& e) {
      throw DataError(path + ": malformed example: " + e.what());
    }
  }
  return out;
}

void write_examples(const std::string& path, const std::vector<ObjectiveExample>& examples) {
  std::vector<json> rows;
  rows.reserve(examples.size());
  for (const auto& e : examples) rows.push_back(to_json(e));
  write_jsonl(path, rows);
}

}  // namespace agree

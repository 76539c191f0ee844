// agree: extract agreement dependencies from parsed corpora, train and
// evaluate recurrent models on them, and probe the trained networks.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "agree/config.hpp"
#include "agree/digest.hpp"
#include "agree/nn/gradcheck.hpp"
#include "agree/pipeline.hpp"
#include "agree/synth.hpp"

#ifndef AGREE_VERSION
#define AGREE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace agree;

namespace {

// Relative output paths are placed under $AGREE_OUTPUT_ROOT when it is set.
std::string output_path(const std::string& path) {
  const char* root = std::getenv("AGREE_OUTPUT_ROOT");
  if (!root || !*root || fs::path(path).is_absolute()) return path;
  return (fs::path(root) / path).string();
}

struct ConfigFlags {
  std::string file;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override a config key, e.g. --set train.hidden=20");
  }
  Config load() const {
    Config c;
    if (!file.empty()) c.merge_file(file);
    for (const auto& s : sets) c.set(s);
    return c;
  }
};

// Provenance record written next to every command's outputs.
class RunManifest {
 public:
  RunManifest(std::string command, std::string out_dir) : command_(std::move(command)), dir_(std::move(out_dir)) {}

  void config(const json& c) { config_ = c; }
  void input(const std::string& path) { inputs_.push_back({{"path", path}, {"sha256", file_sha256_hex(path)}}); }
  void seed(std::uint64_t s) { seeds_.push_back(s); }

  // Writes `text` to <dir>/<name> and records its digest.
  void output(const std::string& name, const std::string& text) {
    write_text((fs::path(dir_) / name).string(), text);
    outputs_.push_back({{"path", name}, {"sha256", sha256_hex(text)}});
  }

  void write() const {
    json m = {{"tool", "agree"},       {"version", AGREE_VERSION}, {"command", command_}, {"config", config_},
              {"inputs", inputs_},      {"seeds", seeds_},          {"outputs", outputs_}};
    write_text((fs::path(dir_) / "manifest.json").string(), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string dir_;
  json config_ = json::object();
  json inputs_ = json::array();
  json seeds_ = json::array();
  json outputs_ = json::array();
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int default_seed_count(Objective o) {
  if (o == Objective::NumberPred) return 20;
  if (o == Objective::LanguageModel) return 1;
  return 10;
}

void log_line(const std::string& s) { std::cerr << s << "\n"; }

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::size_t count = 100000;
  std::uint64_t seed = 1;
  std::string out;
};

void cmd_synth(const SynthArgs& a) {
  SynthOptions o;
  o.seed = a.seed;
  auto sentences = generate_synthetic(a.count, o);
  std::ostringstream ss;
  write_conll(ss, sentences);
  write_text(output_path(a.out), ss.str());
  log_line("wrote " + std::to_string(sentences.size()) + " sentences");
}

// --- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::vector<std::string> corpora;
  std::string out;
  ConfigFlags config;
  std::size_t workers = 1;
};

void cmd_extract(const ExtractArgs& a) {
  Config cfg = a.config.load();
  std::string dir = output_path(a.out);
  auto corpus = load_corpora(a.corpora, cfg.read_options());
  for (const auto& w : corpus.warnings) log_line("warning: " + w);
  auto ex = extract_instances(corpus.sentences, cfg.extract_options(), cfg.extract_seed(), a.workers);
  if (ex.instances.empty()) throw DataError("no agreement instances found");

  RunManifest m("extract", dir);
  m.config(cfg.tree());
  for (const auto& c : a.corpora) m.input(c);
  m.seed(cfg.extract_seed());

  std::string instances;
  for (const auto& inst : ex.instances) instances += json(inst).dump() + "\n";
  m.output("instances.jsonl", instances);
  json stats = to_json(ex.stats);
  stats["warnings"] = corpus.warnings.size();
  stats["filtered_long"] = corpus.filtered;
  m.output("stats.json", dump(stats));
  m.output("attractor_histogram.csv", histogram_csv(ex.stats));
  m.write();
  log_line("extracted " + std::to_string(ex.instances.size()) + " instances from " +
           std::to_string(corpus.sentences.size()) + " sentences");
}

// --- build -----------------------------------------------------------------

struct BuildArgs {
  std::vector<std::string> corpora;
  std::string instances;
  std::vector<std::string> objectives{"NUMBER_PRED"};
  std::string out;
  ConfigFlags config;
};

void cmd_build(const BuildArgs& a) {
  Config cfg = a.config.load();
  TrainConfig tc = cfg.train_config();
  std::string dir = output_path(a.out);
  std::vector<Objective> objectives;
  for (const auto& o : a.objectives) objectives.push_back(objective_from_string(o));

  auto corpus = load_corpora(a.corpora, cfg.read_options());
  auto instances = read_instances(a.instances);
  if (instances.empty()) throw DataError("no instances in " + a.instances);
  SplitData split = split_data(corpus.sentences, instances, cfg.split());
  if (split.train_sentences.empty()) throw DataError("training split is empty");
  Resources res = build_resources(split.train_sentences, cfg.vocab_cap());

  RunManifest m("build", dir);
  m.config(cfg.tree());
  for (const auto& c : a.corpora) m.input(c);
  m.input(a.instances);
  m.seed(cfg.split().seed);

  m.output("vocab.json", dump(res.vocab.to_json()));
  m.output("verb_forms.json", dump(res.verb_forms.to_json()));
  auto instance_text = [](const std::vector<AgreementInstance>& v) {
    std::string s;
    for (const auto& i : v) s += json(i).dump() + "\n";
    return s;
  };
  m.output("instances.train.jsonl", instance_text(split.train));
  m.output("instances.valid.jsonl", instance_text(split.valid));
  m.output("instances.test.jsonl", instance_text(split.test));

  json stats = {{"vocab_size", res.vocab.size()},
                {"vocab_digest", res.vocab.digest()},
                {"replaced_fraction", replaced_fraction(res.vocab, split.train_sentences)},
                {"verb_pairs", res.verb_forms.size()},
                {"sentences", {{"train", split.train_sentences.size()}, {"valid", split.valid_sentences.size()}}},
                {"instances", {{"train", split.train.size()}, {"valid", split.valid.size()}, {"test", split.test.size()}}},
                {"datasets", json::object()}};
  auto example_text = [](const Dataset& d) {
    std::string s;
    for (const auto& e : d.examples) s += to_json(e).dump() + "\n";
    return s;
  };
  for (Objective o : objectives) {
    std::string name(to_string(o));
    Dataset tr = objective_dataset(o, split.train, split.train_sentences, res, tc.hard_only);
    Dataset va = objective_dataset(o, split.valid, split.valid_sentences, res, tc.hard_only);
    m.output(name + ".train.jsonl", example_text(tr));
    m.output(name + ".valid.jsonl", example_text(va));
    json ds = {{"train", tr.examples.size()}, {"valid", va.examples.size()}, {"skipped", tr.skipped + va.skipped}};
    if (o != Objective::LanguageModel) {
      Dataset te = objective_dataset(o, split.test, {}, res, false);
      m.output(name + ".test.jsonl", example_text(te));
      ds["test"] = te.examples.size();
      ds["skipped"] = tr.skipped + va.skipped + te.skipped;
    }
    stats["datasets"][name] = ds;
  }
  m.output("build.json", dump(stats));
  m.write();
  log_line("vocabulary " + std::to_string(res.vocab.size()) + ", " + std::to_string(split.train.size()) +
           " training instances");
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string objective;
  std::string cell;
  std::optional<int> seeds;
  std::string resume;
  std::string out;
  ConfigFlags config;
};

Resources load_resources(const std::string& dir) {
  Resources res;
  res.vocab = Vocab::from_json(json::parse(read_text((fs::path(dir) / "vocab.json").string())));
  res.verb_forms = VerbFormTable::from_json(json::parse(read_text((fs::path(dir) / "verb_forms.json").string())));
  return res;
}

void cmd_train(const TrainArgs& a) {
  Config cfg = a.config.load();
  if (!a.objective.empty()) cfg.set("train.objective=\"" + a.objective + "\"");
  if (!a.cell.empty()) cfg.set("train.cell=\"" + a.cell + "\"");
  TrainConfig tc = cfg.train_config();
  std::string dir = output_path(a.out);

  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) {
    resume = load_checkpoint(a.resume);
    tc.seed = resume->seed;
  }
  int seeds = a.seeds.value_or(resume ? 1 : default_seed_count(tc.objective));
  if (seeds < 1) throw UsageError("--seeds must be at least 1");
  if (resume && seeds != 1) throw UsageError("--resume continues a single run");

  Resources res = load_resources(a.data);
  std::string name(to_string(tc.objective));
  Dataset tr{read_examples((fs::path(a.data) / (name + ".train.jsonl")).string()), 0};
  Dataset va{read_examples((fs::path(a.data) / (name + ".valid.jsonl")).string()), 0};

  RunManifest m("train", dir);
  m.config(cfg.tree());
  m.input((fs::path(a.data) / "vocab.json").string());
  m.input((fs::path(a.data) / "verb_forms.json").string());
  m.input((fs::path(a.data) / (name + ".train.jsonl")).string());
  m.input((fs::path(a.data) / (name + ".valid.jsonl")).string());
  if (resume) m.input(a.resume);

  json summary = {{"objective", name}, {"cell", to_string(tc.cell)}, {"runs", json::array()}};
  for (int k = 0; k < seeds; ++k) {
    TrainConfig run = tc;
    run.seed = tc.seed + static_cast<std::uint64_t>(k);
    m.seed(run.seed);
    auto t0 = std::chrono::steady_clock::now();
    TrainedRun r = train_run(run, res, tr, va, resume ? &*resume : nullptr);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string sub = "seed-" + std::to_string(run.seed);
    m.output(sub + "/checkpoint.json", to_json(r.checkpoint).dump() + "\n");
    m.output(sub + "/log.json", dump(to_json(r.log)));
    double best = 0.0;
    for (const auto& e : r.log)
      if (e.epoch == r.best_epoch) best = e.valid_error;
    summary["runs"].push_back({{"seed", run.seed},
                               {"epochs", r.checkpoint.epoch},
                               {"best_epoch", r.best_epoch},
                               {"valid_error", best},
                               {"checkpoint", sub + "/checkpoint.json"}});
    char buf[160];
    std::snprintf(buf, sizeof buf, "seed %llu: %d epochs, best %d, valid error %.4f (%.1fs)",
                  static_cast<unsigned long long>(run.seed), r.checkpoint.epoch, r.best_epoch, best, secs);
    log_line(buf);
  }
  m.output("summary.json", dump(summary));
  m.write();
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string instances;
  std::string vocab;
  std::string scores;
  bool baselines = false;
  std::size_t per_bin = 0;
  std::uint64_t sample_seed = 0;
  std::string out;
  std::size_t workers = 1;
};

void cmd_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() && a.scores.empty() && !a.baselines)
    throw UsageError("nothing to evaluate: give --checkpoint, --scores or --baselines");
  std::string dir = output_path(a.out);
  auto instances = read_instances(a.instances);
  if (a.per_bin > 0) instances = sample_by_attractors(instances, a.per_bin, a.sample_seed);
  if (instances.empty()) throw DataError("no instances to evaluate");

  RunManifest m("eval", dir);
  m.input(a.instances);
  if (a.per_bin > 0) m.seed(a.sample_seed);

  if (!a.checkpoint.empty()) {
    Checkpoint ck = load_checkpoint(a.checkpoint);
    m.input(a.checkpoint);
    if (!a.vocab.empty()) {
      Vocab v = Vocab::from_json(json::parse(read_text(a.vocab)));
      if (v.digest() != ck.vocab.digest())
        throw DataError("vocabulary " + a.vocab + " does not match the checkpoint (digest " + v.digest() + " vs " +
                        ck.vocab.digest() + ")");
      m.input(a.vocab);
    }
    m.seed(ck.seed);
    EvalReport r = stratify_outcomes(evaluate_outcomes(ck, instances, a.workers), instances);
    json j = r.to_json();
    j["objective"] = to_string(ck.objective);
    m.output("report.json", dump(j));
    m.output("report.csv", r.to_csv());
    const auto& o = r.overall();
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s: error %.4f over %zu instances", std::string(to_string(ck.objective)).c_str(),
                  o.rate, o.n);
    log_line(buf);
  }
  if (a.baselines) {
    EvalReport maj = majority_baseline(instances), rec = recency_baseline(instances);
    m.output("majority.json", dump(maj.to_json()));
    m.output("majority.csv", maj.to_csv());
    m.output("recency.json", dump(rec.to_json()));
    m.output("recency.csv", rec.to_csv());
  }
  if (!a.scores.empty()) {
    m.input(a.scores);
    EvalReport r = eval_external(read_score_file(a.scores), instances);
    m.output("external.json", dump(r.to_json()));
    m.output("external.csv", r.to_csv());
  }
  m.write();
}

// --- probe -----------------------------------------------------------------

struct ProbeArgs {
  std::string checkpoint;
  std::string out;
  ConfigFlags config;
  std::size_t workers = 1;
};

void cmd_probe(const ProbeArgs& a) {
  Config cfg = a.config.load();
  std::string dir = output_path(a.out);
  Checkpoint ck = load_checkpoint(a.checkpoint);
  if (ck.model.spec().head != nn::Head::Classifier) throw UsageError("probe needs a classifier checkpoint");

  RunManifest m("probe", dir);
  m.config(cfg.tree());
  m.input(a.checkpoint);
  m.seed(ck.seed);

  auto results = run_templates(ck, a.workers);
  std::vector<TemplateSentence> templates;
  std::vector<ActivationTrace> traces;
  std::size_t pp = 0, rc = 0;
  for (const auto& r : results) {
    templates.push_back(r.sentence);
    traces.push_back(r.trace);
    if (r.correct()) ++(r.sentence.modifier == Modifier::PP ? pp : rc);
  }
  m.output("templates.csv", templates_csv(results));
  m.output("conditions.csv", condition_csv(average_by_condition(templates, traces)));
  auto [pp_trace, rc_trace] = long_modifier_probe(ck);
  m.output("long_pp.csv", trace_csv(pp_trace));
  m.output("long_rc.csv", trace_csv(rc_trace));
  json summary = {{"pp_correct", pp}, {"pp_total", 40}, {"rc_correct", rc}, {"rc_total", 40}};
  try {
    EmbeddingPca p = pca_embeddings(ck, cfg.probe_threshold());
    m.output("pca.csv", pca_csv(p));
    summary["pca_words"] = p.points.size();
  } catch (const DataError& e) {
    log_line(std::string("warning: PCA skipped: ") + e.what());
  }
  m.output("summary.json", dump(summary));
  m.write();
  log_line("templates: PP " + std::to_string(pp) + "/40, RC " + std::to_string(rc) + "/40");
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> reports;
  std::string out;
};

void cmd_report(const ReportArgs& a) {
  std::string dir = output_path(a.out);
  RunManifest m("report", dir);
  std::vector<EvalReport> reports;
  for (const auto& path : a.reports) {
    try {
      reports.push_back(EvalReport::from_json(json::parse(read_text(path))));
    } catch (const json::exception& e) {
      throw DataError(path + ": not an evaluation report: " + e.what());
    }
    m.input(path);
  }
  MergedReport merged = merge_reports(reports);
  m.output("merged.json", dump(merged.to_json()));
  m.output("merged.csv", merged.to_csv());
  m.write();
}

// --- gradcheck ---------------------------------------------------------------

struct GradcheckArgs {
  int seeds = 3;
  int dim = 4;
  int vocab = 11;
  int length = 6;
  double tolerance = 1e-4;
};

bool cmd_gradcheck(const GradcheckArgs& a) {
  struct Setup {
    const char* name;
    nn::Cell cell;
    nn::Head head;
  };
  const Setup setups[] = {{"LSTM classifier", nn::Cell::Lstm, nn::Head::Classifier},
                          {"SRN classifier", nn::Cell::Srn, nn::Head::Classifier},
                          {"LSTM language model", nn::Cell::Lstm, nn::Head::LanguageModel}};
  nn::GradCheckOptions opt;
  opt.sequence_length = a.length;
  opt.tolerance = a.tolerance;
  bool ok = true;
  for (const auto& s : setups) {
    for (int seed = 1; seed <= a.seeds; ++seed) {
      nn::ModelSpec spec{s.cell, s.head, a.vocab, a.dim, a.dim, 2};
      auto r = nn::grad_check(spec, static_cast<std::uint64_t>(seed), opt);
      ok = ok && r.pass;
      std::printf("%-20s seed %d  max rel error %.3e  %s\n", s.name, seed, r.max_relative_error,
                  r.pass ? "ok" : "FAIL");
    }
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subject-verb agreement experiments with recurrent networks"};
  app.set_version_flag("--version", AGREE_VERSION);
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a parsed corpus from the built-in PP/RC grammar");
  s->add_option("--count", synth.count, "Number of sentences")->capture_default_str();
  s->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  s->add_option("-o,--out", synth.out, "Output CoNLL file")->required();

  ExtractArgs extract;
  auto* e = app.add_subcommand("extract", "Find subject-verb dependencies and write instances.jsonl");
  e->add_option("corpus", extract.corpora, "CoNLL corpus files")->required()->check(CLI::ExistingFile);
  e->add_option("-o,--out", extract.out, "Output directory")->required();
  e->add_option("--workers", extract.workers, "Worker threads")->capture_default_str();
  extract.config.attach(e);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Split, build vocabulary and verb forms, and write objective datasets");
  b->add_option("--corpus", build.corpora, "CoNLL corpus files")->required()->check(CLI::ExistingFile);
  b->add_option("--instances", build.instances, "instances.jsonl from extract")->required()->check(CLI::ExistingFile);
  b->add_option("--objective", build.objectives, "Objectives to build (repeatable)")->capture_default_str();
  b->add_option("-o,--out", build.out, "Output directory")->required();
  build.config.attach(b);

  TrainArgs trainargs;
  auto* t = app.add_subcommand("train", "Train one model per seed");
  t->add_option("--data", trainargs.data, "Directory written by build")->required()->check(CLI::ExistingDirectory);
  t->add_option("--objective", trainargs.objective, "Objective (overrides train.objective)");
  t->add_option("--cell", trainargs.cell, "LSTM or SRN (overrides train.cell)");
  t->add_option("--seeds", trainargs.seeds, "Number of runs; default 20 for NUMBER_PRED, 1 for LM, else 10");
  t->add_option("--resume", trainargs.resume, "Continue training from a checkpoint")->check(CLI::ExistingFile);
  t->add_option("-o,--out", trainargs.out, "Output directory")->required();
  trainargs.config.attach(t);

  EvalArgs evalargs;
  auto* v = app.add_subcommand("eval", "Stratified error rates of a checkpoint, baselines or external scores");
  v->add_option("--checkpoint", evalargs.checkpoint, "Trained checkpoint")->check(CLI::ExistingFile);
  v->add_option("--instances", evalargs.instances, "Instances to evaluate")->required()->check(CLI::ExistingFile);
  v->add_option("--vocab", evalargs.vocab, "vocab.json that must match the checkpoint")->check(CLI::ExistingFile);
  v->add_option("--scores", evalargs.scores, "External scores (JSON lines)")->check(CLI::ExistingFile);
  v->add_flag("--baselines", evalargs.baselines, "Also report majority and recency baselines");
  v->add_option("--sample-per-bin", evalargs.per_bin, "Subsample this many instances per attractor count");
  v->add_option("--sample-seed", evalargs.sample_seed, "Seed for --sample-per-bin")->capture_default_str();
  v->add_option("-o,--out", evalargs.out, "Output directory")->required();
  v->add_option("--workers", evalargs.workers, "Worker threads")->capture_default_str();

  ProbeArgs probe;
  auto* p = app.add_subcommand("probe", "Template prefixes, activation traces and embedding PCA");
  p->add_option("--checkpoint", probe.checkpoint, "Classifier checkpoint")->required()->check(CLI::ExistingFile);
  p->add_option("-o,--out", probe.out, "Output directory")->required();
  p->add_option("--workers", probe.workers, "Worker threads")->capture_default_str();
  probe.config.attach(p);

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Merge per-run reports into pooled and per-run-mean tables");
  r->add_option("reports", report.reports, "report.json files")->required()->check(CLI::ExistingFile);
  r->add_option("-o,--out", report.out, "Output directory")->required();

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  g->add_option("--seeds", gc.seeds)->capture_default_str();
  g->add_option("--dim", gc.dim, "Embedding and hidden size")->capture_default_str();
  g->add_option("--vocab", gc.vocab)->capture_default_str();
  g->add_option("--length", gc.length, "Sequence length")->capture_default_str();
  g->add_option("--tolerance", gc.tolerance)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int rc = app.exit(err);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  try {
    if (*s) cmd_synth(synth);
    else if (*e) cmd_extract(extract);
    else if (*b) cmd_build(build);
    else if (*t) cmd_train(trainargs);
    else if (*v) cmd_eval(evalargs);
    else if (*p) cmd_probe(probe);
    else if (*r) cmd_report(report);
    else if (*g) return cmd_gradcheck(gc) ? 0 : static_cast<int>(ExitCode::Numeric);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return static_cast<int>(err.code());
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "error: malformed JSON input: " << err.what() << "\n";
    return static_cast<int>(ExitCode::Data);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}

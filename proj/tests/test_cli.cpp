#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "agree/digest.hpp"
#include "agree/eval.hpp"
#include "agree/pipeline.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + " '" + std::string(AGREE_CLI) + "' " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) { return agree::read_text(path); }

// synth -> extract -> build under `dir`, small enough to train in a blink.
void prepare(const TempDir& dir, const std::string& objectives = "--objective NUMBER_PRED") {
  REQUIRE(run("synth --count 800 --seed 2 -o " + dir.file("c.conll")) == 0);
  REQUIRE(run("extract " + dir.file("c.conll") + " -o " + dir.file("ex")) == 0);
  REQUIRE(run("build --corpus " + dir.file("c.conll") + " --instances " + dir.file("ex/instances.jsonl") + " " +
              objectives + " -o " + dir.file("data") + " --set split.train=0.5 --set split.valid=0.1 --set split.test=0.4") == 0);
}

const std::string kTiny = " --set train.embed=3 --set train.hidden=3 --set train.max_epochs=1";

}  // namespace

TEST_CASE("extract reproduces the golden instances") {
  TempDir dir;
  REQUIRE(run("extract " + fixture("three.conll") + " -o " + dir.file("a")) == 0);
  CHECK(slurp(dir.file("a/instances.jsonl")) == slurp(fixture("three.instances.jsonl")));
  REQUIRE(run("extract " + fixture("three.conll") + " -o " + dir.file("b") + " --workers 3") == 0);
  for (const char* f : {"instances.jsonl", "stats.json", "attractor_histogram.csv", "manifest.json"})
    CHECK(slurp(dir.file(std::string("a/") + f)) == slurp(dir.file(std::string("b/") + f)));

  auto stats = json::parse(slurp(dir.file("a/stats.json")));
  CHECK(stats["instances"] == 3);
  CHECK(slurp(dir.file("a/attractor_histogram.csv")) == "n_attractors,count\n0,1\n1,2\n2,0\n3,0\n4+,0\n");
}

TEST_CASE("manifest lists every output with its digest") {
  TempDir dir;
  REQUIRE(run("extract " + fixture("three.conll") + " -o " + dir.file("a")) == 0);
  auto m = json::parse(slurp(dir.file("a/manifest.json")));
  CHECK(m["command"] == "extract");
  CHECK(m["inputs"][0]["sha256"] == agree::file_sha256_hex(fixture("three.conll")));
  REQUIRE(m["outputs"].size() == 3);
  for (const auto& o : m["outputs"])
    CHECK(o["sha256"] == agree::file_sha256_hex(dir.file("a/" + o["path"].get<std::string>())));
  CHECK(m["config"]["corpus"]["max_len"] == 50);
}

TEST_CASE("output root override") {
  TempDir dir;
  REQUIRE(run("extract " + fixture("three.conll") + " -o rel", "AGREE_OUTPUT_ROOT='" + dir.file("root") + "'") == 0);
  CHECK(fs::exists(dir.file("root/rel/instances.jsonl")));
}

TEST_CASE("exit codes") {
  TempDir dir;
  auto empty = dir.write("none.conll", "1\tDogs\t_\tNNS\tNNS\t_\t2\tnsubj\t_\t_\n2\tbarked\t_\tVBD\tVBD\t_\t0\troot\t_\t_\n");
  CHECK(run("extract " + empty + " -o " + dir.file("x")) == 3);
  CHECK(run("extract " + fixture("three.conll") + " -o " + dir.file("x") + " --set extract.bogus=1") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("probe -o " + dir.file("p")) == 2);
  CHECK(run("eval --instances " + fixture("three.instances.jsonl") + " -o " + dir.file("e")) == 2);
  CHECK(run("gradcheck") == 0);

  prepare(dir);
  CHECK(run("train --data " + dir.file("data") + " --objective SPELLING -o " + dir.file("t")) == 2);
  CHECK(run("train --data " + dir.file("data") + " --cell GRU --seeds 1 -o " + dir.file("t")) == 2);
  CHECK(run("train --data " + dir.file("data") + " --seeds 1 -o " + dir.file("t") + kTiny + " --set train.lr=1e400") == 2);
}

TEST_CASE("checkpoint and vocabulary must match") {
  TempDir dir;
  prepare(dir);
  REQUIRE(run("train --data " + dir.file("data") + " --seeds 1 -o " + dir.file("t") + kTiny) == 0);
  const auto ck = dir.file("t/seed-1/checkpoint.json");
  const auto inst = dir.file("data/instances.test.jsonl");
  CHECK(run("eval --checkpoint " + ck + " --instances " + inst + " --vocab " + dir.file("data/vocab.json") + " -o " +
            dir.file("e")) == 0);
  REQUIRE(run("build --corpus " + dir.file("c.conll") + " --instances " + dir.file("ex/instances.jsonl") + " -o " +
              dir.file("d2") + " --set vocab.cap=20") == 0);
  CHECK(run("eval --checkpoint " + ck + " --instances " + inst + " --vocab " + dir.file("d2/vocab.json") + " -o " +
            dir.file("e2")) == 3);
  CHECK(run("train --data " + dir.file("d2") + " --resume " + ck + " -o " + dir.file("t2") + kTiny) == 3);
}

TEST_CASE("eval of the golden checkpoint reproduces its report") {
  TempDir dir;
  REQUIRE(run("eval --checkpoint " + fixture("tiny_checkpoint.json") + " --instances " +
              fixture("annotated.instances.jsonl") + " -o " + dir.file("e")) == 0);
  CHECK(slurp(dir.file("e/report.csv")) == slurp(fixture("tiny_report.csv")));
}

TEST_CASE("seed counts per objective") {
  TempDir dir;
  prepare(dir, "--objective NUMBER_PRED --objective VERB_INFLECT --objective LM");
  auto runs = [&](const std::string& objective, const std::string& out) {
    REQUIRE(run("train --data " + dir.file("data") + " --objective " + objective + " -o " + dir.file(out) + kTiny) == 0);
    return json::parse(slurp(dir.file(out + "/summary.json")))["runs"].size();
  };
  CHECK(runs("NUMBER_PRED", "np") == 20);
  CHECK(runs("VERB_INFLECT", "vi") == 10);
  CHECK(runs("LM", "lm") == 1);
  CHECK(fs::exists(dir.file("np/seed-20/checkpoint.json")));
}

TEST_CASE("resume continues the epoch counter") {
  TempDir dir;
  prepare(dir);
  REQUIRE(run("train --data " + dir.file("data") + " --seeds 1 -o " + dir.file("a") + kTiny) == 0);
  REQUIRE(run("train --data " + dir.file("data") + " --resume " + dir.file("a/seed-1/checkpoint.json") + " -o " +
              dir.file("b") + kTiny) == 0);
  auto log = json::parse(slurp(dir.file("b/seed-1/log.json")));
  REQUIRE(log.size() == 1);
  CHECK(log[0]["epoch"] == 2);
  CHECK(json::parse(slurp(dir.file("b/seed-1/checkpoint.json")))["epoch"] == 2);
}

TEST_CASE("report over one run equals that run") {
  TempDir dir;
  prepare(dir);
  REQUIRE(run("train --data " + dir.file("data") + " --seeds 2 -o " + dir.file("t") + kTiny) == 0);
  for (int s : {1, 2})
    REQUIRE(run("eval --checkpoint " + dir.file("t/seed-" + std::to_string(s) + "/checkpoint.json") +
                " --instances " + dir.file("data/instances.test.jsonl") + " --baselines -o " +
                dir.file("e" + std::to_string(s))) == 0);
  REQUIRE(run("report " + dir.file("e1/report.json") + " -o " + dir.file("r1")) == 0);
  auto single = agree::EvalReport::from_json(json::parse(slurp(dir.file("e1/report.json"))));
  auto merged = json::parse(slurp(dir.file("r1/merged.json")));
  for (const auto& row : merged["strata"]) {
    const auto* s = single.find(row["key"].get<std::string>());
    REQUIRE(s);
    CHECK(row["n"] == s->n);
    CHECK(row["errors"] == s->errors);
    CHECK(row["mean_rate"].get<double>() == doctest::Approx(s->rate));
  }
  REQUIRE(run("report " + dir.file("e1/report.json") + " " + dir.file("e2/report.json") + " -o " + dir.file("r2")) == 0);
  CHECK(json::parse(slurp(dir.file("r2/merged.json")))["runs"] == 2);
  CHECK(fs::exists(dir.file("e1/majority.csv")));
  CHECK(fs::exists(dir.file("e1/recency.csv")));
}

TEST_CASE("probe writes templates, traces and projections") {
  TempDir dir;
  prepare(dir);
  REQUIRE(run("train --data " + dir.file("data") + " --seeds 1 -o " + dir.file("t") + kTiny) == 0);
  REQUIRE(run("probe --checkpoint " + dir.file("t/seed-1/checkpoint.json") + " -o " + dir.file("p")) == 0);
  for (const char* f : {"templates.csv", "conditions.csv", "long_pp.csv", "long_rc.csv", "pca.csv", "summary.json"})
    CHECK(fs::exists(dir.file(std::string("p/") + f)));
  auto summary = json::parse(slurp(dir.file("p/summary.json")));
  CHECK(summary["pp_total"] == 40);

  REQUIRE(run("build --corpus " + dir.file("c.conll") + " --instances " + dir.file("ex/instances.jsonl") +
              " --objective LM -o " + dir.file("lmdata")) == 0);
  REQUIRE(run("train --data " + dir.file("lmdata") + " --objective LM -o " + dir.file("lm") + kTiny) == 0);
  CHECK(run("probe --checkpoint " + dir.file("lm/seed-1/checkpoint.json") + " -o " + dir.file("p2")) == 2);
}

TEST_CASE("end-to-end runs are byte-identical") {
  TempDir a, b;
  for (const TempDir* d : {&a, &b}) {
    prepare(*d);
    REQUIRE(run("train --data " + d->file("data") + " --seeds 1 -o " + d->file("t") + kTiny) == 0);
    REQUIRE(run("eval --checkpoint " + d->file("t/seed-1/checkpoint.json") + " --instances " +
                d->file("data/instances.test.jsonl") + " -o " + d->file("e")) == 0);
  }
  for (const char* f : {"ex/instances.jsonl", "data/vocab.json", "data/NUMBER_PRED.train.jsonl",
                        "t/seed-1/checkpoint.json", "t/seed-1/log.json", "e/report.json", "e/report.csv"})
    CHECK(slurp(a.file(f)) == slurp(b.file(f)));
}

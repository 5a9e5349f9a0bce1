#include <doctest.h>

#include "clir/combiner.hpp"
#include "cli_driver.hpp"
#include "support.hpp"

using clir::test::cli;
using clir::test::cli_ok;
using clir::test::slurp;
using clir::test::summary_field;

namespace {

// A small dataset written into `dir`.
void small_synth(const clir::test::TempDir& dir, const std::string& noise = "0") {
  cli_ok({"synth", "--out", dir.path().string(), "--seed", "3", "--docs", "30", "--queries", "5", "--foreign-vocab",
          "300", "--english-vocab", "300", "--bitext-pairs", "60", "--heldout-pairs", "30", "--noise", noise});
}

std::vector<std::string> retrieve_args(const clir::test::TempDir& dir, const std::string& out) {
  return {"retrieve", "--corpus", dir.file("corpus.jsonl"), "--queries", dir.file("queries.tsv"), "--out",
          dir.file(out)};
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({}).code == clir::kExitUsage);
  CHECK(cli({"no-such-command"}).code == clir::kExitUsage);
  CHECK(cli({"synth"}).code == clir::kExitUsage);
  CHECK(cli({"synth", "--out", "x", "--bogus", "1"}).code == clir::kExitUsage);
  CHECK(cli({"evaluate", "--corpus", "/nonexistent/c", "--judgments", "j", "--returned", "r"}).code ==
        clir::kExitUsage);
  CHECK(cli({"--help"}).code == clir::kExitOk);

  clir::test::TempDir dir;
  const auto r = cli({"synth", "--out", dir.file("d"), "--noise", "1.5"});
  CHECK(r.code == clir::kExitUsage);
  CHECK(r.err.find("error:") == 0);
}

TEST_CASE("data errors exit with 2") {
  clir::test::TempDir dir;
  small_synth(dir);
  dir.write("broken.jsonl", "{\"id\": \"d1\", \"kind\": \"text\"\n");
  const auto r = cli({"evaluate", "--corpus", dir.file("broken.jsonl"), "--judgments", dir.file("judgments.tsv"),
                      "--returned", dir.file("judgments.tsv")});
  CHECK(r.code == clir::kExitData);
  CHECK(r.err.find("broken.jsonl") != std::string::npos);

  dir.write("bad_table.tsv", "f1\te1\t1.7\n");
  auto args = retrieve_args(dir, "run");
  args.insert(args.end(), {"--tt", dir.file("bad_table.tsv")});
  CHECK(cli(args).code == clir::kExitData);
}

TEST_CASE("retrieval needs a generator") {
  clir::test::TempDir dir;
  small_synth(dir);
  const auto r = cli(retrieve_args(dir, "run"));
  CHECK(r.code == clir::kExitUsage);
  CHECK(r.err.find("no evidence generator") != std::string::npos);

  CHECK(cli({"dump-evidence", "--corpus", dir.file("corpus.jsonl"), "--queries", dir.file("queries.tsv"), "--out",
             dir.file("e.tsv"), "--tt", dir.file("table1.tsv"), "--tt", dir.file("table1.tsv")})
            .code == clir::kExitUsage);
}

TEST_CASE("synth is deterministic") {
  clir::test::TempDir a, b;
  small_synth(a, "0.2");
  small_synth(b, "0.2");
  for (const char* name : {"corpus.jsonl", "bitext.tsv", "heldout.tsv", "table1.tsv", "mt.tsv", "queries.tsv",
                           "judgments.tsv"}) {
    CAPTURE(name);
    CHECK(slurp(a.file(name)) == slurp(b.file(name)));
  }
}

TEST_CASE("noise-free retrieval with the aligner table is perfect") {
  clir::test::TempDir dir;
  small_synth(dir);
  auto args = retrieve_args(dir, "run");
  args.insert(args.end(), {"--tt", dir.file("table1.tsv")});
  const auto r = cli_ok(args);
  CHECK(summary_field(r.out, "queries") == "5");
  CHECK(slurp(dir.file("run/run.txt")).find(" clir\n") != std::string::npos);

  const auto e = cli_ok({"evaluate", "--corpus", dir.file("corpus.jsonl"), "--judgments", dir.file("judgments.tsv"),
                         "--returned", dir.file("run/returned.tsv")});
  const std::string last = e.out.substr(e.out.rfind("evaluate:"));
  const std::string tail = "mAQWV=1.0\n";
  REQUIRE(last.size() >= tail.size());
  CHECK(last.substr(last.size() - tail.size()) == tail);
}

TEST_CASE("parallel ranking writes the same files") {
  clir::test::TempDir dir;
  small_synth(dir, "0.3");
  for (const char* jobs : {"1", "4"}) {
    auto args = retrieve_args(dir, std::string("run") + jobs);
    args.insert(args.end(), {"--tt", dir.file("table1.tsv"), "--jobs", jobs});
    cli_ok(args);
  }
  for (const char* name : {"run.txt", "cutoffs.tsv", "returned.tsv"})
    CHECK(slurp(dir.file(std::string("run1/") + name)) == slurp(dir.file(std::string("run4/") + name)));
}

TEST_CASE("fit-mixture keeps identical tables at equal weight") {
  clir::test::TempDir dir;
  small_synth(dir, "0.3");
  dir.write("copy.tsv", slurp(dir.file("table1.tsv")));
  cli_ok({"fit-mixture", "--bitext", dir.file("heldout.tsv"), "--out", dir.file("w.tsv"), "--tt",
          dir.file("table1.tsv"), "--tt", dir.file("copy.tsv")});
  const auto w = clir::load_mixture(dir.file("w.tsv"));
  CHECK(w.at("tt:table1") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w.at("tt:copy") == doctest::Approx(0.5).epsilon(1e-12));

  auto args = retrieve_args(dir, "run");
  args.insert(args.end(),
              {"--tt", dir.file("table1.tsv"), "--tt", dir.file("copy.tsv"), "--weights", dir.file("w.tsv")});
  CHECK(summary_field(cli_ok(args).out, "generators") == "2");
}

TEST_CASE("config files fill unset options and flags win") {
  clir::test::TempDir dir;
  small_synth(dir);
  auto args = retrieve_args(dir, "run");
  args.insert(args.end(), {"--tt", dir.file("table1.tsv")});
  cli_ok(args);
  const std::vector<std::string> evaluate{"evaluate", "--corpus", dir.file("corpus.jsonl"), "--judgments",
                                          dir.file("judgments.tsv"), "--returned", dir.file("run/returned.tsv")};

  dir.write("eval.conf", "# scoring\nbeta = 7.5\n");
  auto with_config = evaluate;
  with_config.insert(with_config.end(), {"--config", dir.file("eval.conf")});
  CHECK(summary_field(cli_ok(with_config).out, "beta") == "7.5");

  with_config.insert(with_config.end(), {"--beta", "12"});
  CHECK(summary_field(cli_ok(with_config).out, "beta") == "12.0");
  CHECK(summary_field(cli_ok(evaluate).out, "beta") == "40.0");

  dir.write("bad.conf", "beta 7\n");
  auto bad = evaluate;
  bad.insert(bad.end(), {"--config", dir.file("bad.conf")});
  CHECK(cli(bad).code == clir::kExitUsage);
  auto missing = evaluate;
  missing.insert(missing.end(), {"--config", dir.file("nope.conf")});
  CHECK(cli(missing).code == clir::kExitUsage);
}

TEST_CASE("non-lexical queries are skipped with a warning") {
  clir::test::TempDir dir;
  small_synth(dir);
  dir.write("extra.tsv", slurp(dir.file("queries.tsv")) + "QX\tsomething+\n");
  const auto r = cli_ok({"retrieve", "--corpus", dir.file("corpus.jsonl"), "--queries", dir.file("extra.tsv"),
                         "--out", dir.file("run"), "--tt", dir.file("table1.tsv")});
  CHECK(summary_field(r.out, "skipped") == "1");
  CHECK(r.err.find("QX") != std::string::npos);
}

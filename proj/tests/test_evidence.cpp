#include <doctest.h>

#include <random>

#include "clir/error.hpp"
#include "clir/evidence.hpp"
#include "clir/evidence_matrix.hpp"
#include "clir/vocabulary.hpp"
#include "support.hpp"

using namespace clir;
using doctest::Approx;

namespace {

TranslationTable small_table() {
  TranslationTable t("toy");
  t.add("f1", "e1", 0.6);
  t.add("f2", "e1", 0.4);
  t.add("f2", "e2", 0.9);
  return t;
}

// Random table over foreign f0..f{nf-1} and English e0..e{ne-1}.
TranslationTable random_table(std::mt19937_64& rng, int nf, int ne) {
  TranslationTable t("rand");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int f = 0; f < nf; ++f) {
    double left = 1.0;
    for (int e = 0; e < ne; ++e) {
      if (u(rng) < 0.5) continue;
      const double p = left * u(rng) * 0.9 + 1e-3;
      if (p > left) continue;
      left -= p;
      t.add("f" + std::to_string(f), "e" + std::to_string(e), p);
    }
  }
  return t;
}

Sentence random_sentence(std::mt19937_64& rng, int nf, int len) {
  std::uniform_int_distribution<int> pick(0, nf - 1);
  Sentence s;
  for (int i = 0; i < len; ++i) s.push_back("f" + std::to_string(pick(rng)));
  return s;
}

}  // namespace

TEST_CASE("tt_evidence takes the max over sentence tokens") {
  const auto t = small_table();
  const auto ev = tt_evidence(t, {"f1", "f2"});
  REQUIRE(ev.size() == 2);
  CHECK(ev.at("e1") == 0.6);
  CHECK(ev.at("e2") == 0.9);
  CHECK(tt_evidence(t, {"zz", "yy"}).empty());
  CHECK(tt_evidence(t, {"f1", "f1"}) == tt_evidence(t, {"f1"}));
}

TEST_CASE("cn_evidence weights table entries by arc probability") {
  TranslationTable t("toy");
  t.add("f1", "e1", 0.6);
  t.add("f2", "e1", 0.9);
  const ConfusionNetwork cn{{{{"f1", 0.5}, {"f2", 0.1}}}};
  const auto ev = cn_evidence(t, cn);
  REQUIRE(ev.size() == 1);
  CHECK(ev.at("e1") == Approx(0.30).epsilon(1e-15));
  CHECK(cn_evidence(t, ConfusionNetwork{{{{"zz", 1.0}}}}).empty());
}

TEST_CASE("certain confusion networks reduce to the sentence case") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto table = random_table(rng, 8, 6);
    const Sentence s = random_sentence(rng, 10, 1 + trial % 7);
    ConfusionNetwork cn;
    for (const auto& tok : s) cn.slots.push_back({{tok, 1.0}});
    CHECK(cn_evidence(table, cn) == tt_evidence(table, s));
  }
}

TEST_CASE("adding a table entry never lowers evidence") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto table = random_table(rng, 6, 5);
    const Sentence s = random_sentence(rng, 7, 4);
    ConfusionNetwork cn;
    for (const auto& tok : s) cn.slots.push_back({{tok, 0.6}, {"f" + std::to_string(trial % 6), 0.3}});
    const auto before_tt = tt_evidence(table, s);
    const auto before_cn = cn_evidence(table, cn);
    table.add("f" + std::to_string(trial % 6), "e" + std::to_string(trial % 9), u(rng));
    const auto after_tt = tt_evidence(table, s);
    const auto after_cn = cn_evidence(table, cn);
    for (const auto& [w, p] : before_tt) CHECK(after_tt.at(w) >= p);
    for (const auto& [w, p] : before_cn) CHECK(after_cn.at(w) >= p);
  }
}

TEST_CASE("build_evidence clamps and stays within the counting bound") {
  TranslationTable t("toy");
  t.add("f1", "e1", 1.0);
  t.add("f2", "e2", 0.5);
  Corpus corpus;
  corpus.add(Document{"d1", DocumentKind::text, {{"f1", "f2"}, {"f3"}}, {}});
  corpus.add(Document{"d2", DocumentKind::text, {{"f2"}, {"f1", "f1"}}, {}});
  const std::vector<Query> queries{parse_query("Q1\te1 e2"), parse_query("Q2\te3, e1")};
  CHECK(query_words(queries) == std::vector<Token>{"e1", "e2", "e3"});

  const TranslationTableGenerator gen(t);
  CHECK(gen.tag() == "tt:toy");
  const EvidenceMatrix m = build_evidence(gen, corpus, queries);
  CHECK(m.tag() == "tt:toy");
  CHECK(m.entries() <= 12);
  CHECK(m.get("d1", 0, "e1") == 1.0 - kEpsilon);
  CHECK(m.get("d1", 0, "e2") == 0.5);
  CHECK(m.get("d1", 1, "e1") == kEpsilon);
  CHECK(m.get("d2", 0, "e3") == kEpsilon);
  CHECK_FALSE(m.has("d2", 0, "e3"));
  for (const auto& [doc, sentences] : m.cells())
    for (const auto& [i, row] : sentences)
      for (const auto& [w, p] : row) {
        CHECK(p >= kEpsilon);
        CHECK(p <= 1.0 - kEpsilon);
      }
}

TEST_CASE("speech units use confusion-network evidence") {
  TranslationTable t("toy");
  t.add("f1", "e1", 0.8);
  Corpus corpus;
  corpus.add(Document{"s", DocumentKind::speech, {}, {ConfusionNetwork{{{{"f1", 0.5}, {"f2", 0.5}}}}}});
  const TranslationTableGenerator gen(t);
  const auto m = build_evidence_for_words(gen, corpus, std::vector<Token>{"e1"});
  CHECK(m.get("s", 0, "e1") == Approx(0.4).epsilon(1e-15));
}

TEST_CASE("evidence matrices persist byte-stably") {
  clir::test::TempDir dir;
  EvidenceMatrix m("gen");
  m.set("d2", 0, "b", 0.25);
  m.set("d1", 3, "a", 0.125);
  m.set("d1", 3, "c", 1.0);
  m.set("d1", 0, "z", 0.0);
  write_evidence(dir.file("m.tsv"), m);
  const std::string text = clir::test::slurp(dir.file("m.tsv"));
  CHECK(text.rfind("#generator=gen\n", 0) == 0);
  const EvidenceMatrix back = load_evidence(dir.file("m.tsv"));
  CHECK(back == m);
  CHECK(format_evidence(back) == text);
  CHECK(text.find("d1\t0\t") < text.find("d1\t3\t"));
  CHECK(text.find("d1\t3\t") < text.find("d2\t0\t"));
}

TEST_CASE("evidence matrix rejects a bad floor") {
  CHECK_THROWS_AS(EvidenceMatrix("x", 0.0), ConfigError);
  CHECK_THROWS_AS(EvidenceMatrix("x", 0.5), ConfigError);
}

TEST_CASE("vocabulary keeps the most frequent English tokens") {
  const Bitext bitext{{{"f"}, {"b", "a", "c", "a"}}, {{"f"}, {"c", "d", "a"}}};
  const auto v = Vocabulary::from_bitext(bitext, 3);
  CHECK(v.tokens() == std::vector<Token>{"a", "c", "b"});
  CHECK(v.index("c") == 1u);
  CHECK_FALSE(v.index("d").has_value());
  CHECK_THROWS_AS(Vocabulary({"x", "x"}), DataError);
  CHECK(Vocabulary({"x", "y"}).hash() != Vocabulary({"y", "x"}).hash());
}

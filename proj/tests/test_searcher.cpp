#include <doctest.h>

#include <algorithm>
#include <random>

#include "clir/error.hpp"
#include "clir/searcher.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace clir;
using doctest::Approx;

namespace {

SearcherModel random_model(int depth, int dim, std::mt19937_64& rng) {
  SearcherModel m({"a", "b", "c", "d"}, Vocabulary({"x", "y", "z"}), dim, depth);
  std::normal_distribution<double> normal(0.0, 0.7);
  for (auto block : m.parameters())
    for (double& v : block) v = normal(rng);
  return m;
}

// A one-to-one dictionary language: foreign fi translates to English ei.
struct DictionaryLanguage {
  int size;
  std::mt19937_64 rng;

  SentencePair pair(int length) {
    std::uniform_int_distribution<int> pick(0, size - 1);
    SentencePair p;
    for (int i = 0; i < length; ++i) {
      const int w = pick(rng);
      p.foreign.push_back("f" + std::to_string(w));
      p.english.push_back("e" + std::to_string(w));
    }
    return p;
  }
};

}  // namespace

TEST_CASE("searcher score examples") {
  SearcherModel zero({"a", "b"}, Vocabulary({"x"}), 3, 0);
  CHECK(searcher_score(zero, {"a", "b"}, "x") == 0.5);

  SearcherModel m({"a", "b", "c"}, Vocabulary({"x"}), 3, 0);
  m.foreign_emb.row(1) << 1.0, 1.0, 0.0;   // a
  m.foreign_emb.row(2) << 0.0, 0.0, 5.0;   // b, orthogonal to e(x)
  m.foreign_emb.row(3) << 1.0, -1.0, 0.0;  // c, orthogonal to e(x)
  m.english_emb.row(0) << 1.0, 1.0, 0.0;
  CHECK(searcher_score(m, {"a", "b", "c"}, "x") == Approx(0.8807970779778823).epsilon(1e-12));
}

TEST_CASE("unknown foreign tokens share the UNK row; unknown words are errors") {
  SearcherModel m({"a"}, Vocabulary({"x"}), 2, 0);
  m.foreign_emb.row(0) << 3.0, 0.0;
  m.english_emb.row(0) << 1.0, 0.0;
  CHECK(m.foreign_index("never-seen") == 0);
  CHECK(searcher_score(m, {"never-seen"}, "x") == Approx(sigmoid(3.0)));
  CHECK_THROWS_AS(searcher_score(m, {"a"}, "not-in-vocab"), DataError);
  CHECK_THROWS_AS(SearcherModel({"a"}, Vocabulary({"x"}), 0, 0), ConfigError);
  CHECK_THROWS_AS(SearcherModel({"a"}, Vocabulary({"x"}), 2, 2), ConfigError);
}

TEST_CASE("depth-0 scores ignore token order") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = random_model(0, 5, rng);
    Sentence s{"a", "b", "c", "d", "a", "zz"};
    const double before = searcher_score(m, s, "y");
    std::shuffle(s.begin(), s.end(), rng);
    CHECK(searcher_score(m, s, "y") == before);
  }
}

TEST_CASE("searcher gradients match central differences") {
  std::mt19937_64 rng(4);
  const std::vector<SearcherExample> batch{
      {{1, 2, 3}, {0, 1, 2}, {1.0, 0.0, 0.0}},
      {{4, 0}, {0, 1, 2}, {0.0, 1.0, 1.0}},
  };
  for (int depth : {0, 1}) {
    CAPTURE(depth);
    for (int point = 0; point < 10; ++point) CHECK(clir::test::searcher_gradient_error(random_model(depth, 4, rng), batch) <= 1e-4);
  }
}

TEST_CASE("training on a dictionary language recovers the dictionary") {
  for (unsigned seed : {1u, 2u, 3u}) {
    CAPTURE(seed);
    DictionaryLanguage lang{20, std::mt19937_64(seed)};
    Bitext train;
    for (int i = 0; i < 50; ++i) train.push_back(lang.pair(4));
    const auto vocab = Vocabulary::from_bitext(train, 1000);
    SearcherConfig cfg;
    cfg.optimizer = SearcherOptimizer::sgd;
    cfg.learning_rate = 1.0;
    cfg.dim = 16;
    cfg.epochs = 200;
    cfg.min_foreign_count = 1;
    const auto trained = train_searcher(train, vocab, cfg);

    // Single-word sentences never occur in training.
    double worst_positive = 1.0, worst_negative = 0.0;
    for (const auto& e : vocab.tokens()) {
      const std::string f = "f" + e.substr(1);
      worst_positive = std::min(worst_positive, searcher_score(trained.model, {f}, e));
      for (const auto& other : vocab.tokens())
        if (other != e) worst_negative = std::max(worst_negative, searcher_score(trained.model, {f}, other));
    }
    CHECK(worst_positive > 0.9);
    CHECK(worst_negative < 0.1);
  }
}

TEST_CASE("early epoch losses do not increase with a small step") {
  DictionaryLanguage lang{15, std::mt19937_64(21)};
  Bitext train;
  for (int i = 0; i < 40; ++i) train.push_back(lang.pair(5));
  const auto vocab = Vocabulary::from_bitext(train, 1000);
  for (auto optimizer : {SearcherOptimizer::sgd, SearcherOptimizer::adagrad}) {
    SearcherConfig cfg;
    cfg.optimizer = optimizer;
    cfg.learning_rate = 0.01;
    cfg.epochs = 5;
    const auto trained = train_searcher(train, vocab, cfg);
    REQUIRE(trained.epoch_loss.size() == 5);
    for (std::size_t e = 1; e < 5; ++e) CHECK(trained.epoch_loss[e] <= trained.epoch_loss[e - 1]);
  }
}

TEST_CASE("training is deterministic and rejects empty inputs") {
  DictionaryLanguage lang{10, std::mt19937_64(5)};
  Bitext train;
  for (int i = 0; i < 10; ++i) train.push_back(lang.pair(3));
  const auto vocab = Vocabulary::from_bitext(train, 1000);
  SearcherConfig cfg;
  cfg.epochs = 3;
  const auto a = train_searcher(train, vocab, cfg);
  const auto b = train_searcher(train, vocab, cfg);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK(a.model.english_emb == b.model.english_emb);
  CHECK_THROWS_AS(train_searcher({}, vocab, cfg), DataError);
  CHECK_THROWS_AS(train_searcher(train, Vocabulary(), cfg), DataError);

  SUBCASE("a runaway step size is reported") {
    cfg.optimizer = SearcherOptimizer::sgd;
    cfg.learning_rate = 1e300;
    CHECK_THROWS_AS(train_searcher(train, vocab, cfg), DataError);
  }
}

TEST_CASE("sampled negatives are used above the full-vocabulary limit") {
  DictionaryLanguage lang{30, std::mt19937_64(6)};
  Bitext train;
  for (int i = 0; i < 30; ++i) train.push_back(lang.pair(4));
  const auto vocab = Vocabulary::from_bitext(train, 1000);
  SearcherConfig cfg;
  cfg.full_vocab_max = 5;
  cfg.negatives_per_positive = 3;
  cfg.epochs = 2;
  const auto trained = train_searcher(train, vocab, cfg);
  CHECK(trained.epoch_loss.size() == 2);
  CHECK(std::isfinite(trained.epoch_loss.back()));
}

TEST_CASE("models persist exactly and check their manifest") {
  clir::test::TempDir dir;
  std::mt19937_64 rng(12);
  for (int depth : {0, 1}) {
    const auto m = random_model(depth, 3, rng);
    save_searcher(dir.file("m.txt"), m);
    const auto back = load_searcher(dir.file("m.txt"));
    CHECK(back.depth() == depth);
    CHECK(back.dim() == 3);
    CHECK(back.foreign_tokens() == m.foreign_tokens());
    CHECK(back.english() == m.english());
    CHECK(back.foreign_emb == m.foreign_emb);
    CHECK(back.english_emb == m.english_emb);
    CHECK(back.bias == m.bias);
    CHECK(back.query_proj == m.query_proj);
    CHECK(searcher_score(back, {"a", "c"}, "z") == searcher_score(m, {"a", "c"}, "z"));
  }
  std::string text = clir::test::slurp(dir.file("m.txt"));
  const auto at = text.find("\nx\n");
  REQUIRE(at != std::string::npos);
  text.replace(at, 3, "\nq\n");
  dir.write("tampered.txt", text);
  CHECK_THROWS_AS(load_searcher(dir.file("tampered.txt")), DataError);
}

TEST_CASE("the generator scores speech on the one-best path and skips unknown words") {
  SearcherModel m({"a", "b"}, Vocabulary({"x"}), 2, 0);
  m.foreign_emb.row(1) << 2.0, 0.0;
  m.english_emb.row(0) << 1.0, 0.0;
  const SearcherGenerator gen(m);
  CHECK(gen.tag() == "searcher");
  const Document speech{"s", DocumentKind::speech, {}, {ConfusionNetwork{{{{"b", 0.3}, {"a", 0.6}}}}}};
  const std::vector<Token> words{"x", "unknown"};
  const auto out = gen.evaluate(speech, 0, words);
  REQUIRE(out.size() == 1);
  CHECK(out[0].first == "x");
  CHECK(out[0].second == Approx(sigmoid(2.0)));
}

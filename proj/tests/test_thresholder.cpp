#include <doctest.h>

#include <random>
#include <sstream>

#include "clir/error.hpp"
#include "clir/thresholder.hpp"
#include "relevance_sim.hpp"

using namespace clir;
using doctest::Approx;

namespace {

RankedList list_of(const std::vector<double>& probs) {
  RankedList list{"q", {}};
  for (std::size_t i = 0; i < probs.size(); ++i) list.entries.push_back({"d" + std::to_string(i), probs[i]});
  return list;
}

ThresholdConfig config(double beta, double gamma) {
  ThresholdConfig cfg;
  cfg.beta = beta;
  cfg.gamma = gamma;
  return cfg;
}

std::uint32_t prefix_mask(std::size_t k) { return (1u << k) - 1u; }

}  // namespace

TEST_CASE("hand-enumerated cutoff") {
  const auto list = list_of({0.9, 0.6, 0.1});
  const auto d = decide(list, config(2.0, 1.0));
  CHECK(d.e_rel == Approx(1.6).epsilon(1e-14));
  REQUIRE(d.curve.size() == 4);
  const std::vector<double> expected{0.0, 0.41964, 0.22321, -1.0};
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(d.curve[k] - expected[k]) <= 1e-5);
  CHECK(d.k == 1);
  CHECK(d.expected_qv == d.curve[1]);
  CHECK(returned_documents(list, d) == std::vector<std::string>{"d0"});

  const auto curve = expected_qv_curve(list, config(2.0, 1.0));
  REQUIRE(curve.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(curve[k].first == k);
    CHECK(curve[k].second == d.curve[k]);
  }

  std::ostringstream out;
  write_cutoff(out, d);
  CHECK(out.str().rfind("q\t1\t0.41964", 0) == 0);
}

TEST_CASE("uniformly tiny probabilities return nothing") {
  for (std::size_t n : {1u, 5u, 50u})
    for (double beta : {1.0, 2.0, 40.0})
      for (double gamma : {1.0, 1.3}) {
        CAPTURE(n);
        CAPTURE(beta);
        CAPTURE(gamma);
        CHECK(decide(list_of(std::vector<double>(n, kEpsilon)), config(beta, gamma)).k == 0);
      }
}

TEST_CASE("near-certain probabilities return everything") {
  for (std::size_t n : {1u, 5u, 50u}) {
    CAPTURE(n);
    CHECK(decide(list_of(std::vector<double>(n, 1.0 - kEpsilon)), config(0.5, 1.0)).k == n);
  }
}

TEST_CASE("a single coin flip ties and keeps the smaller set") {
  const auto d = decide(list_of({0.5}), config(1.0, 1.0));
  REQUIRE(d.curve.size() == 2);
  CHECK(d.curve[0] == Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(d.curve[1]) <= 1e-15);
  CHECK(d.k == 0);
}

TEST_CASE("pass sums, conservation and boundary values") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto list = clir::test::random_ranked_list(rng, 1 + trial % 40);
    const auto d = decide(list, config(40.0, 1.3));
    const std::size_t n = list.entries.size();
    REQUIRE(d.e_miss.size() == n + 1);
    REQUIRE(d.e_fa.size() == n + 1);
    CHECK(d.curve.size() == n + 1);
    CHECK(d.e_miss[n] == 0.0);
    CHECK(d.e_fa[0] == 0.0);
    CHECK(d.e_miss[0] == d.e_rel);
    CHECK(d.e_fa[n] == Approx(static_cast<double>(n) - d.e_rel).epsilon(1e-12));
    for (std::size_t k = 0; k <= n; ++k) {
      double tail = 0.0, head = 0.0, head_p = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i >= k) tail += list.entries[i].prob;
        if (i < k) {
          head += 1.0 - list.entries[i].prob;
          head_p += list.entries[i].prob;
        }
      }
      CHECK(std::abs(d.e_miss[k] - tail) <= 1e-9);
      CHECK(std::abs(d.e_fa[k] - head) <= 1e-9);
      CHECK(std::abs(d.e_miss[k] + head_p - d.e_rel) <= 1e-9);
      if (k > 0) {
        CHECK(d.e_miss[k] <= d.e_miss[k - 1]);
        CHECK(d.e_fa[k] >= d.e_fa[k - 1]);
      }
      CHECK(d.curve[k] <= d.expected_qv);
    }
    for (std::size_t k = 0; k < d.k; ++k) CHECK(d.curve[k] < d.expected_qv);
  }
}

TEST_CASE("the chosen prefix is the best of all subsets") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 150; ++trial) {
    const auto list = clir::test::random_ranked_list(rng, 1 + trial % 12);
    const auto probs = list.probs();
    for (double beta : {1.0, 2.0, 40.0}) {
      const auto d = decide(list, config(beta, 1.0));
      const double best = clir::test::best_subset_expected_qv(probs, beta);
      CHECK(std::abs(clir::test::subset_expected_qv(probs, prefix_mask(d.k), beta) - best) <= 1e-9);
      CHECK(std::abs(d.expected_qv - best) <= 1e-9);
    }
  }
}

TEST_CASE("a larger false-alarm cost never grows the returned set") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto list = clir::test::random_ranked_list(rng, 1 + trial % 30);
    for (double gamma : {1.0, 1.3, 1.4}) {
      std::size_t previous = list.entries.size();
      for (double beta : {0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 40.0, 100.0}) {
        const auto k = decide(list, config(beta, gamma)).k;
        CHECK(k <= previous);
        previous = k;
      }
    }
  }
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(decide(list_of({}), ThresholdConfig{}), DataError);
  CHECK_THROWS_AS(decide(list_of({0.1, 0.5}), ThresholdConfig{}), DataError);
  CHECK_THROWS_AS(decide(list_of({0.5}), config(0.0, 1.0)), ConfigError);
  CHECK_THROWS_AS(decide(list_of({0.5}), config(1.0, -1.0)), ConfigError);
  ThresholdConfig bad_eps;
  bad_eps.eps = 0.0;
  CHECK_THROWS_AS(decide(list_of({0.5}), bad_eps), ConfigError);
}

TEST_CASE("default costs") {
  const ThresholdConfig cfg;
  CHECK(cfg.beta == 40.0);
  CHECK(cfg.gamma == 1.3);
}

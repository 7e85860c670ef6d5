#include <doctest.h>

#include <cmath>
#include <numeric>

#include "metric_oracles.hpp"
#include "scone/error.hpp"
#include "scone/evaluation.hpp"
#include "scone/rng.hpp"

#ifdef SCONE_HAVE_BOOST_MATH
#include <boost/math/special_functions/gamma.hpp>
#endif

using namespace scone;
using namespace scone::testing;

namespace {

std::vector<std::uint32_t> random_labels(std::size_t n, std::uint32_t k, Rng& rng) {
  std::vector<std::uint32_t> out(n);
  for (auto& v : out) v = static_cast<std::uint32_t>(rng.below(k));
  return out;
}

std::vector<std::uint32_t> relabel(std::vector<std::uint32_t> l) {
  for (auto& v : l) v = 100 - 3 * v;
  return l;
}

std::vector<SurvivalRecord> survival(const std::vector<double>& t, const std::vector<int>& e,
                                     const std::vector<std::uint32_t>& g) {
  std::vector<SurvivalRecord> out;
  for (std::size_t i = 0; i < t.size(); ++i) out.push_back({"s" + std::to_string(i), t[i], e[i] != 0, g[i]});
  return out;
}

}  // namespace

TEST_CASE("contingency table margins") {
  const std::vector<std::uint32_t> a{0, 0, 1, 2, 2, 2}, b{5, 6, 6, 5, 5, 7};
  const auto t = ContingencyTable::from_labels(a, b);
  CHECK(t.total == 6);
  CHECK(t.row_sums == std::vector<std::uint64_t>{2, 1, 3});
  CHECK(t.col_sums == std::vector<std::uint64_t>{3, 2, 1});
  std::uint64_t s = 0;
  for (const auto& row : t.counts) s += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  CHECK(s == 6);
  const std::vector<std::uint32_t> short_b{1};
  CHECK_THROWS_AS(ContingencyTable::from_labels(a, short_b), DimensionError);
}

TEST_CASE("ARI fixed points") {
  const std::vector<std::uint32_t> a{0, 0, 1, 1, 2, 2, 2};
  CHECK(ari(a, a) == 1.0);
  CHECK(ari(a, relabel(a)) == 1.0);
  std::vector<std::uint32_t> singletons(10), same(10, 0);
  std::iota(singletons.begin(), singletons.end(), 0u);
  CHECK(ari(singletons, same) == 0.0);
  const std::vector<std::uint32_t> one{0};
  CHECK_THROWS_AS(ari(one, one), ParameterError);
}

TEST_CASE("ARI matches pair counting on random labelings") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    const auto a = random_labels(n, 1 + static_cast<std::uint32_t>(rng.below(5)), rng);
    const auto b = random_labels(n, 1 + static_cast<std::uint32_t>(rng.below(5)), rng);
    const double want = ari_pairs(a, b);
    CHECK(ari(a, b) == doctest::Approx(want).epsilon(1e-12));
    CHECK(ari(b, a) == ari(a, b));
    CHECK(ari(relabel(a), b) == doctest::Approx(ari(a, b)).epsilon(1e-14));
    CHECK(ari(a, b) <= 1.0);
  }
}

TEST_CASE("ARI equals one only for identical partitions") {
  for (std::size_t n = 2; n <= 5; ++n) {
    const auto parts = all_partitions(n);
    for (const auto& a : parts)
      for (const auto& b : parts) CHECK((ari(a, b) == 1.0) == (a == b));
  }
}

TEST_CASE("expected mutual information matches enumeration") {
  Rng rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const auto a = random_labels(n, 1 + static_cast<std::uint32_t>(rng.below(4)), rng);
    const auto b = random_labels(n, 1 + static_cast<std::uint32_t>(rng.below(4)), rng);
    const auto t = ContingencyTable::from_labels(a, b);
    CHECK(expected_mutual_information(t) == doctest::Approx(expected_mi_enumerated(a, b)).epsilon(1e-10));
    CHECK(mutual_information(t) == doctest::Approx(mi_direct(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("AMI matches the enumeration oracle on every pair of small partitions") {
  AmiOracle oracle;
  for (std::size_t n = 2; n <= 6; ++n) {
    const auto parts = all_partitions(n);
    for (const auto& a : parts)
      for (const auto& b : parts) {
        const double want = oracle.ami(a, b);
        CHECK(std::abs(ami(a, b) - want) < 1e-9);
      }
  }
}

TEST_CASE("AMI special cases and symmetry") {
  const std::vector<std::uint32_t> same(6, 0), other(6, 3);
  CHECK(ami(same, other) == 1.0);
  std::vector<std::uint32_t> singletons(6);
  std::iota(singletons.begin(), singletons.end(), 0u);
  CHECK(ami(singletons, singletons) == 1.0);
  CHECK(ami(same, singletons) == doctest::Approx(0.0));
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_labels(40, 4, rng), b = random_labels(40, 3, rng);
    CHECK(ami(a, b) == doctest::Approx(ami(b, a)).epsilon(1e-12));
    CHECK(ami(relabel(a), b) == doctest::Approx(ami(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("AMI of independent labelings averages to zero") {
  Rng rng(4);
  double total = 0.0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) total += ami(random_labels(2000, 5, rng), random_labels(2000, 4, rng));
  CHECK(std::abs(total / trials) < 0.02);
}

TEST_CASE("regularized gamma Q") {
  CHECK(regularized_gamma_q(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(regularized_gamma_q(0.5, 2.0) == doctest::Approx(std::erfc(std::sqrt(2.0))).epsilon(1e-13));
  CHECK(regularized_gamma_q(3.0, 0.0) == 1.0);
  CHECK(chi_square_upper_tail(3.841458820694124, 1.0) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(chi_square_upper_tail(9.0, 2.0) == doctest::Approx(std::exp(-4.5)).epsilon(1e-14));
  // Deep tail stays in log space: Q(1, 1000) = e^-1000.
  CHECK(log_regularized_gamma_q(1.0, 1000.0) == doctest::Approx(-1000.0).epsilon(1e-13));
  CHECK_THROWS_AS(regularized_gamma_q(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(chi_square_upper_tail(1.0, 0.0), DomainError);
}

#ifdef SCONE_HAVE_BOOST_MATH
TEST_CASE("regularized gamma Q agrees with an independent implementation") {
  for (double a : {0.5, 1.0, 1.5, 2.0, 3.5, 7.0, 12.5, 40.0, 150.0})
    for (double x : {1e-3, 0.1, 0.7, 1.0, 2.5, 5.0, 10.0, 30.0, 80.0, 200.0, 600.0}) {
      const double want = boost::math::gamma_q(a, x);
      if (want < 1e-300) continue;
      CHECK(std::abs(regularized_gamma_q(a, x) - want) <= 1e-10 * want);
      CHECK(log_regularized_gamma_q(a, x) == doctest::Approx(std::log(want)).epsilon(1e-10));
    }
}
#endif

TEST_CASE("logrank: identical groups give no evidence") {
  const auto r = logrank(survival({1, 2, 3, 1, 2, 3}, {1, 1, 1, 1, 1, 1}, {0, 0, 0, 1, 1, 1}));
  CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK(r.dof == 1);
}

TEST_CASE("logrank: worked two-group example") {
  // Group A fails at 1, 2, 3 and group B at 4, 5, 6. Expected A deaths are
  // 3/6 + 2/5 + 1/4 = 1.15 with variance 0.25 + 0.24 + 0.1875 = 0.6775.
  const auto r = logrank(survival({1, 2, 3, 4, 5, 6}, {1, 1, 1, 1, 1, 1}, {0, 0, 0, 1, 1, 1}));
  const double stat = (3.0 - 1.15) * (3.0 - 1.15) / 0.6775;
  CHECK(r.statistic == doctest::Approx(stat).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(std::erfc(std::sqrt(stat / 2.0))).epsilon(1e-10));
  CHECK(r.neg_log10_p == doctest::Approx(-std::log10(r.p_value)).epsilon(1e-10));
}

TEST_CASE("logrank: tied event times and censoring") {
  // t=2: n=6 (3/3), two deaths both in A: E_A = 1, V = 3*3*2*4/(36*5) = 0.4.
  // t=5: n=3 (A 0, B 3 after censoring at 3): no contribution to A.
  const auto r = logrank(survival({2, 2, 3, 5, 6, 7}, {1, 1, 0, 1, 0, 1}, {0, 0, 0, 1, 1, 1}));
  CHECK(r.statistic == doctest::Approx(1.0 / 0.4).epsilon(1e-12));
}

TEST_CASE("logrank: three groups and relabelling") {
  Rng rng(5);
  std::vector<double> t;
  std::vector<int> e;
  std::vector<std::uint32_t> g;
  for (int i = 0; i < 45; ++i) {
    g.push_back(static_cast<std::uint32_t>(i % 3));
    t.push_back(rng.exponential(0.5 + g.back()));
    e.push_back(rng.uniform() < 0.8);
  }
  const auto r = logrank(survival(t, e, g));
  CHECK(r.dof == 2);
  CHECK(r.p_value == doctest::Approx(chi_square_upper_tail(r.statistic, 2.0)).epsilon(1e-12));
  std::vector<std::uint32_t> g2;
  for (auto v : g) g2.push_back(v == 0 ? 7u : v == 1 ? 2u : 4u);
  CHECK(logrank(survival(t, e, g2)).statistic == doctest::Approx(r.statistic).epsilon(1e-10));
}

TEST_CASE("logrank: evidence is monotone in the statistic") {
  double last = -1.0;
  for (double x : {0.1, 0.5, 1.0, 3.0, 10.0, 40.0, 200.0, 2000.0}) {
    const double v = -log_chi_square_upper_tail(x, 3.0) / std::log(10.0);
    CHECK(v > last);
    last = v;
  }
}

TEST_CASE("logrank: p-value agrees with a permutation test") {
  Rng rng(6);
  std::vector<double> t;
  std::vector<int> e;
  std::vector<std::uint32_t> g;
  for (int i = 0; i < 40; ++i) {
    g.push_back(i < 20 ? 0 : 1);
    t.push_back(rng.exponential(g.back() == 0 ? 1.0 : 2.2));
    e.push_back(rng.uniform() < 0.8);
  }
  const auto observed = logrank(survival(t, e, g));
  int exceed = 0;
  const int perms = 10000;
  for (int k = 0; k < perms; ++k) {
    rng.shuffle(std::span<std::uint32_t>(g));
    exceed += logrank(survival(t, e, g)).statistic >= observed.statistic - 1e-12;
  }
  const double empirical = static_cast<double>(exceed) / perms;
  MESSAGE("asymptotic p " << observed.p_value << ", permutation p " << empirical);
  CHECK(observed.p_value > 0.005);
  CHECK(observed.p_value < 0.5);
  CHECK(std::abs(observed.p_value - empirical) < 0.03);
}

TEST_CASE("logrank preconditions") {
  CHECK_THROWS_AS(logrank(survival({1, 2}, {1, 1}, {0, 0})), ParameterError);
  CHECK_THROWS_AS(logrank(survival({1, 2}, {0, 0}, {0, 1})), UndefinedError);
  CHECK_THROWS_AS(logrank(survival({-1, 2}, {1, 1}, {0, 1})), ParameterError);
}

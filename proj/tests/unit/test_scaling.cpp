#include <doctest.h>

#include <cmath>

#include "scone/error.hpp"
#include "scone/scaling.hpp"

using namespace scone;

namespace {

std::vector<ScalingRecord> planted(double exponent, double scale) {
  std::vector<ScalingRecord> out;
  for (std::size_t n : {500, 1000, 2000, 4000, 8000}) {
    ScalingRecord r;
    r.n = n;
    r.epoch_ms = scale * std::pow(static_cast<double>(n), exponent);
    r.peak_bytes = static_cast<std::size_t>(std::llround(r.epoch_ms));
    out.push_back(r);
  }
  return out;
}

ScalingOptions small_options() {
  ScalingOptions o;
  o.n_list = {60, 120, 240};
  o.k_k = 5;
  o.view_dims = {12, 6};
  o.model = {16, 8, 0.2};
  o.seed = 3;
  return o;
}

}  // namespace

TEST_CASE("fit_exponent recovers planted power laws") {
  CHECK(fit_exponent(planted(2.0, 3e-3), ScalingField::epoch_ms) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit_exponent(planted(1.0, 7.0), ScalingField::epoch_ms) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(fit_exponent(planted(1.0, 7.0), ScalingField::peak_bytes) - 1.0) < 0.05);
}

TEST_CASE("fit_exponent rejects degenerate input") {
  CHECK_THROWS_AS(fit_exponent(planted(0.0, 5.0), ScalingField::epoch_ms), UndefinedError);
  auto two = planted(1.0, 1.0);
  two.resize(2);
  CHECK_THROWS_AS(fit_exponent(two, ScalingField::epoch_ms), ParameterError);
  auto failed = planted(1.0, 1.0);
  failed[0].failed = true;
  failed[1].failed = true;
  failed[2].failed = true;
  CHECK_THROWS_AS(fit_exponent(failed, ScalingField::epoch_ms), ParameterError);
}

TEST_CASE("k_s rules") {
  CHECK(KsRule::parse("half").resolve(1001) == 500);
  CHECK(KsRule::parse("0.25").resolve(1000) == 250);
  CHECK_THROWS_AS(KsRule::parse("1.0"), ParameterError);
}

TEST_CASE("scaling run records both modes with exact counts") {
  const ScalingOptions o = small_options();
  const auto recs = run_scaling(o);
  REQUIRE(recs.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) {
    const ScalingRecord& full = recs[2 * i];
    const ScalingRecord& sub = recs[2 * i + 1];
    const std::size_t n = o.n_list[i];
    CHECK(full.mode == ScalingMode::full_graph);
    CHECK(sub.mode == ScalingMode::subset_pair);
    CHECK_FALSE(full.failed);
    CHECK_FALSE(sub.failed);
    CHECK(sub.k_s == n / 2);
    CHECK(full.peak_bytes > 0);
    CHECK(sub.peak_bytes > 0);
    // Two subsets of n/2 rows per view carry as many edges as the full graph.
    CHECK(sub.graph_edges == 2 * (n / 2) * o.k_k * 2);
    CHECK(full.graph_edges == n * o.k_k * 2);
    // Positives plus one-to-one negatives cover each subset exactly once.
    CHECK(sub.contrastive_evaluations == 2 * sub.k_s);
    CHECK(full.contrastive_evaluations == 2 * 2 * n);
  }
  CHECK(fit_exponent(std::vector<ScalingRecord>{recs[1], recs[3], recs[5]},
                     ScalingField::contrastive_evaluations) == doctest::Approx(1.0).epsilon(1e-12));
  const std::string table = format_scaling(recs);
  CHECK(table.rfind("n\tk_s\tmode\tpeak_bytes", 0) == 0);
  CHECK(table.find("subset-pair") != std::string::npos);
}

TEST_CASE("scaling options are validated") {
  ScalingOptions o = small_options();
  o.reps = 2;
  CHECK_THROWS_AS(run_scaling(o), ParameterError);
  o = small_options();
  o.n_list = {120, 60, 240};
  CHECK_THROWS_AS(run_scaling(o), ParameterError);
}

TEST_CASE("failures are recorded instead of aborting the run") {
  ScalingOptions o = small_options();
  o.n_list = {8, 60, 120};  // too few rows for k_k = 5 in a subset of 4
  const auto recs = run_scaling(o);
  REQUIRE(recs.size() == 6);
  CHECK(recs[1].failed);
  CHECK_FALSE(recs[1].error.empty());
  CHECK_FALSE(recs[3].failed);
}

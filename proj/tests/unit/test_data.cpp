#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "fixtures.hpp"
#include "scone/data.hpp"
#include "scone/error.hpp"
#include "scone/evaluation.hpp"

using namespace scone;
using namespace scone::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("scone_data_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

OmicsView parse(const std::string& text, Likelihood l = Likelihood::gaussian) {
  std::istringstream in(text);
  return read_view(in, l, "v");
}

// Split samples in half: estimate class means on one half, assign the other
// half to the nearest mean.
double nearest_centroid_ari(const Matrix& x, const std::vector<std::uint32_t>& labels, std::size_t k) {
  Matrix means(k, x.cols());
  std::vector<double> counts(k, 0.0);
  for (std::size_t i = 0; i < x.rows(); i += 2) {
    counts[labels[i]] += 1.0;
    for (std::size_t c = 0; c < x.cols(); ++c) means(labels[i], c) += x(i, c);
  }
  for (std::size_t g = 0; g < k; ++g)
    for (std::size_t c = 0; c < x.cols(); ++c) means(g, c) /= std::max(counts[g], 1.0);
  std::vector<std::uint32_t> truth, pred;
  for (std::size_t i = 1; i < x.rows(); i += 2) {
    double best = INFINITY;
    std::uint32_t arg = 0;
    for (std::size_t g = 0; g < k; ++g) {
      double d = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) d += std::pow(x(i, c) - means(g, c), 2);
      if (d < best) best = d, arg = static_cast<std::uint32_t>(g);
    }
    truth.push_back(labels[i]);
    pred.push_back(arg);
  }
  return ari(truth, pred);
}

SyntheticSpec one_view_spec(double separation, double missing, std::uint64_t seed) {
  SyntheticSpec s;
  s.n = 600;
  s.seed = seed;
  SyntheticViewSpec v;
  v.name = "rna";
  v.dim = 50;
  v.separation = separation;
  v.missing_fraction = missing;
  s.views = {v};
  return s;
}

}  // namespace

TEST_CASE("reading a small view") {
  const OmicsView v = parse("sample_id\tg1\tg2\na\t1.5\t-2\nb\t0\t3e2\n");
  CHECK(v.name == "v");
  CHECK(v.sample_ids == std::vector<std::string>{"a", "b"});
  CHECK(v.feature_names == std::vector<std::string>{"g1", "g2"});
  CHECK(v.x(0, 0) == 1.5);
  CHECK(v.x(0, 1) == -2.0);
  CHECK(v.x(1, 1) == 300.0);
  const OmicsView c = parse("id,g1\na,1\nb,2\n");
  CHECK(c.x(1, 0) == 2.0);
}

TEST_CASE("malformed view files report the line") {
  auto line_of = [](const std::string& text, Likelihood l = Likelihood::gaussian) -> std::size_t {
    try {
      parse(text, l);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("id\tg\na\t1\nb\t1\t2\n") == 3);
  CHECK(line_of("id\tg\na\t1\nb\tnan\n") == 3);
  CHECK(line_of("id\tg\na\t1\nb\tx\n") == 3);
  CHECK(line_of("id\tg\na\t1\na\t2\n") == 3);
  CHECK(line_of("id\tg\na\t0.5\nb\t1.5\n", Likelihood::bernoulli) == 3);
  try {
    parse("id\tg\nabc\t1\nabc\t2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("abc") != std::string::npos);
  }
}

TEST_CASE("views round-trip through files bit for bit") {
  TempDir dir;
  Rng rng(1);
  OmicsView v = make_view("rna", random_matrix(7, 5, rng, 1e3));
  v.x(0, 0) = 0.1 + 0.2;
  v.x(1, 1) = 1e-310;
  const fs::path p = dir.path / "rna.tsv";
  save_view(p, v);
  const OmicsView back = load_view(p, Likelihood::gaussian);
  CHECK(back.name == "rna");
  CHECK(back.sample_ids == v.sample_ids);
  CHECK(back.feature_names == v.feature_names);
  CHECK(back.x == v.x);
  CHECK_THROWS(load_view(dir.path / "missing.tsv", Likelihood::gaussian));
}

TEST_CASE("count normalisation") {
  Matrix x(3, 3);
  x(0, 0) = 1;
  x(0, 1) = 1;
  x(0, 2) = 2;
  x(2, 0) = 5;
  x(2, 2) = 7;
  const OmicsView v = normalize_counts(make_view("c", x), 1e4);
  CHECK(v.x(0, 0) == doctest::Approx(std::log1p(2500.0)).epsilon(1e-15));
  CHECK(v.x(0, 2) == doctest::Approx(std::log1p(5000.0)).epsilon(1e-15));
  for (std::size_t c = 0; c < 3; ++c) CHECK(v.x(1, c) == 0.0);
  CHECK(v.state == Preprocessing::normalized);

  Rng rng(2);
  Matrix r(20, 8);
  for (double& e : r.values()) e = std::floor(rng.uniform(0.0, 50.0));
  const OmicsView n = normalize_counts(make_view("c", r), 1e4);
  for (std::size_t i = 0; i < 20; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < 8; ++c) s += std::expm1(n.x(i, c));
    if (s > 0) CHECK(std::abs(s - 1e4) < 1e-8 * 1e4);
  }
  x(1, 1) = -1.0;
  CHECK_THROWS_AS(normalize_counts(make_view("c", x)), DomainError);
}

TEST_CASE("centred log-ratio") {
  Matrix x(3, 4, 6.0);
  Rng rng(3);
  for (std::size_t i = 1; i < 3; ++i)
    for (std::size_t c = 0; c < 4; ++c) x(i, c) = std::floor(rng.uniform(0.0, 100.0));
  const OmicsView v = clr_transform(make_view("p", x));
  for (std::size_t c = 0; c < 4; ++c) CHECK(v.x(0, c) == 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (std::size_t c = 0; c < 4; ++c) mean += std::log1p(x(i, c)) / 4.0;
    double row = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(std::abs(v.x(i, c) - (std::log1p(x(i, c)) - mean)) < 1e-12);
      row += v.x(i, c);
    }
    CHECK(std::abs(row / 4.0) < 1e-12);
  }
  x(0, 0) = -2.0;
  CHECK_THROWS_AS(clr_transform(make_view("p", x)), DomainError);
}

TEST_CASE("z-scoring") {
  Matrix x(2, 2);
  x(0, 0) = 1;
  x(1, 0) = 3;
  x(0, 1) = x(1, 1) = 4;
  const OmicsView v = zscore(make_view("z", x));
  CHECK(v.x(0, 0) == -1.0);
  CHECK(v.x(1, 0) == 1.0);
  CHECK(v.x(0, 1) == 0.0);
  CHECK(v.x(1, 1) == 0.0);
  CHECK(v.state == Preprocessing::zscored);

  Rng rng(4);
  const OmicsView r = zscore(make_view("z", random_matrix(30, 6, rng, 5.0)));
  for (std::size_t c = 0; c < 6; ++c) {
    double m = 0.0, s = 0.0;
    for (std::size_t i = 0; i < 30; ++i) m += r.x(i, c) / 30.0;
    for (std::size_t i = 0; i < 30; ++i) s += std::pow(r.x(i, c) - m, 2) / 30.0;
    CHECK(std::abs(m) < 1e-10);
    CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-10);
  }
  const OmicsView twice = zscore(r);
  for (std::size_t i = 0; i < r.x.size(); ++i) CHECK(std::abs(twice.x.values()[i] - r.x.values()[i]) < 1e-10);
  CHECK_THROWS_AS(zscore(make_view("z", random_matrix(1, 3, rng))), ParameterError);
}

TEST_CASE("synthetic generator is deterministic and aligned") {
  SyntheticSpec s = one_view_spec(4.0, 0.3, 11);
  SyntheticViewSpec b = s.views[0];
  b.name = "protein";
  b.dim = 10;
  s.views.push_back(b);
  const SyntheticData a = generate_synthetic(s);
  const SyntheticData c = generate_synthetic(s);
  CHECK(a.views[0].x == c.views[0].x);
  CHECK(a.views[1].sample_ids == c.views[1].sample_ids);
  CHECK(a.labels == c.labels);
  CHECK(a.sample_ids.size() == a.labels.size());
  CHECK(a.survival.size() == a.labels.size());

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < a.sample_ids.size(); ++i) index[a.sample_ids[i]] = i;
  std::map<std::string, int> seen;
  for (const auto& v : a.views)
    for (const auto& id : v.sample_ids) {
      CHECK(index.count(id) == 1);
      ++seen[id];
    }
  CHECK(seen.size() == a.sample_ids.size());
  for (std::size_t i = 0; i < a.survival.size(); ++i) {
    CHECK(a.survival[i].sample_id == a.sample_ids[i]);
    CHECK(a.survival[i].group == a.labels[i]);
    CHECK(a.survival[i].duration >= 0.0);
  }
}

TEST_CASE("missingness is binomial per view") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticData d = generate_synthetic(one_view_spec(4.0, 0.3, seed));
    const double mean = 0.7 * 600, sd = std::sqrt(600 * 0.7 * 0.3);
    CHECK(std::abs(static_cast<double>(d.views[0].samples()) - mean) <= 3 * sd);
  }
}

TEST_CASE("cluster structure follows the separation setting") {
  double worst_separated = 1.0, chance = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticData strong = generate_synthetic(one_view_spec(4.0, 0.0, seed));
    worst_separated = std::min(worst_separated, nearest_centroid_ari(strong.views[0].x, strong.labels, 3));
    const SyntheticData none = generate_synthetic(one_view_spec(0.0, 0.0, seed));
    chance += nearest_centroid_ari(none.views[0].x, none.labels, 3) / 5.0;
  }
  CHECK(worst_separated >= 0.95);
  CHECK(std::abs(chance) <= 0.1);
}

TEST_CASE("cluster maps merge clusters within a view") {
  SyntheticSpec s = one_view_spec(6.0, 0.0, 3);
  s.views[0].cluster_map = {0, 0, 1};
  const SyntheticData d = generate_synthetic(s);
  std::vector<std::uint32_t> merged;
  for (auto l : d.labels) merged.push_back(l == 2 ? 1 : 0);
  CHECK(nearest_centroid_ari(d.views[0].x, merged, 2) >= 0.95);
  CHECK(nearest_centroid_ari(d.views[0].x, d.labels, 3) < 0.8);
}

TEST_CASE("survival hazards scale with the cluster") {
  SyntheticSpec s = one_view_spec(4.0, 0.0, 5);
  s.n = 3000;
  s.censor_fraction = 0.0;
  const SyntheticData d = generate_synthetic(s);
  std::vector<double> sum(3, 0.0), count(3, 0.0);
  for (const auto& r : d.survival) {
    sum[r.group] += r.duration;
    count[r.group] += 1;
    CHECK(r.event);
  }
  // Mean of an exponential is 1/rate: 10, 10/3, 10/9.
  CHECK(sum[0] / count[0] == doctest::Approx(10.0).epsilon(0.1));
  CHECK(sum[1] / count[1] == doctest::Approx(10.0 / 3).epsilon(0.1));
  CHECK(sum[2] / count[2] == doctest::Approx(10.0 / 9).epsilon(0.1));
}

TEST_CASE("synthetic specs parse from key-value text") {
  std::istringstream in(
      "n = 120\nclusters = 2\nproportions = 0.25, 0.75\nseed = 9\nviews = a, b\n"
      "a.dim = 7\na.missing = 0.1\nb.likelihood = bernoulli\nb.cluster_map = 0,0\n");
  const SyntheticSpec s = parse_synthetic_spec(in);
  CHECK(s.n == 120);
  CHECK(s.proportions == std::vector<double>{0.25, 0.75});
  REQUIRE(s.views.size() == 2);
  CHECK(s.views[0].dim == 7);
  CHECK(s.views[0].missing_fraction == 0.1);
  CHECK(s.views[1].likelihood == Likelihood::bernoulli);
  CHECK(s.views[1].cluster_map == std::vector<std::size_t>{0, 0});
  const SyntheticData d = generate_synthetic(s);
  for (double v : d.views[1].x.values()) CHECK((v >= 0.0 && v <= 1.0));
  std::istringstream bad("proportions = 0.5, 0.2\nclusters = 2\n");
  CHECK_THROWS_AS(parse_synthetic_spec(bad), ParameterError);
}

TEST_CASE("label and survival files round-trip") {
  TempDir dir;
  const std::vector<std::string> ids{"a", "b", "c"};
  const std::vector<std::uint32_t> labels{2, 0, 2};
  write(dir.path / "labels.tsv", format_labels(ids, labels));
  const LabelTable t = load_labels(dir.path / "labels.tsv");
  CHECK(t.ids == ids);
  CHECK(t.labels == labels);

  const std::vector<SurvivalRecord> recs{{"a", 1.25, true, 0}, {"b", 0.1 + 0.2, false, 1}};
  write(dir.path / "surv.tsv", format_survival(recs));
  const auto back = load_survival(dir.path / "surv.tsv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].duration == recs[1].duration);
  CHECK(back[1].event == false);
  CHECK(back[0].group == 0);
  write(dir.path / "bad.tsv", "sample_id\tduration\tevent\tgroup\na\t-1\t1\t0\n");
  CHECK_THROWS_AS(load_survival(dir.path / "bad.tsv"), ParseError);
}

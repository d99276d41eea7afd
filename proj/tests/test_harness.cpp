// SPDX-License-Identifier: Apache-2.0
#include "dircov/errors.hpp"
#include "dircov/harness.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace dircov;

namespace {

std::string csv(const ResultTable& t) {
  std::ostringstream os;
  write_results_csv(os, t);
  return os.str();
}

ExperimentConfig small(ExperimentKind kind) {
  ExperimentConfig cfg = ExperimentConfig::defaults(kind);
  cfg.trials = 4;
  cfg.n_list = {60, 120};
  if (kind == ExperimentKind::prec_rates || kind == ExperimentKind::cov_rates) cfg.nu_list = {1.0, 1e-3};
  if (kind == ExperimentKind::sim_ols || kind == ExperimentKind::sim_acls) cfg.sigma_zeta_list = {0.0, 0.2};
  if (kind == ExperimentKind::eigengap_example) cfg.n_list = {1, 12};
  return cfg;
}

std::size_t count_metric(const ResultTable& t, const std::string& metric) {
  return static_cast<std::size_t>(
      std::count_if(t.rows.begin(), t.rows.end(), [&](const ResultRow& r) { return r.metric == metric; }));
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("experiment names") {
  CHECK(parse_experiment("prec-rates") == ExperimentKind::prec_rates);
  CHECK(parse_experiment("sim_acls") == ExperimentKind::sim_acls);
  CHECK(to_string(ExperimentKind::eigengap_example) == "eigengap_example");
  CHECK_THROWS_AS(parse_experiment("fig1"), InputError);
}

TEST_CASE("log_grid") {
  CHECK(log_grid(100, 10000, 8) == std::vector<Index>{100, 193, 373, 720, 1389, 2683, 5179, 10000});
  CHECK(log_grid(5, 5, 3) == std::vector<Index>{5});
  CHECK(log_grid(1, 4, 10).front() == 1);
  CHECK(log_grid(1, 4, 10).back() == 4);
  CHECK_THROWS_AS(log_grid(0, 10, 3), InputError);
}

TEST_CASE("stream index layout") {
  const auto s = trial_stream_index(ExperimentKind::sim_acls, 5, 17);
  CHECK((s >> 56) == static_cast<std::uint64_t>(ExperimentKind::sim_acls));
  CHECK(((s >> 24) & 0xffffffffULL) == 5);
  CHECK((s & 0xffffffULL) == 17);
  std::set<std::uint64_t> seen;
  for (auto kind : {ExperimentKind::prec_rates, ExperimentKind::cov_rates})
    for (std::uint64_t c = 0; c < 20; ++c)
      for (std::uint64_t t = 0; t < 50; ++t) seen.insert(trial_stream_index(kind, c, t));
  CHECK(seen.size() == 2 * 20 * 50);
}

TEST_CASE("defaults mirror the documented campaign") {
  const ExperimentConfig p = ExperimentConfig::defaults(ExperimentKind::prec_rates);
  CHECK(p.dim == 10);
  CHECK(p.trials == 100);
  CHECK(p.proj_rank == 3);
  CHECK(p.nu_list.size() == 10);
  CHECK(p.nu_list.back() == 1e-9);
  CHECK(ExperimentConfig::default_nu(ExperimentKind::prec_rates, 2).front() == 0.5);
  CHECK(ExperimentConfig::default_nu(ExperimentKind::prec_rates, 2).back() == 0.95);
  const ExperimentConfig s = ExperimentConfig::defaults(ExperimentKind::sim_acls);
  CHECK(s.alpha == 0.05);
  CHECK(s.link.kind == LinkKind::logit);
  CHECK(s.k_max == 40);
}

TEST_CASE("validate rejects out-of-range parameters") {
  auto bad = [](auto mutate) {
    ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentKind::prec_rates);
    mutate(cfg);
    return cfg;
  };
  CHECK_NOTHROW(bad([](ExperimentConfig&) {}).validate());
  CHECK_THROWS_AS(bad([](ExperimentConfig& c) { c.setting = 3; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](ExperimentConfig& c) { c.trials = 0; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](ExperimentConfig& c) { c.n_list = {100, 100}; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](ExperimentConfig& c) { c.n_list = {}; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](ExperimentConfig& c) { c.nu_list = {1.5}; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](ExperimentConfig& c) { c.dim = 8; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](ExperimentConfig& c) {
                    c.setting = 2;
                    c.nu_list = {1.0};
                  }).validate(),
                  InputError);
  ExperimentConfig sim = ExperimentConfig::defaults(ExperimentKind::sim_acls);
  sim.sigma_zeta_list = {-0.1};
  CHECK_THROWS_AS(sim.validate(), InputError);
  sim = ExperimentConfig::defaults(ExperimentKind::sim_acls);
  sim.alpha = 0.0;
  CHECK_THROWS_AS(sim.validate(), InputError);
}

TEST_CASE("setting 2 provenance embeds the covariance row") {
  ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentKind::prec_rates);
  cfg.setting = 2;
  cfg.dim = 3;
  cfg.proj_rank = 1;
  cfg.nu_list = {0.5};
  cfg.n_list = {20};
  cfg.trials = 1;
  const ResultTable t = run_experiment(cfg);
  const std::string text = csv(t);
  CHECK(text.find("# provenance: sigma_row1[nu=0.5]=1;0.5;0.25\n") != std::string::npos);
  CHECK(text.find("# provenance: master_seed=1\n") != std::string::npos);
  CHECK(text.find(std::string("# provenance: tool=") + std::string(kToolVersion)) != std::string::npos);
}

TEST_CASE("precision campaign row layout") {
  const ExperimentConfig cfg = small(ExperimentKind::prec_rates);
  const ResultTable t = run_experiment(cfg);
  const std::size_t metrics = 6;
  CHECK(t.rows.size() == cfg.nu_list.size() * cfg.n_list.size() * cfg.trials * metrics);
  for (const char* m : {"dir_AA", "dir_AB", "dir_BB", "iso", "iso_abs", "rel_eig"}) {
    CHECK(count_metric(t, m) == cfg.nu_list.size() * cfg.n_list.size() * cfg.trials);
  }
  // Canonical order: cell, then trial, then metric name.
  for (std::size_t k = 1; k < t.rows.size(); ++k) {
    const ResultRow& a = t.rows[k - 1];
    const ResultRow& b = t.rows[k];
    if (a.nu == b.nu && a.n == b.n) {
      CHECK(*a.trial <= *b.trial);
      if (*a.trial == *b.trial) CHECK(a.metric < b.metric);
    }
  }
  for (const ResultRow& r : t.rows) {
    CHECK(std::isfinite(r.value));
    CHECK(r.value >= 0.0);
    CHECK(r.setting == "setting1");
    CHECK_FALSE(r.j.has_value());
  }
}

TEST_CASE("identity precision concentration at N = 10^4") {
  ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentKind::prec_rates);
  cfg.nu_list = {1.0};
  cfg.n_list = {10000};
  const ResultTable t = run_experiment(cfg);
  const auto med = trial_median_curve(t, [](const ResultRow& r) { return r.metric == "iso"; });
  REQUIRE(med.size() == 1);
  CHECK(med[0].second < 0.2);
}

TEST_CASE("output does not depend on thread count") {
  for (auto kind : {ExperimentKind::prec_rates, ExperimentKind::cov_rates, ExperimentKind::sim_acls,
                    ExperimentKind::eigengap_example}) {
    ExperimentConfig cfg = small(kind);
    cfg.threads = 1;
    const std::string one = csv(run_experiment(cfg));
    cfg.threads = 3;
    const std::string three = csv(run_experiment(cfg));
    CHECK(one == three);
    CHECK(one == csv(run_experiment(cfg)));
  }
}

TEST_CASE("a single cell reproduces its in-campaign rows") {
  const ExperimentConfig cfg = small(ExperimentKind::sim_acls);
  const ResultTable full = run_experiment(cfg);
  const ResultTable cell = run_single_cell(cfg, 1, 0);
  std::vector<ResultRow> expect;
  for (const ResultRow& r : full.rows) {
    if (r.sigma_zeta == cfg.sigma_zeta_list[1] && r.n == cfg.n_list[0]) expect.push_back(r);
  }
  REQUIRE(cell.rows.size() == expect.size());
  for (std::size_t k = 0; k < expect.size(); ++k) {
    CHECK(cell.rows[k].metric == expect[k].metric);
    CHECK(cell.rows[k].value == expect[k].value);
  }
  CHECK_THROWS_AS(run_single_cell(cfg, 2, 0), InputError);
}

TEST_CASE("NA rows come with a per-cell counter") {
  // N = 5 < D makes the sample covariance rank-deficient in every trial.
  ExperimentConfig cfg = small(ExperimentKind::prec_rates);
  cfg.n_list = {5, 200};
  const ResultTable t = run_experiment(cfg);
  std::size_t na = 0;
  for (const ResultRow& r : t.rows) {
    if (!r.trial) continue;
    if (!std::isfinite(r.value)) ++na;
  }
  CHECK(na == cfg.nu_list.size() * cfg.trials * 6);
  std::size_t counters = 0;
  for (const ResultRow& r : t.rows) {
    if (r.trial) continue;
    ++counters;
    CHECK(r.metric.size() > 9);
    CHECK(r.metric.substr(r.metric.size() - 9) == "_na_count");
    CHECK(r.n == 5);
    CHECK(r.value == cfg.trials);
  }
  CHECK(counters == cfg.nu_list.size() * 6);
  const std::string text = csv(t);
  CHECK(text.find(",NA\n") != std::string::npos);
}

TEST_CASE("simulation rows") {
  const ExperimentConfig cfg = small(ExperimentKind::sim_acls);
  const ResultTable t = run_experiment(cfg);
  CHECK(count_metric(t, "ols_err") == cfg.sigma_zeta_list.size() * cfg.n_list.size() * cfg.trials);
  CHECK(count_metric(t, "acls_err") == count_metric(t, "ols_err"));
  CHECK(count_metric(t, "J_star") == count_metric(t, "ols_err"));
  for (const ResultRow& r : t.rows) {
    CHECK(r.link == "logit");
    if (r.metric == "J_star") {
      REQUIRE(r.j.has_value());
      CHECK(r.value == *r.j);
    }
    if (r.metric == "ols_err") CHECK_FALSE(r.j.has_value());
  }
  ExperimentConfig ols = small(ExperimentKind::sim_ols);
  ols.sigma_zeta_list = {0.0};
  ols.n_list = {10000};
  ols.trials = 10;
  for (const ResultRow& r : run_experiment(ols).rows) CHECK(r.value < 0.05);
}

TEST_CASE("eigengap example rows") {
  const ExperimentConfig cfg = small(ExperimentKind::eigengap_example);
  const ResultTable t = run_experiment(cfg);
  for (const ResultRow& r : t.rows) {
    if (r.metric != "dk_lhs") continue;
    CHECK(r.value >= -1e-12);
    CHECK(r.value <= 1.0 + 1e-12);
    if (*r.nu == 0.0 && r.n >= cfg.dim) CHECK(r.value <= 1e-12);
  }
  const auto eta1 = trial_median_curve(t, [](const ResultRow& r) { return r.metric == "dk_lhs" && *r.nu == 1.0; });
  CHECK(eta1.front().second > 0.5);
}

TEST_CASE("r_concentration rows") {
  ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentKind::r_concentration);
  cfg.trials = 3;
  cfg.n_list = {100, 1000};
  const ResultTable t = run_experiment(cfg);
  CHECK(count_metric(t, "r_err") == 6);
  CHECK(count_metric(t, "r_err_dir") == 6);
  for (const ResultRow& r : t.rows) CHECK(r.value >= 0.0);
}

TEST_CASE("results CSV round trip") {
  ExperimentConfig cfg = small(ExperimentKind::sim_acls);
  cfg.n_list = {5, 100};
  const ResultTable t = run_experiment(cfg);
  const std::string text = csv(t);
  std::istringstream in(text);
  const ResultTable back = read_results_csv(in);
  CHECK(csv(back) == text);
  CHECK(back.provenance == t.provenance);

  std::istringstream wrong("experiment,N,value\n");
  CHECK_THROWS_AS(read_results_csv(wrong), InputError);
  std::istringstream ragged(std::string(kResultHeader) + "\nprec_rates,setting1\n");
  CHECK_THROWS_AS(read_results_csv(ragged), InputError);
}

TEST_CASE("loglog_slope examples") {
  const std::vector<double> ns{100, 400, 1600, 6400};
  std::vector<double> half;
  std::vector<double> one;
  for (double n : ns) {
    half.push_back(3.0 / std::sqrt(n));
    one.push_back(2.0 / n);
  }
  const SlopeFit a = loglog_slope(ns, half);
  CHECK(a.slope == doctest::Approx(-0.5));
  CHECK(a.r_squared == doctest::Approx(1.0));
  CHECK(std::exp(a.intercept) == doctest::Approx(3.0));
  CHECK(loglog_slope(ns, one).slope == doctest::Approx(-1.0));
  const std::vector<double> n3{1, 4, 16};
  const std::vector<double> e3{1, 0.5, 0.25};
  CHECK(loglog_slope(n3, e3).slope == doctest::Approx(-0.5));

  const std::vector<double> e0{1, 0, 0.25};
  CHECK_THROWS_AS(loglog_slope(n3, e0), InputError);
  CHECK_THROWS_AS(loglog_slope(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InputError);
  CHECK_THROWS_AS(loglog_slope(n3, std::vector<double>{1, 2}), InputError);
}

TEST_CASE("loglog_slope r^2 against a hand computation") {
  // ln N = 0, 1, 2 and ln e = 0, -1, -1.5: slope -0.75, residuals (1/12)(-1, 2, -1).
  const std::vector<double> ns{1.0, std::exp(1.0), std::exp(2.0)};
  const std::vector<double> es{1.0, std::exp(-1.0), std::exp(-1.5)};
  const SlopeFit f = loglog_slope(ns, es);
  CHECK(f.slope == doctest::Approx(-0.75));
  const double ss_res = (1.0 + 4.0 + 1.0) / 144.0;
  const double mean = -2.5 / 3.0;
  const double ss_tot = mean * mean + (-1 - mean) * (-1 - mean) + (-1.5 - mean) * (-1.5 - mean);
  CHECK(f.r_squared == doctest::Approx(1.0 - ss_res / ss_tot));
}

TEST_CASE("slope_report") {
  ResultTable t;
  for (double nu : {1.0, 0.1}) {
    for (Index n : {100, 400, 1600}) {
      for (int trial = 0; trial < 3; ++trial) {
        ResultRow r;
        r.experiment = "prec_rates";
        r.setting = "setting1";
        r.nu = nu;
        r.dim = 10;
        r.n = n;
        r.trial = trial;
        r.metric = "iso";
        r.value = (1.0 + trial) * nu / std::sqrt(static_cast<double>(n));
        t.rows.push_back(r);
      }
    }
  }
  const auto by_nu = slope_report(t, {"nu"}, std::string("iso"));
  REQUIRE(by_nu.size() == 2);
  for (const SlopeGroup& g : by_nu) {
    REQUIRE(g.fit);
    CHECK(g.fit->slope == doctest::Approx(-0.5));
    CHECK(g.points == 3);
  }
  CHECK(by_nu[0].keys[0].second == "1");
  CHECK(by_nu[1].keys[0].second == "0.1");

  const auto none = slope_report(t, {"nu"}, std::string("dir_AA"));
  REQUIRE(none.size() == 1);
  CHECK_FALSE(none[0].fit);
  std::ostringstream os;
  write_slope_csv(os, {"nu"}, none);
  CHECK(os.str() == "metric,nu,points,slope,intercept,r_squared\ndir_AA,,0,NA,NA,NA\n");

  CHECK_THROWS_AS(slope_report(t, {"D"}, std::nullopt), InputError);
}

TEST_CASE("trial curves skip counters and NA") {
  ResultTable t;
  ResultRow r;
  r.metric = "m";
  r.n = 10;
  r.trial = 0;
  r.value = 1.0;
  t.rows.push_back(r);
  r.trial = 1;
  r.value = 3.0;
  t.rows.push_back(r);
  r.trial = 2;
  r.value = std::nan("");
  t.rows.push_back(r);
  r.trial.reset();
  r.value = 99.0;
  t.rows.push_back(r);
  const auto mean = trial_mean_curve(t, {});
  REQUIRE(mean.size() == 1);
  CHECK(mean[0].second == 2.0);
  CHECK(trial_median_curve(t, {})[0].second == 2.0);
}

}  // TEST_SUITE

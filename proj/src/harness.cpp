// SPDX-License-Identifier: Apache-2.0
#include "dircov/harness.hpp"

#include "dircov/directional.hpp"
#include "dircov/errors.hpp"
#include "dircov/format.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace dircov {

namespace {

constexpr double kNa = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kMaxTrials = (1ULL << 24) - 1;
constexpr std::uint64_t kReferenceCellFlag = 1ULL << 31;
constexpr Index kReferenceDraws = 1'000'000;
constexpr Index kReferenceChunk = 100'000;

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
  return s;
}

std::string join(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

using TrialFn = std::function<std::vector<ResultRow>(Rng&, int)>;

// Runs every trial of one parameter cell and appends its rows in canonical
// order: trial ascending, metric name ascending, then NA counters.
void run_cell(const ExperimentConfig& cfg, std::uint64_t cell, const TrialFn& trial_fn,
              std::vector<ResultRow>& out) {
  std::vector<std::vector<ResultRow>> per_trial(static_cast<std::size_t>(cfg.trials));
  parallel_for(per_trial.size(), cfg.threads, [&](std::size_t t) {
    Rng rng(RngStream{cfg.seed, trial_stream_index(cfg.experiment, cell, t)});
    auto rows = trial_fn(rng, static_cast<int>(t));
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ResultRow& a, const ResultRow& b) { return a.metric < b.metric; });
    per_trial[t] = std::move(rows);
  });

  std::map<std::string, std::pair<ResultRow, int>> na;
  for (auto& rows : per_trial) {
    for (auto& row : rows) {
      if (!std::isfinite(row.value)) {
        auto [it, inserted] = na.try_emplace(row.metric, row, 0);
        ++it->second.second;
      }
      out.push_back(std::move(row));
    }
  }
  for (auto& [metric, entry] : na) {
    ResultRow counter = entry.first;
    counter.trial.reset();
    counter.j.reset();
    counter.metric = metric + "_na_count";
    counter.value = entry.second;
    out.push_back(std::move(counter));
  }
}

ResultRow base_row(const ExperimentConfig& cfg, std::string setting, Index n) {
  ResultRow r;
  r.experiment = std::string(to_string(cfg.experiment));
  r.setting = std::move(setting);
  r.dim = cfg.dim;
  r.n = n;
  return r;
}

ResultRow with_metric(ResultRow row, int trial, std::string metric, double value) {
  row.trial = trial;
  row.metric = std::move(metric);
  row.value = value;
  return row;
}

void log_cell(const ProgressFn& progress, const ExperimentConfig& cfg, const std::string& what) {
  if (progress) progress("[" + std::string(to_string(cfg.experiment)) + "] " + what);
}

CovModel covariance_for(const ExperimentConfig& cfg, double nu, Rng& rng) {
  return cfg.setting == 1 ? make_sigma_setting1(nu, rng) : make_sigma_setting2(nu, cfg.dim);
}

std::string setting_label(const ExperimentConfig& cfg) {
  return cfg.setting == 1 ? "setting1" : "setting2";
}

// ||X M Y||_2 / sqrt(||X S X||_2 ||Y S Y||_2).
double normalized(const Matrix& x, const Matrix& y, const Matrix& err, const Matrix& scale) {
  const double nx = spectral_norm(x * scale * x.transpose());
  const double ny = spectral_norm(y * scale * y.transpose());
  return spectral_norm(x * err * y.transpose()) / std::sqrt(nx * ny);
}

ResultTable with_provenance(const ExperimentConfig& cfg) {
  ResultTable t;
  t.provenance = cfg.provenance();
  return t;
}

// Cross-covariance of (X, Y) from a long simulated run, merged chunk by chunk.
Vector reference_cross_covariance(const SimConfig& sim, Rng& rng) {
  const Index d = sim.a.size();
  Index count = 0;
  Vector mean_x = Vector::Zero(d);
  double mean_y = 0.0;
  Vector comoment = Vector::Zero(d);
  for (Index done = 0; done < kReferenceDraws; done += kReferenceChunk) {
    const Dataset chunk = generate_sim_data(sim, kReferenceChunk, rng);
    const Index m = chunk.n();
    const Vector cx = sample_mean(chunk);
    const double cy = chunk.y().mean();
    const Vector cc = cross_covariance(chunk) * static_cast<double>(m);
    const double total = static_cast<double>(count + m);
    const double w = static_cast<double>(count) * static_cast<double>(m) / total;
    comoment += cc + w * (cx - mean_x) * (cy - mean_y);
    mean_x += (cx - mean_x) * (static_cast<double>(m) / total);
    mean_y += (cy - mean_y) * (static_cast<double>(m) / total);
    count += m;
  }
  return comoment / static_cast<double>(count);
}

struct CellFilter {
  std::optional<std::uint64_t> cell;

  bool wants(std::uint64_t c) const { return !cell || *cell == c; }
  bool wants_any(std::uint64_t lo, std::uint64_t hi) const { return !cell || (*cell >= lo && *cell < hi); }
};

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::cov_rates: return "cov_rates";
    case ExperimentKind::prec_rates: return "prec_rates";
    case ExperimentKind::sim_ols: return "sim_ols";
    case ExperimentKind::sim_acls: return "sim_acls";
    case ExperimentKind::eigengap_example: return "eigengap_example";
    case ExperimentKind::r_concentration: return "r_concentration";
  }
  return "prec_rates";
}

ExperimentKind parse_experiment(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  for (ExperimentKind k : {ExperimentKind::cov_rates, ExperimentKind::prec_rates, ExperimentKind::sim_ols,
                           ExperimentKind::sim_acls, ExperimentKind::eigengap_example,
                           ExperimentKind::r_concentration}) {
    if (to_string(k) == s) return k;
  }
  throw InputError("unknown experiment '" + std::string(name) + "'");
}

std::vector<Index> log_grid(Index lo, Index hi, int n_points) {
  if (lo < 1 || hi < lo || n_points < 1) throw InputError("log_grid: need 1 <= lo <= hi, n >= 1");
  std::vector<Index> out;
  for (int k = 0; k < n_points; ++k) {
    const double frac = n_points == 1 ? 0.0 : static_cast<double>(k) / (n_points - 1);
    const auto v = static_cast<Index>(
        std::llround(static_cast<double>(lo) * std::pow(static_cast<double>(hi) / lo, frac)));
    if (out.empty() || v > out.back()) out.push_back(v);
  }
  return out;
}

std::vector<double> ExperimentConfig::default_nu(ExperimentKind kind, int setting) {
  if (kind == ExperimentKind::eigengap_example) return {1.0, 1e-1, 1e-2, 1e-3, 0.0};
  std::vector<double> nu;
  if (setting == 2) {
    for (int k = 0; k < 10; ++k) nu.push_back((50 + 5 * k) / 100.0);
  } else {
    for (int j = 0; j < 10; ++j) nu.push_back(std::pow(10.0, -j));
  }
  return nu;
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.n_list = log_grid(100, 10'000, 8);
  cfg.nu_list = default_nu(kind, cfg.setting);
  switch (kind) {
    case ExperimentKind::cov_rates:
    case ExperimentKind::prec_rates:
      break;
    case ExperimentKind::sim_ols:
      cfg.link = LinkFn{LinkKind::identity};
      cfg.sigma_zeta_list = {0.0, 0.1, 0.3};
      break;
    case ExperimentKind::sim_acls:
      cfg.link = LinkFn{LinkKind::logit};
      cfg.sigma_zeta_list = {0.0, 0.1, 0.3};
      break;
    case ExperimentKind::eigengap_example:
      cfg.n_list = {1, 2, 5, 10, 20};
      break;
    case ExperimentKind::r_concentration:
      cfg.link = LinkFn{LinkKind::logit};
      cfg.sigma_zeta_list = {0.1};
      break;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (trials < 1 || static_cast<std::uint64_t>(trials) > kMaxTrials) {
    throw InputError("trials must lie in [1, 2^24 - 1]");
  }
  if (threads < 1) throw InputError("threads must be >= 1");
  if (dim < 1) throw InputError("dim must be >= 1");
  if (n_list.empty()) throw InputError("N list must not be empty");
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    if (n_list[k] < 1) throw InputError("N values must be >= 1");
    if (k > 0 && n_list[k] <= n_list[k - 1]) throw InputError("N list must be strictly increasing");
  }
  if (rtol && !(*rtol >= 0.0)) throw InputError("rtol must be >= 0");

  auto need_noise = [&] {
    if (sigma_zeta_list.empty()) throw InputError("noise list must not be empty");
    for (double s : sigma_zeta_list) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("noise levels must be finite and >= 0");
    }
  };

  switch (experiment) {
    case ExperimentKind::cov_rates:
    case ExperimentKind::prec_rates:
      if (setting != 1 && setting != 2) throw InputError("setting must be 1 or 2");
      if (setting == 1 && dim != 10) throw InputError("setting 1 is defined for D = 10 only");
      if (proj_rank < 1 || proj_rank >= dim) throw InputError("projector rank must lie in [1, D-1]");
      if (nu_list.empty()) throw InputError("nu list must not be empty");
      for (double nu : nu_list) {
        if (setting == 1 && !(nu > 0.0 && nu <= 1.0)) throw InputError("setting 1 needs 0 < nu <= 1");
        if (setting == 2 && !(nu > 0.0 && nu < 1.0)) throw InputError("setting 2 needs 0 < nu < 1");
      }
      break;
    case ExperimentKind::sim_ols:
    case ExperimentKind::sim_acls:
      need_noise();
      if (!(alpha > 0.0)) throw InputError("alpha must be > 0");
      if (k_max < 0 || k_max > 80) throw InputError("kmax must lie in [0, 80]");
      break;
    case ExperimentKind::eigengap_example:
      if (dim < 2) throw InputError("eigengap example needs D >= 2");
      if (nu_list.empty()) throw InputError("eta list must not be empty");
      for (double eta : nu_list) {
        if (!(eta >= 0.0 && eta <= 1.0)) throw InputError("eta must lie in [0, 1]");
      }
      break;
    case ExperimentKind::r_concentration:
      need_noise();
      break;
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::provenance() const {
  std::vector<std::pair<std::string, std::string>> p{
      {"tool", std::string(kToolVersion)},
      {"experiment", std::string(to_string(experiment))},
      {"master_seed", std::to_string(seed)},
      {"setting", std::to_string(setting)},
      {"dim", std::to_string(dim)},
      {"nu", join(nu_list)},
      {"n", join(n_list)},
      {"trials", std::to_string(trials)},
      {"alpha", format_double(alpha)},
      {"noise", join(sigma_zeta_list)},
      {"link", std::string(link.name())},
      {"kmax", std::to_string(k_max)},
      {"rtol", rtol ? format_double(*rtol) : "auto"},
      {"proj_rank", std::to_string(proj_rank)},
      {"rng", "mt19937_64/seed_seq(master,stream) box-muller"},
  };
  const bool cov_campaign =
      experiment == ExperimentKind::cov_rates || experiment == ExperimentKind::prec_rates;
  if (cov_campaign && setting == 2) {
    for (double nu : nu_list) {
      if (!(nu > 0.0 && nu < 1.0) || dim < 1) continue;
      const CovModel m = make_sigma_setting2(nu, dim);
      std::string row;
      for (Index j = 0; j < dim; ++j) row += (j ? ";" : "") + format_double(m.matrix(0, j));
      p.emplace_back("sigma_row1[nu=" + format_double(nu) + "]", row);
    }
  }
  return p;
}

std::uint64_t trial_stream_index(ExperimentKind kind, std::uint64_t cell, std::uint64_t trial) {
  return (static_cast<std::uint64_t>(kind) << 56) | ((cell & 0xffffffffULL) << 24) |
         (trial & kMaxTrials);
}

static ResultTable run_precision_experiment_impl(const ExperimentConfig& cfg,
                                                 const ProgressFn& progress, CellFilter only) {
  if (cfg.experiment != ExperimentKind::prec_rates) throw InputError("config is not prec_rates");
  cfg.validate();
  ResultTable table = with_provenance(cfg);
  const std::size_t nn = cfg.n_list.size();
  for (std::size_t vi = 0; vi < cfg.nu_list.size(); ++vi) {
    const double nu = cfg.nu_list[vi];
    for (std::size_t ni = 0; ni < nn; ++ni) {
      const Index n = cfg.n_list[ni];
      ResultRow base = base_row(cfg, setting_label(cfg), n);
      base.nu = nu;
      if (!only.wants(vi * nn + ni)) continue;
      run_cell(cfg, vi * nn + ni, [&](Rng& rng, int trial) {
        const CovModel model = covariance_for(cfg, nu, rng);
        const Projector a = random_orthoprojector(cfg.dim, cfg.proj_rank, rng);
        const Projector b = a.complement();
        const Dataset data = sample_gaussian(model, n, rng);
        const SymMatrix shat = sample_covariance(data);

        std::vector<ResultRow> rows;
        auto put = [&](std::string metric, double v) {
          rows.push_back(with_metric(base, trial, std::move(metric), v));
        };
        if (numerical_rank(shat, cfg.rtol) < numerical_rank(model.matrix, cfg.rtol)) {
          for (const char* m : {"dir_AA", "dir_AB", "dir_BB", "iso", "iso_abs", "rel_eig"}) put(m, kNa);
          return rows;
        }
        const Matrix sd = pinv_psd(model.matrix, cfg.rtol).matrix();
        const Matrix shd = pinv_psd(shat, cfg.rtol).matrix();
        const Matrix err = shd - sd;
        const Matrix& am = a.matrix();
        const Matrix& bm = b.matrix();
        const double iso_abs = spectral_norm(err);
        put("dir_AA", normalized(am, am, err, sd));
        put("dir_BB", normalized(bm, bm, err, sd));
        put("dir_AB", normalized(am, bm, err, sd));
        put("iso", iso_abs / spectral_norm(sd));
        put("iso_abs", iso_abs);
        double rel = kNa;
        try {
          rel = relative_eigenvalue_error(model.matrix, shat, cfg.rtol);
        } catch (const RankCollapseError&) {
        }
        put("rel_eig", rel);
        return rows;
      }, table.rows);
      log_cell(progress, cfg, "nu=" + format_double(nu) + " N=" + std::to_string(n));
    }
  }
  return table;
}

static ResultTable run_covariance_experiment_impl(const ExperimentConfig& cfg,
                                                  const ProgressFn& progress, CellFilter only) {
  if (cfg.experiment != ExperimentKind::cov_rates) throw InputError("config is not cov_rates");
  cfg.validate();
  ResultTable table = with_provenance(cfg);
  const std::size_t nn = cfg.n_list.size();
  for (std::size_t vi = 0; vi < cfg.nu_list.size(); ++vi) {
    const double nu = cfg.nu_list[vi];
    for (std::size_t ni = 0; ni < nn; ++ni) {
      const Index n = cfg.n_list[ni];
      ResultRow base = base_row(cfg, setting_label(cfg), n);
      base.nu = nu;
      if (!only.wants(vi * nn + ni)) continue;
      run_cell(cfg, vi * nn + ni, [&](Rng& rng, int trial) {
        const CovModel model = covariance_for(cfg, nu, rng);
        const Projector a = random_orthoprojector(cfg.dim, cfg.proj_rank, rng);
        const Projector b = a.complement();
        const Dataset data = sample_gaussian(model, n, rng);
        const SymMatrix shat = sample_covariance(data);
        const Matrix& s = model.matrix.matrix();
        const Matrix err = shat.matrix() - s;
        const double iso_abs = spectral_norm(err);
        return std::vector<ResultRow>{
            with_metric(base, trial, "dir_AA", normalized(a.matrix(), a.matrix(), err, s)),
            with_metric(base, trial, "dir_AB", normalized(a.matrix(), b.matrix(), err, s)),
            with_metric(base, trial, "dir_BB", normalized(b.matrix(), b.matrix(), err, s)),
            with_metric(base, trial, "iso", iso_abs / spectral_norm(s)),
            with_metric(base, trial, "iso_abs", iso_abs),
        };
      }, table.rows);
      log_cell(progress, cfg, "nu=" + format_double(nu) + " N=" + std::to_string(n));
    }
  }
  return table;
}

static ResultTable run_sim_experiment_impl(const ExperimentConfig& cfg,
                                           const ProgressFn& progress, CellFilter only) {
  const bool acls = cfg.experiment == ExperimentKind::sim_acls;
  if (!acls && cfg.experiment != ExperimentKind::sim_ols) throw InputError("config is not sim_ols/sim_acls");
  cfg.validate();
  ResultTable table = with_provenance(cfg);
  const std::size_t nn = cfg.n_list.size();
  for (std::size_t si = 0; si < cfg.sigma_zeta_list.size(); ++si) {
    const double sigma = cfg.sigma_zeta_list[si];
    const SimConfig sim = SimConfig::standard(cfg.dim, cfg.link, sigma);
    for (std::size_t ni = 0; ni < nn; ++ni) {
      const Index n = cfg.n_list[ni];
      ResultRow base = base_row(cfg, "identity", n);
      base.link = std::string(cfg.link.name());
      base.sigma_zeta = sigma;
      if (!only.wants(si * nn + ni)) continue;
      run_cell(cfg, si * nn + ni, [&](Rng& rng, int trial) {
        const Dataset raw = generate_sim_data(sim, n, rng);
        std::vector<ResultRow> rows;
        std::optional<Dataset> data;
        try {
          data = raw.with_y(rescale_responses(raw.y()));
        } catch (const DegenerateError&) {
        }
        double ols_err = kNa;
        if (data) {
          const OlsFit fit = ols_fit(*data, cfg.rtol);
          if (fit.direction) ols_err = aligned_error(*fit.direction, sim.a);
        }
        rows.push_back(with_metric(base, trial, "ols_err", ols_err));
        if (!acls) return rows;

        double acls_err = kNa;
        double j_star = kNa;
        std::optional<int> j_col;
        if (data) {
          const JSelection sel = select_J(*data, cfg.alpha, cfg.k_max, cfg.rtol);
          j_star = sel.j_star;
          j_col = sel.j_star;
          if (sel.model) acls_err = aligned_error(sel.model->u1, sim.a);
        }
        ResultRow r1 = with_metric(base, trial, "acls_err", acls_err);
        ResultRow r2 = with_metric(base, trial, "J_star", j_star);
        r1.j = j_col;
        r2.j = j_col;
        rows.push_back(std::move(r1));
        rows.push_back(std::move(r2));
        return rows;
      }, table.rows);
      log_cell(progress, cfg, "link=" + std::string(cfg.link.name()) + " sigma_zeta=" +
                                  format_double(sigma) + " N=" + std::to_string(n));
    }
  }
  return table;
}

static ResultTable run_eigengap_example_impl(const ExperimentConfig& cfg,
                                             const ProgressFn& progress, CellFilter only) {
  if (cfg.experiment != ExperimentKind::eigengap_example) throw InputError("config is not eigengap_example");
  cfg.validate();
  ResultTable table = with_provenance(cfg);
  const Index d = cfg.dim;
  const std::size_t nn = cfg.n_list.size();
  for (std::size_t ei = 0; ei < cfg.nu_list.size(); ++ei) {
    const double eta = cfg.nu_list[ei];
    Vector diag = Vector::Ones(d);
    diag(d - 1) = eta * eta;
    const CovModel model = make_sigma_custom(SymMatrix::diagonal(diag));
    const Projector p = spectral_projector(model.matrix.eigen(), d, d);
    for (std::size_t ni = 0; ni < nn; ++ni) {
      const Index n = cfg.n_list[ni];
      ResultRow base = base_row(cfg, "custom", n);
      base.nu = eta;
      if (!only.wants(ei * nn + ni)) continue;
      run_cell(cfg, ei * nn + ni, [&](Rng& rng, int trial) {
        const Dataset data = sample_gaussian(model, n, rng);
        // Known zero mean: the estimate is the rank-min(N, D) matrix N^-1 sum X X^T.
        const SymMatrix shat = second_moment(data);
        const Projector q = spectral_projector(shat.eigen(), d, d).complement();
        const DkDiagnostic dk = davis_kahan_check(model.matrix, shat, d, d);
        return std::vector<ResultRow>{
            with_metric(base, trial, "dk_lhs", projector_overlap(q, p)),
            with_metric(base, trial, "dk_valid", dk.valid ? 1.0 : 0.0),
        };
      }, table.rows);
      log_cell(progress, cfg, "eta=" + format_double(eta) + " N=" + std::to_string(n));
    }
  }
  return table;
}

static ResultTable run_r_concentration_impl(const ExperimentConfig& cfg,
                                            const ProgressFn& progress, CellFilter only) {
  if (cfg.experiment != ExperimentKind::r_concentration) throw InputError("config is not r_concentration");
  cfg.validate();
  ResultTable table = with_provenance(cfg);
  const std::size_t nn = cfg.n_list.size();
  for (std::size_t si = 0; si < cfg.sigma_zeta_list.size(); ++si) {
    const double sigma = cfg.sigma_zeta_list[si];
    const SimConfig sim = SimConfig::standard(cfg.dim, cfg.link, sigma);
    if (!only.wants_any(si * nn, (si + 1) * nn)) continue;
    Rng ref_rng(RngStream{cfg.seed, trial_stream_index(cfg.experiment, kReferenceCellFlag | si, 0)});
    const Vector r_ref = reference_cross_covariance(sim, ref_rng);
    for (std::size_t ni = 0; ni < nn; ++ni) {
      const Index n = cfg.n_list[ni];
      ResultRow base = base_row(cfg, "identity", n);
      base.link = std::string(cfg.link.name());
      base.sigma_zeta = sigma;
      if (!only.wants(si * nn + ni)) continue;
      run_cell(cfg, si * nn + ni, [&](Rng& rng, int trial) {
        const Dataset data = generate_sim_data(sim, n, rng);
        const Vector diff = cross_covariance(data) - r_ref;
        return std::vector<ResultRow>{
            with_metric(base, trial, "r_err", diff.norm()),
            with_metric(base, trial, "r_err_dir", std::abs(sim.a.dot(diff))),
        };
      }, table.rows);
      log_cell(progress, cfg, "sigma_zeta=" + format_double(sigma) + " N=" + std::to_string(n));
    }
  }
  return table;
}

namespace {

ResultTable dispatch(const ExperimentConfig& cfg, const ProgressFn& progress, CellFilter only) {
  switch (cfg.experiment) {
    case ExperimentKind::cov_rates: return run_covariance_experiment_impl(cfg, progress, only);
    case ExperimentKind::prec_rates: return run_precision_experiment_impl(cfg, progress, only);
    case ExperimentKind::sim_ols:
    case ExperimentKind::sim_acls: return run_sim_experiment_impl(cfg, progress, only);
    case ExperimentKind::eigengap_example: return run_eigengap_example_impl(cfg, progress, only);
    case ExperimentKind::r_concentration: return run_r_concentration_impl(cfg, progress, only);
  }
  throw InputError("unknown experiment");
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  return dispatch(cfg, progress, {});
}

ResultTable run_single_cell(const ExperimentConfig& cfg, std::size_t param_index, std::size_t n_index) {
  cfg.validate();
  const std::size_t params = cfg.experiment == ExperimentKind::prec_rates ||
                                     cfg.experiment == ExperimentKind::cov_rates ||
                                     cfg.experiment == ExperimentKind::eigengap_example
                                 ? cfg.nu_list.size()
                                 : cfg.sigma_zeta_list.size();
  if (param_index >= params || n_index >= cfg.n_list.size()) throw InputError("cell index out of range");
  return dispatch(cfg, {}, CellFilter{param_index * cfg.n_list.size() + n_index});
}

ResultTable run_precision_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  return run_precision_experiment_impl(cfg, progress, {});
}

ResultTable run_covariance_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  return run_covariance_experiment_impl(cfg, progress, {});
}

ResultTable run_sim_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  return run_sim_experiment_impl(cfg, progress, {});
}

ResultTable run_eigengap_example(const ExperimentConfig& cfg, const ProgressFn& progress) {
  return run_eigengap_example_impl(cfg, progress, {});
}

ResultTable run_r_concentration(const ExperimentConfig& cfg, const ProgressFn& progress) {
  return run_r_concentration_impl(cfg, progress, {});
}

SlopeFit loglog_slope(std::span<const double> ns, std::span<const double> errors) {
  if (ns.size() != errors.size()) throw InputError("loglog_slope: length mismatch");
  if (ns.size() < 3) throw InputError("loglog_slope: need at least 3 points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    if (!(ns[k] > 0.0)) throw InputError("loglog_slope: N values must be positive");
    if (!(errors[k] > 0.0) || !std::isfinite(errors[k])) {
      throw InputError("loglog_slope: error values must be positive and finite");
    }
    lx.push_back(std::log(ns[k]));
    ly.push_back(std::log(errors[k]));
  }
  const double m = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  if (!(sxx > 0.0)) throw InputError("loglog_slope: N values must not all be equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    const double r = ly[k] - (fit.intercept + fit.slope * lx[k]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

namespace {

std::map<Index, std::vector<double>> values_by_n(const ResultTable& table, const RowPredicate& select) {
  std::map<Index, std::vector<double>> by_n;
  for (const ResultRow& r : table.rows) {
    if (!r.trial || !std::isfinite(r.value)) continue;
    if (select && !select(r)) continue;
    by_n[r.n].push_back(r.value);
  }
  return by_n;
}

std::string key_value(const ResultRow& r, const std::string& key) {
  if (key == "nu") return r.nu ? format_double(*r.nu) : "";
  if (key == "link") return r.link;
  if (key == "sigma_zeta") return r.sigma_zeta ? format_double(*r.sigma_zeta) : "";
  throw InputError("unknown grouping key '" + key + "' (nu, link, sigma_zeta)");
}

}  // namespace

std::vector<std::pair<Index, double>> trial_mean_curve(const ResultTable& table,
                                                       const RowPredicate& select) {
  std::vector<std::pair<Index, double>> out;
  for (const auto& [n, vals] : values_by_n(table, select)) {
    double s = 0.0;
    for (double v : vals) s += v;
    out.emplace_back(n, s / static_cast<double>(vals.size()));
  }
  return out;
}

std::vector<std::pair<Index, double>> trial_median_curve(const ResultTable& table,
                                                         const RowPredicate& select) {
  std::vector<std::pair<Index, double>> out;
  for (auto& [n, vals] : values_by_n(table, select)) {
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size();
    const double med = m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
    out.emplace_back(n, med);
  }
  return out;
}

std::vector<SlopeGroup> slope_report(const ResultTable& table,
                                     const std::vector<std::string>& group_by,
                                     const std::optional<std::string>& metric_filter) {
  struct Acc {
    SlopeGroup group;
    std::map<Index, std::pair<double, std::size_t>> sums;
  };
  std::vector<Acc> groups;
  std::map<std::vector<std::string>, std::size_t> lookup;
  for (const std::string& key : group_by) {
    if (key != "nu" && key != "link" && key != "sigma_zeta") {
      throw InputError("unknown grouping key '" + key + "' (nu, link, sigma_zeta)");
    }
  }
  for (const ResultRow& r : table.rows) {
    if (!r.trial || !std::isfinite(r.value)) continue;
    if (metric_filter && r.metric != *metric_filter) continue;
    std::vector<std::string> id{r.metric};
    for (const std::string& key : group_by) id.push_back(key_value(r, key));
    auto [it, inserted] = lookup.try_emplace(id, groups.size());
    if (inserted) {
      Acc acc;
      acc.group.metric = r.metric;
      for (std::size_t k = 0; k < group_by.size(); ++k) acc.group.keys.emplace_back(group_by[k], id[k + 1]);
      groups.push_back(std::move(acc));
    }
    auto& cell = groups[it->second].sums[r.n];
    cell.first += r.value;
    ++cell.second;
  }

  std::vector<SlopeGroup> out;
  if (groups.empty()) {
    SlopeGroup empty;
    empty.metric = metric_filter.value_or("");
    for (const std::string& key : group_by) empty.keys.emplace_back(key, "");
    out.push_back(std::move(empty));
    return out;
  }
  for (Acc& acc : groups) {
    std::vector<double> ns;
    std::vector<double> means;
    bool positive = true;
    for (const auto& [n, sum] : acc.sums) {
      ns.push_back(static_cast<double>(n));
      means.push_back(sum.first / static_cast<double>(sum.second));
      positive = positive && means.back() > 0.0;
    }
    acc.group.points = ns.size();
    if (ns.size() >= 3 && positive) acc.group.fit = loglog_slope(ns, means);
    out.push_back(std::move(acc.group));
  }
  return out;
}

void write_slope_csv(std::ostream& out, const std::vector<std::string>& group_by,
                     const std::vector<SlopeGroup>& groups) {
  out << "metric";
  for (const std::string& key : group_by) out << ',' << key;
  out << ",points,slope,intercept,r_squared\n";
  for (const SlopeGroup& g : groups) {
    out << g.metric;
    for (const auto& kv : g.keys) out << ',' << kv.second;
    out << ',' << g.points;
    if (g.fit) {
      out << ',' << format_double(g.fit->slope) << ',' << format_double(g.fit->intercept) << ','
          << format_double(g.fit->r_squared) << '\n';
    } else {
      out << ",NA,NA,NA\n";
    }
  }
}

}  // namespace dircov

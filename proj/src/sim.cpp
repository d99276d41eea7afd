// SPDX-License-Identifier: Apache-2.0
#include "dircov/sim.hpp"

#include "dircov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>

namespace dircov {

namespace {

constexpr Index kCalibrationDraws = 1'000'000;
constexpr RngStream kCalibrationStream{0xca11b8a7e5eedULL, 0};

}  // namespace

double LinkFn::operator()(double t) const {
  switch (kind) {
    case LinkKind::identity: return t;
    case LinkKind::logit: return 1.0 / (1.0 + std::exp(-t));
    case LinkKind::relu: return std::max(0.0, t);
    case LinkKind::tanh: return std::tanh(t);
    case LinkKind::shifted_abs: return std::abs(t - 0.5);
    case LinkKind::mixed: return t + t * t + std::cos(t);
  }
  return t;
}

std::string_view LinkFn::name() const {
  switch (kind) {
    case LinkKind::identity: return "identity";
    case LinkKind::logit: return "logit";
    case LinkKind::relu: return "relu";
    case LinkKind::tanh: return "tanh";
    case LinkKind::shifted_abs: return "shifted_abs";
    case LinkKind::mixed: return "mixed";
  }
  return "identity";
}

LinkFn LinkFn::parse(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '-', '_');
  for (LinkKind k : {LinkKind::identity, LinkKind::logit, LinkKind::relu, LinkKind::tanh,
                     LinkKind::shifted_abs, LinkKind::mixed}) {
    if (LinkFn{k}.name() == key) return LinkFn{k};
  }
  throw InputError("unknown link '" + std::string(name) +
                   "' (identity, logit, relu, tanh, shifted_abs, mixed)");
}

SimConfig SimConfig::standard(Index dim, LinkFn link, double sigma_zeta) {
  if (dim < 1) throw InputError("SimConfig: dim must be >= 1");
  if (!(sigma_zeta >= 0.0)) throw InputError("SimConfig: sigma_zeta must be >= 0");
  return SimConfig{Vector::Unit(dim, 0), link, sigma_zeta, make_sigma_identity(dim)};
}

Dataset generate_sim_data(const SimConfig& cfg, Index n, Rng& rng) {
  if (cfg.a.size() != cfg.sigma.dim) throw InputError("SimConfig: index vector has wrong size");
  if (std::abs(cfg.a.norm() - 1.0) > 1e-12) throw InputError("SimConfig: index vector must be unit");
  Dataset features = sample_gaussian(cfg.sigma, n, rng);
  const Vector t = features.x() * cfg.a;
  Vector y = t.unaryExpr([&](double v) { return cfg.link(v); });
  if (cfg.sigma_zeta > 0.0) {
    const double sigma_p = std::sqrt(cfg.a.dot(cfg.sigma.matrix.matrix() * cfg.a));
    const double scale = cfg.sigma_zeta * std::sqrt(calibrate_link_variance(cfg.link, sigma_p));
    for (Index i = 0; i < n; ++i) y(i) += scale * rng.normal();
  }
  return features.with_y(std::move(y));
}

double calibrate_link_variance(LinkFn link, double sigma_p) {
  if (!(sigma_p > 0.0)) throw InputError("calibrate_link_variance: sigma_p must be > 0");
  if (link.kind == LinkKind::identity) return sigma_p * sigma_p;

  static std::mutex mu;
  static std::map<std::pair<int, double>, double> cache;
  const std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(static_cast<int>(link.kind), sigma_p);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  Rng rng(kCalibrationStream);
  std::vector<double> vals(static_cast<std::size_t>(kCalibrationDraws));
  double sum = 0.0;
  for (double& v : vals) {
    v = link(sigma_p * rng.normal());
    sum += v;
  }
  const double mean = sum / static_cast<double>(vals.size());
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(vals.size());
  cache.emplace(key, var);
  return var;
}

Vector rescale_responses(const Vector& y) {
  if (y.size() == 0) throw InputError("rescale_responses: empty response vector");
  if (!y.allFinite()) throw InputError("rescale_responses: non-finite responses");
  const double lo = y.minCoeff();
  const double hi = y.maxCoeff();
  if (!(hi > lo)) throw DegenerateError("rescale_responses: responses are constant");
  const double denom = (hi - lo) * (1.0 + 0x1.0p-20);
  return (y.array() - lo) / denom;
}

LevelSetPartition partition_level_sets(const Vector& y, int num_sets) {
  if (num_sets < 1) throw InputError("partition_level_sets: J must be >= 1");
  LevelSetPartition part;
  part.num_sets = num_sets;
  part.region.resize(static_cast<std::size_t>(y.size()));
  part.counts.assign(static_cast<std::size_t>(num_sets), 0);
  for (Index i = 0; i < y.size(); ++i) {
    const double v = y(i);
    if (!(v >= 0.0 && v < 1.0)) throw InputError("partition_level_sets: responses must lie in [0,1)");
    int r = static_cast<int>(std::floor(static_cast<double>(num_sets) * v));
    r = std::min(r, num_sets - 1);
    part.region[static_cast<std::size_t>(i)] = r;
    ++part.counts[static_cast<std::size_t>(r)];
  }
  return part;
}

AclsModel acls_fit(const Dataset& data, int num_sets, double alpha, std::optional<double> rtol) {
  if (!(alpha > 0.0)) throw InputError("acls_fit: alpha must be > 0");
  const LevelSetPartition part = partition_level_sets(data.y(), num_sets);
  const Index d = data.dim();
  const double threshold = alpha / static_cast<double>(num_sets);

  std::vector<std::vector<Index>> members(static_cast<std::size_t>(num_sets));
  for (std::size_t i = 0; i < part.region.size(); ++i) {
    members[static_cast<std::size_t>(part.region[i])].push_back(static_cast<Index>(i));
  }

  AclsModel model;
  model.num_sets = num_sets;
  model.alpha = alpha;
  Matrix outer = Matrix::Zero(d, d);
  for (int r = 0; r < num_sets; ++r) {
    const Index count = part.counts[static_cast<std::size_t>(r)];
    const double rho = part.density(r);
    if (!(rho > threshold) || count < 2 * d) continue;
    LocalFit local{r + 1, count, rho, ols_fit(data.rows(members[static_cast<std::size_t>(r)]), rtol)};
    outer += rho * local.fit.coefficients * local.fit.coefficients.transpose();
    model.active.push_back(r + 1);
    model.fits.push_back(std::move(local));
  }
  if (model.active.empty()) {
    throw EmptyModelError("acls_fit: no level set passes the admission filters at J=" +
                          std::to_string(num_sets));
  }
  model.outer = SymMatrix(outer);
  const EigenDecomp& e = model.outer.eigen();
  model.lambda1 = e.eigenvalues(0);
  model.u1 = e.eigenvectors.col(0);
  return model;
}

std::vector<int> j_grid(int k_max, long long cap) {
  if (k_max < 0 || k_max > 80) throw InputError("j_grid: k_max must lie in [0, 80]");
  std::vector<int> grid;
  unsigned __int128 p3 = 1;
  unsigned __int128 p2 = 1;
  for (int k = 0; k <= k_max; ++k) {
    const unsigned __int128 j = (p3 + p2 - 1) / p2;
    if (j > static_cast<unsigned __int128>(std::max(cap, 1LL))) break;
    const int jv = static_cast<int>(j);
    if (grid.empty() || grid.back() != jv) grid.push_back(jv);
    p3 *= 3;
    p2 *= 2;
  }
  return grid;
}

int j_star_from_trace(const std::vector<std::pair<int, double>>& trace) {
  if (trace.empty()) throw InputError("j_star_from_trace: empty trace");
  int j_star = trace.front().first;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [j, lambda1] : trace) {
    const double score = static_cast<double>(j) * lambda1;
    if (score > best) {
      best = score;
      j_star = j;
    }
  }
  return j_star;
}

JSelection select_J(const Dataset& data, double alpha, int k_max, std::optional<double> rtol) {
  const long long cap = std::max<long long>(1, data.n() / (2 * data.dim()));
  JSelection out;
  std::vector<std::optional<AclsModel>> models;
  for (int j : j_grid(k_max, cap)) {
    std::optional<AclsModel> model;
    try {
      model = acls_fit(data, j, alpha, rtol);
    } catch (const EmptyModelError&) {
    }
    out.trace.emplace_back(j, model ? model->lambda1 : 0.0);
    models.push_back(std::move(model));
  }
  out.j_star = j_star_from_trace(out.trace);
  for (std::size_t k = 0; k < out.trace.size(); ++k) {
    if (out.trace[k].first == out.j_star) out.model = std::move(models[k]);
  }
  return out;
}

double aligned_error(const Vector& u, const Vector& a) {
  if (u.size() != a.size()) throw InputError("aligned_error: dimension mismatch");
  if (std::abs(u.norm() - 1.0) > 1e-9 || std::abs(a.norm() - 1.0) > 1e-9) {
    throw InputError("aligned_error: inputs must be unit vectors");
  }
  return std::min((u - a).norm(), (u + a).norm());
}

}  // namespace dircov

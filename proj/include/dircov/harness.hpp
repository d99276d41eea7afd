// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dircov/sim.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dircov {

inline constexpr std::string_view kToolVersion = "dircov 0.1.0";

enum class ExperimentKind { cov_rates, prec_rates, sim_ols, sim_acls, eigengap_example, r_concentration };

std::string_view to_string(ExperimentKind kind);
/// Accepts both "prec_rates" and "prec-rates" spellings.
ExperimentKind parse_experiment(std::string_view name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::prec_rates;
  int setting = 1;
  Index dim = 10;
  /// nu for precision/covariance campaigns, eta for the eigengap example.
  std::vector<double> nu_list;
  std::vector<Index> n_list;
  int trials = 100;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::vector<double> sigma_zeta_list;
  LinkFn link;
  int k_max = 40;
  std::optional<double> rtol;
  /// Rank of the random test projector A (B = I - A).
  Index proj_rank = 3;
  /// Worker threads; output does not depend on it.
  int threads = 1;

  static ExperimentConfig defaults(ExperimentKind kind);
  /// Default nu grid of a covariance setting.
  static std::vector<double> default_nu(ExperimentKind kind, int setting);

  /// Throws InputError on out-of-range parameters.
  void validate() const;

  /// Key/value echo of every parameter that affects the output.
  std::vector<std::pair<std::string, std::string>> provenance() const;
};

/// `n_points` values log-spaced over [lo, hi], rounded to integers.
std::vector<Index> log_grid(Index lo, Index hi, int n_points);

struct ResultRow {
  std::string experiment;
  std::string setting;
  std::optional<double> nu;
  std::string link;
  std::optional<double> sigma_zeta;
  Index dim = 0;
  Index n = 0;
  std::optional<int> j;
  /// Absent on per-cell NA counter rows.
  std::optional<int> trial;
  std::string metric;
  /// NaN is written as NA.
  double value = 0.0;
};

struct ResultTable {
  std::vector<std::pair<std::string, std::string>> provenance;
  std::vector<ResultRow> rows;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Stream index for one trial: experiment ordinal in the top byte, cell
/// ordinal in the next 32 bits, trial index in the low 24 bits.
std::uint64_t trial_stream_index(ExperimentKind kind, std::uint64_t cell, std::uint64_t trial);

ResultTable run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});
/// Runs one parameter cell (param_index into nu_list, or into
/// sigma_zeta_list for the sim and r_concentration experiments) with exactly
/// the streams it uses inside the full campaign.
ResultTable run_single_cell(const ExperimentConfig& cfg, std::size_t param_index, std::size_t n_index);
ResultTable run_precision_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});
ResultTable run_covariance_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});
ResultTable run_sim_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});
ResultTable run_eigengap_example(const ExperimentConfig& cfg, const ProgressFn& progress = {});
ResultTable run_r_concentration(const ExperimentConfig& cfg, const ProgressFn& progress = {});

inline constexpr std::string_view kResultHeader =
    "experiment,setting,nu,link,sigma_zeta,D,N,J,trial,metric,value";

void write_results_csv(std::ostream& out, const ResultTable& table);
/// Throws InputError when the header does not match kResultHeader.
ResultTable read_results_csv(std::istream& in);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of ln(error) on ln(N).
SlopeFit loglog_slope(std::span<const double> ns, std::span<const double> errors);

/// Row filter used by the aggregation helpers.
using RowPredicate = std::function<bool(const ResultRow&)>;

/// (N, statistic of the per-trial values) in ascending N. NA values and
/// counter rows are skipped.
std::vector<std::pair<Index, double>> trial_mean_curve(const ResultTable& table,
                                                       const RowPredicate& select);
std::vector<std::pair<Index, double>> trial_median_curve(const ResultTable& table,
                                                         const RowPredicate& select);

struct SlopeGroup {
  std::string metric;
  std::vector<std::pair<std::string, std::string>> keys;
  std::size_t points = 0;
  std::optional<SlopeFit> fit;
};

/// One log-log fit of trial-mean error against N per (metric, group_by...)
/// group. Allowed keys: nu, link, sigma_zeta. An empty selection yields a
/// single group with no fit.
std::vector<SlopeGroup> slope_report(const ResultTable& table,
                                     const std::vector<std::string>& group_by,
                                     const std::optional<std::string>& metric_filter);

void write_slope_csv(std::ostream& out, const std::vector<std::string>& group_by,
                     const std::vector<SlopeGroup>& groups);

}  // namespace dircov

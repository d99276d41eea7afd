// SPDX-License-Identifier: Apache-2.0
#include "dircov/cli.hpp"

#include "dircov/errors.hpp"
#include "dircov/format.hpp"
#include "dircov/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace dircov {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
std::string join_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[k]);
    } else {
      s += std::to_string(v[k]);
    }
  }
  return s;
}

std::vector<std::string> list_items(std::string_view value) {
  value = trim(value);
  if (value.size() >= 2 && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
  std::vector<std::string> items;
  for (const std::string& item : split(value, ',')) items.emplace_back(trim(item));
  if (items.empty() || (items.size() == 1 && items[0].empty())) throw InputError("empty list");
  return items;
}

std::vector<double> parse_double_list(std::string_view value) {
  std::vector<double> out;
  for (const std::string& item : list_items(value)) out.push_back(parse_double(item));
  return out;
}

std::vector<Index> parse_index_list(std::string_view value) {
  std::vector<Index> out;
  for (const std::string& item : list_items(value)) out.push_back(static_cast<Index>(parse_int(item)));
  return out;
}

int parse_small_int(std::string_view value) {
  const long long v = parse_int(value);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw InputError("integer out of range: " + std::string(value));
  }
  return static_cast<int>(v);
}

int default_threads() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Experiment options that a subcommand accepts, in help order.
std::vector<std::string> experiment_keys(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::cov_rates:
    case ExperimentKind::prec_rates:
      return {"setting", "nu", "n", "trials", "seed", "dim", "rtol", "threads", "out"};
    case ExperimentKind::sim_ols:
      return {"n", "trials", "seed", "dim", "link", "noise", "rtol", "threads", "out"};
    case ExperimentKind::sim_acls:
      return {"n", "trials", "seed", "dim", "link", "noise", "alpha", "kmax", "rtol", "threads", "out"};
    case ExperimentKind::eigengap_example:
      return {"nu", "n", "trials", "seed", "dim", "threads", "out"};
    case ExperimentKind::r_concentration:
      return {"n", "trials", "seed", "dim", "link", "noise", "threads", "out"};
  }
  return {};
}

struct Settings {
  ExperimentConfig cfg;
  std::optional<std::string> out;
  bool nu_given = false;
};

void apply_setting(Settings& s, const std::string& key, const std::string& raw) {
  const std::string value(trim(raw));
  ExperimentConfig& c = s.cfg;
  try {
    if (key == "setting") {
      c.setting = parse_small_int(value);
    } else if (key == "nu") {
      c.nu_list = parse_double_list(value);
      s.nu_given = true;
    } else if (key == "n") {
      c.n_list = parse_index_list(value);
    } else if (key == "trials") {
      c.trials = parse_small_int(value);
    } else if (key == "seed") {
      c.seed = parse_u64(value);
    } else if (key == "dim") {
      c.dim = static_cast<Index>(parse_int(value));
    } else if (key == "link") {
      c.link = LinkFn::parse(value);
    } else if (key == "noise") {
      c.sigma_zeta_list = parse_double_list(value);
    } else if (key == "alpha") {
      c.alpha = parse_double(value);
    } else if (key == "kmax") {
      c.k_max = parse_small_int(value);
    } else if (key == "rtol") {
      if (value == "auto") {
        c.rtol.reset();
      } else {
        c.rtol = parse_double(value);
      }
    } else if (key == "threads") {
      c.threads = parse_small_int(value);
    } else if (key == "out") {
      s.out = value;
    } else {
      throw UsageError("unknown setting '" + key + "'");
    }
  } catch (const InputError& e) {
    throw UsageError("--" + key + ": " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(trim(body.substr(0, eq)));
    std::replace(key.begin(), key.end(), '-', '_');
    std::string value(trim(body.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

std::string flag_type(const std::string& key) {
  if (key == "nu" || key == "noise") return "REAL_LIST";
  if (key == "n") return "INT_LIST";
  if (key == "alpha" || key == "rtol") return "REAL";
  if (key == "link") return "NAME";
  if (key == "out") return "PATH";
  if (key == "seed") return "U64";
  return "INT";
}

std::string flag_default(const ExperimentConfig& d, const std::string& key) {
  if (key == "setting") return std::to_string(d.setting);
  if (key == "nu") return join_list(d.nu_list);
  if (key == "n") return join_list(d.n_list);
  if (key == "trials") return std::to_string(d.trials);
  if (key == "seed") return std::to_string(d.seed);
  if (key == "dim") return std::to_string(d.dim);
  if (key == "link") return std::string(d.link.name());
  if (key == "noise") return join_list(d.sigma_zeta_list);
  if (key == "alpha") return format_double(d.alpha);
  if (key == "kmax") return std::to_string(d.k_max);
  if (key == "rtol") return "auto";
  if (key == "threads") return "cores";
  if (key == "out") return "stdout";
  return "";
}

std::string flag_help(ExperimentKind kind, const std::string& key) {
  if (key == "setting") return "covariance model: 1 (random eigenbasis) or 2 (nu^|i-j|)";
  if (key == "nu") {
    if (kind == ExperimentKind::eigengap_example) return "eta values: Sigma = diag(1, ..., 1, eta^2)";
    return "nu grid; setting 2 default is 0.5,0.55,...,0.95";
  }
  if (key == "n") return "sample sizes, strictly increasing";
  if (key == "trials") return "Monte-Carlo trials per cell";
  if (key == "seed") return "master seed (fallback: DIRCOV_SEED)";
  if (key == "dim") return "ambient dimension D";
  if (key == "link") return "link: identity, logit, relu, tanh, shifted_abs, mixed";
  if (key == "noise") return "noise levels sigma_zeta";
  if (key == "alpha") return "level-set density threshold";
  if (key == "kmax") return "largest k in the J grid ceil(1.5^k)";
  if (key == "rtol") return "relative eigenvalue cutoff for ranks and pseudo-inverses";
  if (key == "threads") return "worker threads";
  if (key == "out") return "output CSV path";
  return "";
}

std::string_view subcommand_help(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::cov_rates: return "directional covariance error rates";
    case ExperimentKind::prec_rates: return "directional precision error rates";
    case ExperimentKind::sim_ols: return "single-index model, OLS direction error";
    case ExperimentKind::sim_acls: return "single-index model, OLS and ACLS direction errors";
    case ExperimentKind::eigengap_example: return "null-space projector overlap for a near-singular Sigma";
    case ExperimentKind::r_concentration: return "cross-covariance concentration";
  }
  return "";
}

struct ExperimentCommand {
  ExperimentKind kind;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  CLI::Option* config = nullptr;
};

void add_experiment_command(CLI::App& root, ExperimentCommand& cmd) {
  std::string name(to_string(cmd.kind));
  std::replace(name.begin(), name.end(), '_', '-');
  cmd.app = root.add_subcommand(name, std::string(subcommand_help(cmd.kind)));
  const ExperimentConfig d = ExperimentConfig::defaults(cmd.kind);
  for (const std::string& key : experiment_keys(cmd.kind)) {
    cmd.options[key] = cmd.app->add_option("--" + key, cmd.values[key], flag_help(cmd.kind, key))
                           ->type_name(flag_type(key))
                           ->default_str(flag_default(d, key));
  }
  cmd.config = cmd.app->add_option("--config", cmd.config_path, "key=value config file; flags take precedence")
                    ->type_name("PATH");
}

Settings resolve_settings(const ExperimentCommand& cmd) {
  Settings s;
  s.cfg = ExperimentConfig::defaults(cmd.kind);
  s.cfg.threads = default_threads();
  const auto keys = experiment_keys(cmd.kind);
  if (const char* env = std::getenv("DIRCOV_SEED"); env && *env) {
    try {
      s.cfg.seed = parse_u64(env);
    } catch (const InputError& e) {
      throw UsageError(std::string("DIRCOV_SEED: ") + e.what());
    }
  }
  if (cmd.config->count() > 0) {
    for (const auto& [key, value] : read_config_file(cmd.config_path)) {
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw UsageError("config key '" + key + "' is not accepted by " + cmd.app->get_name());
      }
      apply_setting(s, key, value);
    }
  }
  for (const std::string& key : keys) {
    if (cmd.options.at(key)->count() > 0) apply_setting(s, key, cmd.values.at(key));
  }
  if (!s.nu_given) s.cfg.nu_list = ExperimentConfig::default_nu(cmd.kind, s.cfg.setting);
  try {
    s.cfg.validate();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  return s;
}

// Writes through `out` or into the file named by `path`.
template <class Fn>
void emit(const std::optional<std::string>& path, std::ostream& out, Fn&& write) {
  if (!path || *path == "-") {
    write(out);
    out.flush();
    return;
  }
  std::ofstream file(*path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + *path + "' for writing");
  write(file);
  file.flush();
  if (!file) throw std::runtime_error("failed writing '" + *path + "'");
}

void run_estimate(const std::string& in_path, double alpha, int k_max, std::optional<double> rtol,
                  std::ostream& out) {
  const Dataset data = read_dataset_csv(in_path);
  const Index d = data.dim();
  out << "quantity,index,value\n";
  out << "n,," << data.n() << '\n';
  const Vector mean = sample_mean(data);
  for (Index i = 0; i < d; ++i) out << "mean," << i + 1 << ',' << format_double(mean(i)) << '\n';
  const SymMatrix cov = sample_covariance(data);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      out << "covariance," << i + 1 << ':' << j + 1 << ',' << format_double(cov(i, j)) << '\n';
    }
  }
  const SymMatrix prec = pinv_psd(cov, rtol);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      out << "precision," << i + 1 << ':' << j + 1 << ',' << format_double(prec(i, j)) << '\n';
    }
  }
  out << "rank,," << numerical_rank(cov, rtol) << '\n';
  if (!data.has_y()) return;

  const OlsFit ols = ols_fit(data, rtol);
  out << "ols_intercept,," << format_double(ols.intercept) << '\n';
  for (Index i = 0; i < d; ++i) out << "ols_coef," << i + 1 << ',' << format_double(ols.coefficients(i)) << '\n';
  if (ols.direction) {
    for (Index i = 0; i < d; ++i) out << "ols_direction," << i + 1 << ',' << format_double((*ols.direction)(i)) << '\n';
  }
  const Dataset scaled = data.with_y(rescale_responses(data.y()));
  const JSelection sel = select_J(scaled, alpha, k_max, rtol);
  out << "acls_J_star,," << sel.j_star << '\n';
  if (sel.model) {
    out << "acls_lambda1,," << format_double(sel.model->lambda1) << '\n';
    for (Index i = 0; i < d; ++i) out << "acls_u1," << i + 1 << ',' << format_double(sel.model->u1(i)) << '\n';
  } else {
    out << "acls_lambda1,,NA\n";
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Directional covariance and precision diagnostics with single-index model estimators", "dircov"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::vector<ExperimentCommand> experiments;
  for (ExperimentKind k : {ExperimentKind::prec_rates, ExperimentKind::cov_rates, ExperimentKind::sim_ols,
                           ExperimentKind::sim_acls, ExperimentKind::eigengap_example,
                           ExperimentKind::r_concentration}) {
    experiments.emplace_back().kind = k;
  }
  for (auto& cmd : experiments) add_experiment_command(app, cmd);

  std::string slope_in = "-";
  std::string slope_group;
  std::string slope_metric;
  std::string slope_out;
  CLI::App* slope = app.add_subcommand("slope", "log-log fit of trial-mean error against N");
  slope->add_option("--in", slope_in, "results CSV, - for stdin")->type_name("PATH")->default_str("-");
  auto* group_opt = slope->add_option("--group-by", slope_group, "comma list of nu, link, sigma_zeta")
                        ->type_name("KEY_LIST")
                        ->default_str("none");
  auto* metric_opt = slope->add_option("--metric", slope_metric, "only this metric")
      ->type_name("NAME")
      ->default_str("all");
  auto* slope_out_opt = slope->add_option("--out", slope_out, "output CSV path")
      ->type_name("PATH")
      ->default_str("stdout");

  std::string est_in;
  std::string est_alpha = "0.05";
  std::string est_kmax = "40";
  std::string est_rtol = "auto";
  std::string est_out;
  CLI::App* estimate = app.add_subcommand("estimate", "estimators on a dataset CSV (x1..xD[,y])");
  estimate->add_option("--in", est_in, "dataset CSV")->type_name("PATH")->required();
  estimate->add_option("--alpha", est_alpha, "level-set density threshold")
      ->type_name("REAL")
      ->default_str("0.05");
  estimate->add_option("--kmax", est_kmax, "largest k in the J grid ceil(1.5^k)")
      ->type_name("INT")
      ->default_str("40");
  estimate->add_option("--rtol", est_rtol, "relative eigenvalue cutoff")
      ->type_name("REAL")
      ->default_str("auto");
  auto* est_out_opt = estimate->add_option("--out", est_out, "output CSV path")
      ->type_name("PATH")
      ->default_str("stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "dircov: " << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  }

  try {
    for (auto& cmd : experiments) {
      if (!cmd.app->parsed()) continue;
      Settings s;
      try {
        s = resolve_settings(cmd);
      } catch (const UsageError& e) {
        err << "dircov: " << e.what() << '\n';
        return kExitUsage;
      }
      const ResultTable table = run_experiment(s.cfg, [&err](const std::string& line) { err << line << '\n'; });
      emit(s.out, out, [&](std::ostream& os) { write_results_csv(os, table); });
      return kExitOk;
    }

    if (slope->parsed()) {
      std::vector<std::string> keys;
      if (group_opt->count() > 0) {
        for (const std::string& k : split(slope_group, ',')) {
          const std::string key(trim(k));
          if (key != "nu" && key != "link" && key != "sigma_zeta") {
            err << "dircov: --group-by: unknown key '" << key << "' (nu, link, sigma_zeta)\n";
            return kExitUsage;
          }
          keys.push_back(key);
        }
      }
      ResultTable table;
      if (slope_in == "-") {
        table = read_results_csv(std::cin);
      } else {
        std::ifstream in(slope_in);
        if (!in) throw std::runtime_error("cannot read '" + slope_in + "'");
        table = read_results_csv(in);
      }
      const std::optional<std::string> metric =
          metric_opt->count() > 0 ? std::optional<std::string>(slope_metric) : std::nullopt;
      const auto groups = slope_report(table, keys, metric);
      const std::optional<std::string> path =
          slope_out_opt->count() > 0 ? std::optional<std::string>(slope_out) : std::nullopt;
      emit(path, out, [&](std::ostream& os) { write_slope_csv(os, keys, groups); });
      return kExitOk;
    }

    if (estimate->parsed()) {
      double alpha = 0.0;
      int k_max = 0;
      std::optional<double> rtol;
      try {
        alpha = parse_double(est_alpha);
        k_max = parse_small_int(est_kmax);
        if (est_rtol != "auto") rtol = parse_double(est_rtol);
      } catch (const InputError& e) {
        err << "dircov: " << e.what() << '\n';
        return kExitUsage;
      }
      if (!(alpha > 0.0) || k_max < 0 || k_max > 80 || (rtol && !(*rtol >= 0.0))) {
        err << "dircov: alpha must be > 0, kmax in [0, 80], rtol >= 0\n";
        return kExitUsage;
      }
      const std::optional<std::string> path =
          est_out_opt->count() > 0 ? std::optional<std::string>(est_out) : std::nullopt;
      std::ostringstream buffer;
      run_estimate(est_in, alpha, k_max, rtol, buffer);
      emit(path, out, [&](std::ostream& os) { os << buffer.str(); });
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "dircov: error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace dircov

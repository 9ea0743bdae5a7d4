#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "expnet/estimator.hpp"
#include "expnet/rng.hpp"
#include "expnet/sampler.hpp"

namespace expnet {

/// Invalid experiment configuration; the message names the offending line
/// when it can be located in the source text.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Study { normality, consistency, overfit, custom };

std::string_view to_string(Study s);
Study parse_study(std::string_view name);  // throws ConfigError

enum class InitMode { truth, perturbed, zero };

/// Grid for discretized fitting: fixed spacing, or the optimal-rate spacing
/// c n^(-1/6) mu^(-1/6) (ln n)^(4/3) when `spacing` is empty.
struct GridSpec {
  double bound = 1.0;
  std::optional<double> spacing;
  double c = 1.0;
};

struct ExperimentConfig {
  Study study = Study::custom;
  std::vector<ParamKind> groups{ParamKind::group1};
  double bound = 1.0;
  std::optional<double> rho;  // override of the group's rho
  std::optional<double> mu;   // override of the group's mu
  std::vector<std::size_t> n_list{100};
  int replications = 1;
  FitConfig fit = FitConfig::newton_defaults();
  bool plugin_mu = false;     // otherwise the generating mu is treated as known
  std::vector<double> e_list;  // outer tolerances; empty means {fit.outer_tol}
  InitMode init = InitMode::truth;
  double perturbation = 0.5;
  Seed master_seed{1};
  std::string output_dir = ".";
  std::optional<GridSpec> grid;

  /// Protocol defaults:
  ///  normality    groups 1-3, n {100, 200, 400}, 200 reps, Newton config
  ///  consistency  sparse_uniform, n {400, 1400, 5000}, 30 reps, gradient e = 0.05
  ///  overfit      sparse_uniform, n {1000, 2000}, 30 reps, e {0.08, 0.02},
  ///               init = truth + U[-0.5, 0.5]
  static ExperimentConfig defaults(Study study);

  std::vector<double> tolerances() const;
};

/// Parses a JSON config on top of the defaults of its study (or of
/// `study_override`). Throws ConfigError with a line number.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         std::optional<Study> study_override = std::nullopt);
nlohmann::json to_json(const ExperimentConfig& c);

struct ResultRow {
  std::string study;
  std::string group;
  std::size_t n = 0;
  double e = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  int outer_iters = 0;
  double rho_hat = 0.0;
  double rho_err_sq = 0.0;
  double delta_alpha = 0.0;
  double delta_beta = 0.0;
  double mse_bound = 0.0;
  double uniform_bound = 0.0;
  double adj_mse = 0.0;
  double adj_uniform = 0.0;
  std::optional<FitStatistics> stats;
};

inline constexpr std::string_view kCsvHeader =
    "study,group,n,e,rep,seed,converged,outer_iters,rho_hat,rho_err_sq,delta_alpha,delta_beta,"
    "mse_bound,uniform_bound,adj_mse,adj_uniform,stat_a2,stat_amid,stat_an,stat_b1,stat_bmid,"
    "stat_bn,stat_rho";

/// Non-finite values are written as empty fields and read back as NaN.
void write_rows_csv(std::ostream& os, std::span<const ResultRow> rows);
std::vector<ResultRow> read_rows_csv(std::istream& is);  // throws FormatError

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

/// Pearson correlation of the sorted sample with standard normal quantiles
/// at plotting positions (k - 0.5) / m.
double qq_correlation(std::vector<double> sample);

struct QqPoint {
  std::string group;
  std::size_t n = 0;
  double e = 0.0;
  std::string statistic;
  std::size_t k = 0;
  double normal_quantile = 0.0;
  double empirical_quantile = 0.0;
};

std::vector<QqPoint> qq_points(std::span<const ResultRow> rows);
void write_qq_csv(std::ostream& os, std::span<const QqPoint> points);

/// Per (group, n, e) cell: median / mean / IQR of every error column,
/// Q-Q correlations when statistics are present, rate overlays ("shape
/// only"), and paired differences across tolerances for the same
/// replication. `mu_override` replaces the group default when computing
/// rate overlays.
nlohmann::json summarize(std::span<const ResultRow> rows,
                         std::optional<double> mu_override = std::nullopt);

struct ExperimentOutput {
  std::vector<ResultRow> rows;
  nlohmann::json summary;
};

/// Runs every (group, n, replication) task on up to `jobs` threads. Results
/// depend only on the config: parameters are drawn once per (n) cell from
/// the master seed and the network of replication r uses the seed derived
/// from (master_seed, n, r).
ExperimentOutput run_experiment(const ExperimentConfig& config, int jobs = 1);

/// Writes <dir>/<study>_rows.csv, _summary.json, _config.json and, when
/// statistics are present, _qq.csv. Throws IoError.
void write_experiment_outputs(const ExperimentConfig& config, const ExperimentOutput& out);

}  // namespace expnet

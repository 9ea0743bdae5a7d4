// Command-line front end: sample, fit, experiment, rates.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "expnet/discretize.hpp"
#include "expnet/estimator.hpp"
#include "expnet/harness.hpp"
#include "expnet/io.hpp"
#include "expnet/metrics.hpp"
#include "expnet/sampler.hpp"

namespace fs = std::filesystem;
using namespace expnet;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kIoError = 2;

ExperimentConfig load_config(const std::string& path, std::optional<Study> study) {
  if (path.empty()) return ExperimentConfig::defaults(study.value_or(Study::custom));
  const std::string text = read_text_file(path);
  try {
    return parse_experiment_config(text, study);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "'");
}

struct SampleArgs {
  std::string config;
  std::string kind;
  std::size_t n = 0;
  std::optional<double> bound, rho, mu;
  std::uint64_t seed = 1;
  std::string out = ".";
};

int run_sample(const SampleArgs& a) {
  const ExperimentConfig c = load_config(a.config, Study::custom);
  ParamSpec spec;
  spec.kind = a.kind.empty() ? c.groups.front() : parse_param_kind(a.kind);
  spec.n = a.n ? a.n : c.n_list.front();
  spec.bound = a.bound.value_or(c.bound);
  spec.rho = a.rho ? a.rho : c.rho;
  spec.mu = a.mu ? a.mu : c.mu;
  if (spec.kind == ParamKind::explicit_values) throw ConfigError("sample needs a generated kind");

  const Seed master{a.seed};
  auto [params, globals] = gen_params(spec, rng::derive(master, {rng::kParamSeed, spec.n}));
  const Network net = sample_network(params, globals, rng::derive(master, {rng::kNetworkSeed, spec.n, 0}));

  ensure_dir(a.out);
  const fs::path dir(a.out);
  save_network((dir / "network.txt").string(), net);
  write_text_file((dir / "truth.json").string(), to_json(Truth{params, globals}).dump(2) + "\n");
  std::cout << "n " << net.size() << " edges " << net.edge_count() << '\n';
  return kOk;
}

struct FitArgs {
  std::string network;
  std::string truth;
  std::string config;
  std::string init = "zero";
  bool discretize = false;
  std::string out = ".";
};

int run_fit(const FitArgs& a) {
  const ExperimentConfig c = load_config(a.config, Study::custom);
  const Network net = load_network(a.network);
  std::optional<Truth> truth;
  if (!a.truth.empty()) {
    try {
      truth = truth_from_json(read_json_file(a.truth));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(a.truth + ": " + e.what());
    }
    if (truth->params.size() != net.size()) throw IoError("truth size does not match network");
  }

  NodeParams init = NodeParams::zeros(net.size());
  double init_rho = 0.0;
  if (a.init == "truth") {
    if (!truth) throw ConfigError("--init truth needs --truth");
    init = truth->params;
    init_rho = truth->globals.rho;
  } else if (a.init != "zero") {
    throw ConfigError("--init must be 'zero' or 'truth'");
  }

  FitConfig fc = c.fit;
  const double known_mu = c.mu ? *c.mu : truth ? truth->globals.mu : 1.0;
  fc.mu_mode = c.plugin_mu ? MuMode::plugin() : MuMode::known(known_mu);

  FitResult fit;
  std::optional<GridSpec> gs = c.grid;
  if (a.discretize && !gs) gs = GridSpec{};
  if (gs) {
    const double mu = c.plugin_mu ? estimate_mu_bar(net).value : known_mu;
    const double h = gs->spacing ? *gs->spacing : optimal_spacing(net.size(), mu, gs->c, gs->bound);
    const Grid grid = Grid::uniform(gs->bound, h);
    fit = discretized_fit(net, project_to_grid(init, grid), init_rho, grid, fc);
  } else {
    fit = coordinate_descent_fit(net, init, init_rho, fc);
  }

  ensure_dir(a.out);
  const fs::path dir(a.out);
  write_text_file((dir / "fit.json").string(), to_json(fit).dump(2) + "\n");
  if (truth) {
    const ErrorReport er = error_report(fit.params, fit.rho, truth->params, truth->globals.rho);
    const std::string text = to_json(er).dump(2) + "\n";
    write_text_file((dir / "errors.json").string(), text);
    write_text_file((dir / "errors.csv").string(),
                    "delta_alpha,delta_beta,mse_bound,uniform_bound,shift_adjusted_mse,"
                    "shift_adjusted_uniform,rho_error_sq\n" +
                        format_double(er.delta_alpha) + ',' + format_double(er.delta_beta) + ',' +
                        format_double(er.mse_bound) + ',' + format_double(er.uniform_bound) + ',' +
                        format_double(er.shift_adjusted_mse) + ',' +
                        format_double(er.shift_adjusted_uniform) + ',' +
                        format_double(er.rho_error_sq) + '\n');
    std::cout << text;
  } else {
    std::cout << "rho " << format_double(fit.rho) << " outer_iters " << fit.outer_iters
              << " converged " << (fit.converged ? "true" : "false") << '\n';
  }
  return kOk;
}

struct ExperimentArgs {
  std::string study;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int jobs = 1;
  bool discretize = false;
  std::optional<int> replications;
  std::vector<std::size_t> n_list;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  ExperimentConfig c = load_config(a.config, parse_study(a.study));
  if (a.seed) c.master_seed = Seed{*a.seed};
  if (a.out) c.output_dir = *a.out;
  if (a.replications) {
    if (*a.replications < 1) throw ConfigError("--replications must be >= 1");
    c.replications = *a.replications;
  }
  if (!a.n_list.empty()) c.n_list = a.n_list;
  if (a.discretize && !c.grid) c.grid = GridSpec{};
  if (a.jobs < 1) throw ConfigError("--jobs must be >= 1");

  const ExperimentOutput out = run_experiment(c, a.jobs);
  write_experiment_outputs(c, out);
  std::cout << "wrote " << out.rows.size() << " rows to " << c.output_dir << '\n';
  return kOk;
}

struct RatesArgs {
  std::string kind;
  std::vector<double> n{100, 1000, 10000};
  double mu = 1.0;
};

int run_rates(const RatesArgs& a) {
  if (!a.kind.empty()) {
    const RateKind k = parse_rate_kind(a.kind);
    for (double n : a.n) std::cout << format_double(rate_predictor(k, n, a.mu)) << '\n';
    return kOk;
  }
  std::cout << "n,mu,weak_l2,uniform_cont,uniform_disc,expnet_uniform\n";
  for (double n : a.n) {
    std::cout << format_double(n) << ',' << format_double(a.mu);
    for (RateKind k : {RateKind::weak_l2, RateKind::uniform_cont, RateKind::uniform_disc,
                       RateKind::expnet_uniform}) {
      std::cout << ',' << format_double(rate_predictor(k, n, a.mu));
    }
    std::cout << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed exponential network model: sampling, fitting and experiments"};
  app.require_subcommand(1);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Sample a network and its ground truth");
  sample->add_option("--config", sa.config, "JSON config (param_spec or groups/n_list/B/rho/mu)");
  sample->add_option("--kind", sa.kind, "group1 | group2 | group3 | sparse_uniform");
  sample->add_option("--n", sa.n, "Number of nodes");
  sample->add_option("--B", sa.bound, "Parameter bound");
  sample->add_option("--rho", sa.rho, "Reciprocity override");
  sample->add_option("--mu", sa.mu, "Sparsity override in (0, 1]");
  sample->add_option("--seed", sa.seed, "Master seed");
  sample->add_option("--out", sa.out, "Output directory");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a network edge list");
  fit->add_option("--network", fa.network, "Edge-list file")->required();
  fit->add_option("--truth", fa.truth, "Ground-truth JSON; enables the error report");
  fit->add_option("--config", fa.config, "JSON config (fit, mu, grid)");
  fit->add_option("--init", fa.init, "zero | truth");
  fit->add_flag("--discretize", fa.discretize, "Grid fitting (optimal spacing unless a grid is configured)");
  fit->add_option("--out", fa.out, "Output directory");

  ExperimentArgs ea;
  auto* exp = app.add_subcommand("experiment", "Run a simulation study");
  exp->add_option("study", ea.study, "normality | consistency | overfit | custom")->required();
  exp->add_option("--config", ea.config, "JSON config");
  exp->add_option("--seed", ea.seed, "Master seed");
  exp->add_option("--out", ea.out, "Output directory");
  exp->add_option("--jobs", ea.jobs, "Concurrent replications");
  exp->add_flag("--discretize", ea.discretize, "Grid fitting (optimal spacing unless a grid is configured)");
  exp->add_option("--replications", ea.replications, "Override the replication count");
  exp->add_option("--n", ea.n_list, "Override the list of network sizes");

  RatesArgs ra;
  auto* rates = app.add_subcommand("rates", "Tabulate rate predictors");
  rates->add_option("--kind", ra.kind, "weak_l2 | uniform_cont | uniform_disc | expnet_uniform");
  rates->add_option("--n", ra.n, "Network sizes (>= 2)");
  rates->add_option("--mu", ra.mu, "Sparsity level in (0, 1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*sample) return run_sample(sa);
    if (*fit) return run_fit(fa);
    if (*exp) return run_experiment_cmd(ea);
    if (*rates) return run_rates(ra);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

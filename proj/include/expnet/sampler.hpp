#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "expnet/network.hpp"
#include "expnet/rng.hpp"
#include "expnet/types.hpp"

namespace expnet {

/// Parameter-generation laws used by the simulation studies.
///
///  group1          alpha_i (i > 1), beta_i ~ U[-B, B], rho = 0.6, mu = 1
///  group2          alpha_i (i > 1), beta_i ~ N(0, 1),  rho = 0.3, mu = 1
///  group3          alpha_i in {0.3, 0.7}, beta_i in {0.4, 0.6}, rho = -0.7
///  sparse_uniform  as group1 with rho = 0.3 and mu = min(1, 10 n^(-2/3))
///  explicit        caller-supplied vectors; gen_params rejects it
///
/// alpha_1 is always 0.
enum class ParamKind { group1, group2, group3, sparse_uniform, explicit_values };

std::string_view to_string(ParamKind kind);
ParamKind parse_param_kind(std::string_view name);  // throws std::invalid_argument

struct ParamSpec {
  ParamKind kind = ParamKind::group1;
  std::size_t n = 100;
  double bound = 1.0;
  std::optional<double> rho;  // overrides the kind's rho when set
  std::optional<double> mu;   // known mu override; nullopt = kind default

  double default_rho() const;
  double default_mu() const;
};

/// mu = min(1, 10 n^(-2/3)).
double sparse_mu(std::size_t n);

std::pair<NodeParams, GlobalParams> gen_params(const ParamSpec& spec, Seed seed);

/// Inverse-CDF draw of one dyad; u in [0, 1).
DyadOutcome draw_dyad(const DyadPmf& pmf, double u);

/// Each unordered pair is drawn from its own keyed substream, so the result
/// depends only on (params, globals, seed).
Network sample_network(const NodeParams& params, const GlobalParams& globals, Seed seed);

/// alpha_i += U[-m, m], beta_i += U[-m, m], independently.
NodeParams perturb_params(const NodeParams& params, double magnitude, Seed seed);

}  // namespace expnet

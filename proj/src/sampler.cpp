#include "expnet/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "expnet/model.hpp"

namespace expnet {

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::group1: return "group1";
    case ParamKind::group2: return "group2";
    case ParamKind::group3: return "group3";
    case ParamKind::sparse_uniform: return "sparse_uniform";
    case ParamKind::explicit_values: return "explicit";
  }
  return "unknown";
}

ParamKind parse_param_kind(std::string_view name) {
  for (ParamKind k : {ParamKind::group1, ParamKind::group2, ParamKind::group3,
                      ParamKind::sparse_uniform, ParamKind::explicit_values}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown parameter kind '" + std::string(name) + "'");
}

double sparse_mu(std::size_t n) {
  return std::min(1.0, 10.0 * std::pow(static_cast<double>(n), -2.0 / 3.0));
}

double ParamSpec::default_rho() const {
  if (rho) return *rho;
  switch (kind) {
    case ParamKind::group1: return 0.6;
    case ParamKind::group2: return 0.3;
    case ParamKind::group3: return -0.7;
    case ParamKind::sparse_uniform: return 0.3;
    case ParamKind::explicit_values: return 0.0;
  }
  return 0.0;
}

double ParamSpec::default_mu() const {
  if (mu) return *mu;
  return kind == ParamKind::sparse_uniform ? sparse_mu(n) : 1.0;
}

std::pair<NodeParams, GlobalParams> gen_params(const ParamSpec& spec, Seed seed) {
  if (spec.n < 2) throw ModelError("gen_params needs n >= 2");
  if (spec.kind == ParamKind::explicit_values) {
    throw std::invalid_argument("explicit parameters are supplied, not generated");
  }
  const std::size_t n = spec.n;
  NodeParams p = NodeParams::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ua = rng::uniform(seed, {rng::kAlphaStream, i});
    const double ub = rng::uniform(seed, {rng::kBetaStream, i});
    switch (spec.kind) {
      case ParamKind::group1:
      case ParamKind::sparse_uniform:
        p.alpha[i] = spec.bound * (2.0 * ua - 1.0);
        p.beta[i] = spec.bound * (2.0 * ub - 1.0);
        break;
      case ParamKind::group2:
        p.alpha[i] = rng::standard_normal(seed, rng::kAlphaStream, i);
        p.beta[i] = rng::standard_normal(seed, rng::kBetaStream, i);
        break;
      case ParamKind::group3:
        p.alpha[i] = ua < 0.5 ? 0.3 : 0.7;
        p.beta[i] = ub < 0.5 ? 0.4 : 0.6;
        break;
      case ParamKind::explicit_values:
        break;
    }
  }
  p.alpha[0] = 0.0;
  const GlobalParams g{spec.default_rho(), spec.default_mu()};
  detail::check_mu(g.mu);
  return {std::move(p), g};
}

DyadOutcome draw_dyad(const DyadPmf& pmf, double u) {
  double acc = pmf.p00;
  if (u < acc) return {false, false};
  acc += pmf.p10;
  if (u < acc) return {true, false};
  acc += pmf.p01;
  if (u < acc) return {false, true};
  return {true, true};
}

Network sample_network(const NodeParams& params, const GlobalParams& globals, Seed seed) {
  params.validate();
  const std::size_t n = params.size();
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const DyadPmf pmf = dyad_pmf_sparse(params.alpha[i] + params.beta[j],
                                          params.alpha[j] + params.beta[i], globals.rho, globals.mu);
      const DyadOutcome y = draw_dyad(pmf, rng::uniform(seed, {rng::kDyadStream, i, j}));
      const auto ui = static_cast<std::uint32_t>(i), uj = static_cast<std::uint32_t>(j);
      if (y.a_ij) edges.push_back({ui, uj});
      if (y.a_ji) edges.push_back({uj, ui});
    }
  }
  return Network(n, std::move(edges));
}

NodeParams perturb_params(const NodeParams& params, double magnitude, Seed seed) {
  if (!(magnitude >= 0.0)) throw std::invalid_argument("perturbation magnitude must be >= 0");
  NodeParams out = params;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.alpha[i] += magnitude * (2.0 * rng::uniform(seed, {rng::kPerturbAlpha, i}) - 1.0);
    out.beta[i] += magnitude * (2.0 * rng::uniform(seed, {rng::kPerturbBeta, i}) - 1.0);
  }
  return out;
}

}  // namespace expnet

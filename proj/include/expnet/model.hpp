#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "expnet/network.hpp"
#include "expnet/types.hpp"

namespace expnet {

// Exponential network model with reciprocity interaction.
//
// For a dyad oriented as (i, j) the dense kernel is
//
//   g(a, b) = exp(theta1 * a + theta2 * b + rho * a * b) / Z,
//   theta1 = alpha_i + beta_j,  theta2 = alpha_j + beta_i,
//
// and the sparse model scales every non-empty outcome by mu:
//   p(y) = mu * g(y) for y != (0,0),  p(0,0) = 1 - mu * (1 - g(0,0)).

/// Z = 1 + e^t1 + e^t2 + e^(t1 + t2 + rho), evaluated with a max shift.
double dyad_partition(double theta1, double theta2, double rho);

DyadPmf dyad_pmf_dense(double theta1, double theta2, double rho);

/// Throws ModelError when mu is outside (0, 1] or p00 would be <= 1e-12.
DyadPmf dyad_pmf_sparse(double theta1, double theta2, double rho, double mu);

double dyad_loglik(DyadOutcome y, double theta1, double theta2, double rho, double mu);

struct Score3 {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double rho = 0.0;
};

/// Gradient of log g at the observed outcome (dense model).
Score3 dyad_score(DyadOutcome y, double theta1, double theta2, double rho);

double node_loglik(const Network& net, std::size_t i, const NodeParams& params,
                   const GlobalParams& globals);
double total_loglik(const Network& net, const NodeParams& params, const GlobalParams& globals);

struct NodeGradient {
  double alpha = 0.0;
  double beta = 0.0;
};

NodeGradient node_gradient(const Network& net, std::size_t i, const NodeParams& params,
                           const GlobalParams& globals);

/// Second partials of l_i in (alpha_i, beta_i).
struct NodeHessian {
  double aa = 0.0;
  double ab = 0.0;
  double bb = 0.0;
  bool invertible = true;  // false when |det| < kSingularDet

  double det() const { return aa * bb - ab * ab; }
};

inline constexpr double kSingularDet = 1e-12;

NodeHessian node_hessian(const Network& net, std::size_t i, const NodeParams& params,
                         const GlobalParams& globals);

struct RhoDerivatives {
  double first = 0.0;
  double second = 0.0;
  bool invertible = true;  // false when |second| < kSingularDet
};

RhoDerivatives rho_derivatives(const Network& net, const NodeParams& params,
                               const GlobalParams& globals);

/// Smallest singular value of the 4x3 matrix of dense scores
/// [d log g(a,b) / d(theta1, theta2, rho)] over the four outcomes.
double information_rank_diagnostic(double theta1, double theta2, double rho);

namespace detail {

/// mu together with its logs, precomputed once per fit.
struct SparseLevel {
  double mu = 1.0;
  double log_mu = 0.0;
  double one_minus_mu = 0.0;

  explicit SparseLevel(double m) : mu(m), log_mu(std::log(m)), one_minus_mu(1.0 - m) {}
};

/// log p and its first and second partials in (theta1, theta2, rho) for one
/// oriented dyad of the sparse model.
struct DyadTerms {
  double logp;
  double d1, d2, d3;
  double h11, h12, h22, h13, h23, h33;
};

/// Shared tail of the kernel. u_k = exp(e_k - m) for the outcome exponents
/// (0, t1, t2, t1 + t2 + rho) and em is the observed outcome's e - m.
inline DyadTerms dyad_terms_scaled(double u0, double u1, double u2, double u3, double em,
                                   int code, const SparseLevel& lv) {
  const double s = u0 + u1 + u2 + u3;
  const double inv_s = 1.0 / s;
  const double q0 = u0 * inv_s, q1 = u1 * inv_s, q2 = u2 * inv_s, q3 = u3 * inv_s;
  const double m1 = q1 + q3, m2 = q2 + q3, m3 = q3;
  const double c11 = m1 * (q0 + q2);
  const double c22 = m2 * (q0 + q1);
  const double c33 = q3 * (q0 + q1 + q2);
  const double c12 = q0 * q3 - q1 * q2;
  const double c13 = q3 * (q0 + q2);
  const double c23 = q3 * (q0 + q1);
  DyadTerms r;
  if (code != 0) {
    const double a = (code & 1) ? 1.0 : 0.0;
    const double b = (code & 2) ? 1.0 : 0.0;
    r.logp = lv.log_mu + em - std::log(s);
    r.d1 = a - m1;
    r.d2 = b - m2;
    r.d3 = a * b - m3;
    r.h11 = -c11;
    r.h12 = -c12;
    r.h22 = -c22;
    r.h13 = -c13;
    r.h23 = -c23;
    r.h33 = -c33;
    return r;
  }
  const double rest = (u1 + u2 + u3) * lv.one_minus_mu;
  const double num = u0 + rest;
  r.logp = std::log(num * inv_s);
  // Zero outcome: p00 = (u0 + (1 - mu)(u1 + u2 + u3)) / s, so its score is
  // the dense score damped by w = mu u0 / num.
  const double w = lv.mu * u0 / num;
  const double ww = w * (lv.one_minus_mu * s / num);  // w (1 - w)
  r.d1 = -w * m1;
  r.d2 = -w * m2;
  r.d3 = -w * m3;
  r.h11 = -w * c11 + ww * m1 * m1;
  r.h12 = -w * c12 + ww * m1 * m2;
  r.h22 = -w * c22 + ww * m2 * m2;
  r.h13 = -w * c13 + ww * m1 * m3;
  r.h23 = -w * c23 + ww * m2 * m3;
  r.h33 = -w * c33 + ww * m3 * m3;
  return r;
}

inline double observed_exponent(double t1, double t2, double rho, int code) {
  return code == 0 ? 0.0 : code == 1 ? t1 : code == 2 ? t2 : t1 + t2 + rho;
}

/// Max-shifted kernel, safe for any finite input.
inline DyadTerms dyad_terms(double t1, double t2, double rho, int code, const SparseLevel& lv) {
  const double e3 = t1 + t2 + rho;
  const double m = std::max(std::max(0.0, t1), std::max(t2, e3));
  return dyad_terms_scaled(std::exp(-m), std::exp(t1 - m), std::exp(t2 - m), std::exp(e3 - m),
                           observed_exponent(t1, t2, rho, code) - m, code, lv);
}

/// Unshifted kernel from E1 = exp(t1), E2 = exp(t2), R = exp(rho). Callers
/// keep |alpha|, |beta|, |rho| <= kFastBound so nothing overflows.
inline DyadTerms dyad_terms_exp(double e1, double e2, double r, double t1, double t2, double rho,
                                int code, const SparseLevel& lv) {
  return dyad_terms_scaled(1.0, e1, e2, e1 * e2 * r, observed_exponent(t1, t2, rho, code), code,
                           lv);
}

inline constexpr double kFastBound = 100.0;

/// exp(alpha_j), exp(beta_j) for every node, kept in step with a parameter
/// vector during a fit.
class ExpTable {
 public:
  ExpTable() = default;
  explicit ExpTable(const NodeParams& params);
  void set(std::size_t i, double alpha, double beta);
  bool fast() const { return max_abs_ <= kFastBound; }
  const double* ea() const { return ea_.data(); }
  const double* eb() const { return eb_.data(); }

 private:
  std::vector<double> ea_, eb_;
  double max_abs_ = 0.0;  // never decreases
};

/// l_i and its (alpha_i, beta_i) derivatives with node i moved to
/// (alpha_i, beta_i) while every other coordinate stays at `params`.
/// `table`, when given, must match `params`.
struct NodeEval {
  double loglik = 0.0;
  double ga = 0.0, gb = 0.0;
  double haa = 0.0, hab = 0.0, hbb = 0.0;
};

NodeEval evaluate_node(std::span<const std::uint8_t> row, std::size_t i, double alpha_i,
                       double beta_i, const NodeParams& params, double rho, const SparseLevel& lv,
                       const ExpTable* table = nullptr);

/// Only l_i, used for candidate scoring.
double node_loglik_at(std::span<const std::uint8_t> row, std::size_t i, double alpha_i,
                      double beta_i, const NodeParams& params, double rho, const SparseLevel& lv,
                      const ExpTable* table = nullptr);

/// One pass over all unordered pairs.
struct FullEval {
  double loglik = 0.0;
  std::vector<double> ga, gb;  // per-node gradients (filled when requested)
  double drho = 0.0;
  double hrho = 0.0;
};

FullEval evaluate_full(const Network& net, const NodeParams& params, double rho,
                       const SparseLevel& lv, bool node_gradients,
                       const ExpTable* table = nullptr);

/// Throws ModelError unless mu lies in (0, 1].
void check_mu(double mu);

}  // namespace detail
}  // namespace expnet

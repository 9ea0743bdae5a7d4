#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace expnet {

/// Raised when parameters cannot define a valid dyad distribution.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-node latent types: out-propensity alpha and in-propensity beta.
struct NodeParams {
  std::vector<double> alpha;
  std::vector<double> beta;

  NodeParams() = default;
  NodeParams(std::vector<double> a, std::vector<double> b)
      : alpha(std::move(a)), beta(std::move(b)) {}
  static NodeParams zeros(std::size_t n) {
    return NodeParams(std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
  }

  std::size_t size() const { return alpha.size(); }

  // Throws ModelError on length mismatch, n < 2, non-finite entries, or
  // entries outside [-bound, bound] when a bound is given.
  void validate(std::optional<double> bound = std::nullopt) const;
};

struct GlobalParams {
  double rho = 0.0;  // reciprocity interaction
  double mu = 1.0;   // sparsity level in (0, 1]
};

/// Observed state of one dyad, oriented as (i, j).
struct DyadOutcome {
  bool a_ij = false;
  bool a_ji = false;

  // 0 = (0,0), 1 = (1,0), 2 = (0,1), 3 = (1,1).
  constexpr int code() const { return (a_ij ? 1 : 0) | (a_ji ? 2 : 0); }
  static constexpr DyadOutcome from_code(int c) { return {(c & 1) != 0, (c & 2) != 0}; }
  friend constexpr bool operator==(DyadOutcome, DyadOutcome) = default;
};

/// Four-outcome probability table for one dyad, plus the dense normalizer.
struct DyadPmf {
  double p00 = 0.0;
  double p10 = 0.0;
  double p01 = 0.0;
  double p11 = 0.0;
  double z = 0.0;

  double operator[](int code) const {
    switch (code) {
      case 0: return p00;
      case 1: return p10;
      case 2: return p01;
      default: return p11;
    }
  }
  double operator()(DyadOutcome y) const { return (*this)[y.code()]; }
};

}  // namespace expnet

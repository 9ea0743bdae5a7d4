#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "expnet/discretize.hpp"
#include "expnet/model.hpp"
#include "expnet/sampler.hpp"
#include "support.hpp"

using namespace expnet;

TEST_CASE("uniform grid values") {
  const Grid g = Grid::uniform(1.0, 0.5);
  CHECK(std::vector<double>(g.values().begin(), g.values().end()) ==
        std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(g.delta() == 0.5);
  CHECK(g.covering_radius() == doctest::Approx(0.5 * std::sqrt(2.0) / 2.0));

  const Grid two = Grid::uniform(1.0, 2.0);
  CHECK(std::vector<double>(two.values().begin(), two.values().end()) ==
        std::vector<double>{-1.0, 1.0});

  const Grid odd = Grid::uniform(1.0, 0.3);
  CHECK(odd.values().front() == -1.0);
  CHECK(odd.values().back() == 1.0);
  CHECK(odd.size() == 8);  // -1, -0.7, -0.4, -0.1, 0.2, 0.5, 0.8, 1
  CHECK(Grid::uniform(1.0, 0.5).covering_radius() == doctest::Approx(0.35355339059327373));

  CHECK_THROWS_AS(Grid::uniform(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Grid::uniform(1.0, 2.5), std::invalid_argument);
  CHECK_THROWS_AS(Grid::uniform(0.0, 0.5), std::invalid_argument);
}

TEST_CASE("nearest value and projection") {
  const Grid g = Grid::uniform(1.0, 0.5);
  CHECK(g.nearest(0.24) == 0.0);
  CHECK(g.nearest(0.26) == 0.5);
  CHECK(g.nearest(0.25) == 0.0);  // tie to the smaller value
  CHECK(g.nearest(-3.0) == -1.0);
  CHECK(g.nearest(7.0) == 1.0);
  CHECK(g.contains(0.5));
  CHECK_FALSE(g.contains(0.4));
  const NodeParams p = project_to_grid(NodeParams({0.1, -0.8}, {0.9, 0.3}), g);
  CHECK(p.alpha == std::vector<double>{0.0, -1.0});
  CHECK(p.beta == std::vector<double>{1.0, 0.5});
}

TEST_CASE("optimal spacing") {
  const double n = 1000.0;
  const double expect = std::pow(n, -1.0 / 6.0) * std::pow(0.1, -1.0 / 6.0) * std::pow(std::log(n), 4.0 / 3.0);
  CHECK(expect == doctest::Approx(6.106362625208946).epsilon(1e-14));
  CHECK(optimal_spacing(1000, 0.1, 1.0, 10.0) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(optimal_spacing(1000, 0.1) == 2.0);  // clamped to 2B
  CHECK(optimal_spacing(3, 1.0, 0.5) ==
        doctest::Approx(0.5 * std::pow(3.0, -1.0 / 6.0) * std::pow(std::log(3.0), 4.0 / 3.0)));
  CHECK_THROWS(optimal_spacing(1, 1.0));
  CHECK_THROWS(optimal_spacing(100, 0.0));
}

TEST_CASE("brute force on a single dyad") {
  // One reciprocated edge pair: the likelihood grows with theta and rho, so
  // the maximizer sits at the top of every grid.
  const Network net(2, {{0, 1}, {1, 0}});
  const Grid g = Grid::uniform(1.0, 1.0);
  const std::vector<double> rho_grid{-1.0, 0.0, 1.0};
  const DiscretizedFit r = brute_force_discrete_mle(net, g, rho_grid);
  CHECK(r.params.alpha == std::vector<double>{1.0, 1.0});
  CHECK(r.params.beta == std::vector<double>{1.0, 1.0});
  CHECK(r.rho == 1.0);
  CHECK(r.loglik_trace.back() == doctest::Approx(std::log(testing_support::naive_prob(1, 1, 2, 2, 1, 1))));
}

TEST_CASE("brute force on an empty dyad") {
  // Both theta sums at their minimum.
  const Network net(2, {});
  const Grid g = Grid::uniform(1.0, 2.0);
  const std::vector<double> rho_grid{0.0};
  const DiscretizedFit r = brute_force_discrete_mle(net, g, rho_grid);
  CHECK(r.params.alpha == std::vector<double>{-1.0, -1.0});
  CHECK(r.params.beta == std::vector<double>{-1.0, -1.0});
  CHECK_THROWS_AS(brute_force_discrete_mle(Network(6, {}), Grid::uniform(1.0, 0.1), rho_grid),
                  std::invalid_argument);
}

TEST_CASE("discretized fit started at the brute-force optimum stays there") {
  std::mt19937_64 gen(41);
  const Grid g = Grid::uniform(1.0, 1.0);
  for (int inst = 0; inst < 10; ++inst) {
    const Network net = testing_support::random_network(3, 0.5, gen);
    const std::vector<double> rho_grid{-1.0, 0.0, 1.0};
    const DiscretizedFit gridded = brute_force_discrete_mle(net, g, rho_grid);
    CHECK(gridded.loglik_trace.back() ==
          doctest::Approx(testing_support::naive_loglik(net, gridded.params, gridded.rho, 1.0))
              .epsilon(1e-12));

    const DiscretizedFit bf = brute_force_discrete_mle(net, g, {});
    CHECK(bf.loglik_trace.back() >= gridded.loglik_trace.back() - 1e-12);
    FitConfig c = FitConfig::newton_defaults();
    c.sub_tol = 1e-12;
    c.outer_tol = 1e-10;
    const DiscretizedFit df = discretized_fit(net, bf.params, bf.rho, g, c);
    CHECK(df.params.alpha == bf.params.alpha);
    CHECK(df.params.beta == bf.params.beta);
    CHECK(std::abs(df.loglik_trace.back() - bf.loglik_trace.back()) < 1e-9);
  }
}

TEST_CASE("discretized fit stays on the grid and ascends") {
  auto [truth, glob] = gen_params({ParamKind::group1, 50}, Seed{3});
  const Network net = sample_network(truth, glob, Seed{4});
  const Grid g = Grid::uniform(1.0, 0.25);
  FitConfig c = FitConfig::newton_defaults();
  const NodeParams init = project_to_grid(NodeParams::zeros(50), g);
  const DiscretizedFit r = discretized_fit(net, init, 0.0, g, c);
  CHECK(r.converged);
  CHECK(r.last_sweep_changes == 0);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(g.contains(r.params.alpha[i]));
    CHECK(g.contains(r.params.beta[i]));
  }
  for (std::size_t t = 1; t < r.loglik_trace.size(); ++t) {
    CHECK(r.loglik_trace[t] >= r.loglik_trace[t - 1] - 1e-9 * std::abs(r.loglik_trace[t]));
  }
  CHECK(r.loglik_trace.back() >= total_loglik(net, init, {0.0, 1.0}));
  CHECK_THROWS_AS(discretized_fit(net, NodeParams(std::vector<double>(50, 0.1), std::vector<double>(50, 0.0)), 0.0, g, c),
                  ModelError);
}

TEST_CASE("finer nested grids never lose likelihood at the optimum") {
  // {-1, 1} is contained in {-1, 0, 1}, so the brute-force maximum can only grow.
  std::mt19937_64 gen(42);
  const std::vector<double> rho_grid{-0.5, 0.5};
  for (int inst = 0; inst < 5; ++inst) {
    const Network net = testing_support::random_network(3, 0.5, gen);
    const double coarse = brute_force_discrete_mle(net, Grid::uniform(1.0, 2.0), rho_grid).loglik_trace.back();
    const double fine = brute_force_discrete_mle(net, Grid::uniform(1.0, 1.0), rho_grid).loglik_trace.back();
    CHECK(fine >= coarse);
  }
}

#pragma once

#include <utility>
#include <vector>

#include "consensus/core.hpp"

namespace consensus {

struct SolverConfig {
  double eta = 0.1;               // mirror-ascent learning rate
  int max_iters = 10000;          // iteration budget T
  double tolerance = 1e-8;        // L-inf movement threshold for convergence
  double smoothing_gamma = 0.1;   // gamma for smooth_weights at the call site
  bool last_iterate = false;      // return the final iterate instead of the
                                  // trajectory average (diagnostic escape hatch)

  void validate() const;
};

enum class SolverStatus { converged, max_iters_reached };

struct SolverResult {
  WeightDistribution weights_a;
  WeightDistribution weights_b;
  SolverStatus status = SolverStatus::max_iters_reached;
  int iterations = 0;
  double exploitability = 0.0;  // of the returned pair on the input matrix
};

// Entropic mirror ascent with simultaneous multiplicative updates
// w <- normalize(w * exp(eta * grad)), gradients grad_a = payoff_a * w_b and
// grad_b = payoff_b^T * w_a, starting from uniform. Convergence is declared
// when successive trajectory averages of both players move less than
// cfg.tolerance in L-inf. Returns the minimum-exploitability averaged iterate
// observed at periodic checkpoints, where both the from-start average and an
// epoch-doubling suffix average compete (never a hard failure on
// non-convergence; status says which exit fired).
SolverResult solve_equilibrium(const UtilityMatrix& m, const SolverConfig& cfg);

// gamma * uniform + (1 - gamma) * w. Affine in gamma: composing gamma1 then
// gamma2 equals one application with 1 - (1-gamma1)(1-gamma2).
WeightDistribution smooth_weights(const WeightDistribution& w, double gamma);

// Sum of both players' best-response gains; zero exactly at a Nash
// equilibrium of the restricted game.
double exploitability(const UtilityMatrix& m, const WeightDistribution& w_a,
                      const WeightDistribution& w_b);

// Exact equilibria by support enumeration (equal-size supports, ascending
// bitmask order), solving each indifference linear system and verifying the
// best-response inequalities. Verification oracle; at most 4x4.
std::vector<std::pair<WeightDistribution, WeightDistribution>> enumerate_equilibria(
    const UtilityMatrix& m);

// First equilibrium in the enumeration order above.
std::pair<WeightDistribution, WeightDistribution> brute_force_equilibrium(
    const UtilityMatrix& m);

// Expected utilities (u_a, u_b) of a strategy pair on the matrix.
std::pair<double, double> expected_utilities(const UtilityMatrix& m,
                                             const WeightDistribution& w_a,
                                             const WeightDistribution& w_b);

}  // namespace consensus

#include "consensus/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace consensus {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidInputError(what);
}

// Raw simplex vectors for the inner loop; gids are reattached at the end.
using Vec = std::vector<double>;

Vec matvec_a(const UtilityMatrix& m, const Vec& w_b) {
  Vec out(m.n_rows(), 0.0);
  for (std::size_t j = 0; j < m.n_rows(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m.n_cols(); ++k) acc += m.payoff_a[j][k] * w_b[k];
    out[j] = acc;
  }
  return out;
}

Vec matvec_b(const UtilityMatrix& m, const Vec& w_a) {
  Vec out(m.n_cols(), 0.0);
  for (std::size_t k = 0; k < m.n_cols(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.n_rows(); ++j) acc += m.payoff_b[j][k] * w_a[j];
    out[k] = acc;
  }
  return out;
}

double raw_exploitability(const UtilityMatrix& m, const Vec& w_a, const Vec& w_b) {
  Vec br_a = matvec_a(m, w_b);
  Vec br_b = matvec_b(m, w_a);
  double value_a = 0.0, value_b = 0.0, best_a = -1e300, best_b = -1e300;
  for (std::size_t j = 0; j < w_a.size(); ++j) {
    value_a += w_a[j] * br_a[j];
    best_a = std::max(best_a, br_a[j]);
  }
  for (std::size_t k = 0; k < w_b.size(); ++k) {
    value_b += w_b[k] * br_b[k];
    best_b = std::max(best_b, br_b[k]);
  }
  return (best_a - value_a) + (best_b - value_b);
}

// Log-space multiplicative update: l += eta*grad, then shift so max(l) = 0.
// A relative floor keeps every probability strictly positive in doubles even
// when a strategy is dominated for the whole run.
constexpr double kLogFloor = -700.0;

void ascend(Vec& logits, const Vec& grad, double eta) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] += eta * grad[i];
    top = std::max(top, logits[i]);
  }
  for (double& l : logits) l = std::max(l - top, kLogFloor);
}

Vec to_simplex(const Vec& logits) {
  Vec w(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += (w[i] = std::exp(logits[i]));
  for (double& x : w) x /= sum;
  return w;
}

WeightDistribution attach_gids(const std::vector<std::string>& gids, Vec w) {
  WeightDistribution out;
  out.gids = gids;
  out.weights = std::move(w);
  return out;
}

Vec detach(const WeightDistribution& w) { return w.weights; }

void check_shapes(const UtilityMatrix& m, const WeightDistribution& w_a,
                  const WeightDistribution& w_b) {
  require(w_a.size() == m.n_rows() && w_b.size() == m.n_cols(),
          "weight shapes must match the matrix");
}

}  // namespace

void SolverConfig::validate() const {
  require(std::isfinite(eta) && eta > 0.0, "solver eta must be > 0");
  require(max_iters >= 1, "solver max_iters must be >= 1");
  require(std::isfinite(tolerance) && tolerance > 0.0, "solver tolerance must be > 0");
  require(std::isfinite(smoothing_gamma) && smoothing_gamma >= 0.0 && smoothing_gamma <= 1.0,
          "solver smoothing_gamma must be in [0, 1]");
}

SolverResult solve_equilibrium(const UtilityMatrix& m, const SolverConfig& cfg) {
  cfg.validate();
  m.validate();
  require(m.n_rows() >= 1 && m.n_cols() >= 1, "matrix must be non-empty");

  const std::size_t rows = m.n_rows(), cols = m.n_cols();
  Vec logits_a(rows, 0.0), logits_b(cols, 0.0);
  Vec sum_a(rows, 0.0), sum_b(cols, 0.0);
  Vec avg_a(rows, 1.0 / rows), avg_b(cols, 1.0 / cols);

  // A from-start average sheds its initial transient only at rate 1/t, which
  // can leave a payoff bias above the verification tolerances on games whose
  // iterate wanders before locking in. Epoch-doubling suffix averages forget
  // the transient geometrically while still being averaged iterates, so both
  // kinds compete at the checkpoints below.
  Vec suffix_sum_a(rows, 0.0), suffix_sum_b(cols, 0.0);
  int suffix_start = 1;

  // Exploitability is sampled at checkpoints and the best averaged pair wins;
  // cycling trajectories keep their best average rather than the last one.
  constexpr int kCheckStride = 25;
  Vec best_a = avg_a, best_b = avg_b;
  double best_expl = std::numeric_limits<double>::infinity();

  auto consider = [&](const Vec& ca, const Vec& cb) {
    double e = raw_exploitability(m, ca, cb);
    if (e < best_expl) {
      best_expl = e;
      best_a = ca;
      best_b = cb;
    }
  };
  auto suffix_avg = [](const Vec& sum, int count) {
    Vec out = sum;
    for (double& x : out) x /= count;
    return out;
  };

  SolverStatus status = SolverStatus::max_iters_reached;
  Vec w_a, w_b;
  int iterations = 0;

  for (int t = 1; t <= cfg.max_iters; ++t) {
    iterations = t;
    w_a = to_simplex(logits_a);
    w_b = to_simplex(logits_b);

    // Simultaneous update: both gradients read the same iterate pair.
    Vec grad_a = matvec_a(m, w_b);
    Vec grad_b = matvec_b(m, w_a);
    ascend(logits_a, grad_a, cfg.eta);
    ascend(logits_b, grad_b, cfg.eta);

    double drift = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      sum_a[j] += w_a[j];
      suffix_sum_a[j] += w_a[j];
      double next = sum_a[j] / t;
      drift = std::max(drift, std::abs(next - avg_a[j]));
      avg_a[j] = next;
    }
    for (std::size_t k = 0; k < cols; ++k) {
      sum_b[k] += w_b[k];
      suffix_sum_b[k] += w_b[k];
      double next = sum_b[k] / t;
      drift = std::max(drift, std::abs(next - avg_b[k]));
      avg_b[k] = next;
    }

    if (t % kCheckStride == 0 || t == cfg.max_iters) {
      consider(avg_a, avg_b);
      int suffix_count = t - suffix_start + 1;
      consider(suffix_avg(suffix_sum_a, suffix_count), suffix_avg(suffix_sum_b, suffix_count));
    }

    if (t >= 2 * suffix_start) {  // epoch boundary: restart the suffix window
      suffix_start = t + 1;
      std::fill(suffix_sum_a.begin(), suffix_sum_a.end(), 0.0);
      std::fill(suffix_sum_b.begin(), suffix_sum_b.end(), 0.0);
    }

    if (t > 1 && drift < cfg.tolerance) {
      status = SolverStatus::converged;
      break;
    }
  }

  if (!cfg.last_iterate) {
    consider(avg_a, avg_b);
    int suffix_count = iterations - suffix_start + 1;
    if (suffix_count > 0) {
      consider(suffix_avg(suffix_sum_a, suffix_count), suffix_avg(suffix_sum_b, suffix_count));
    }
  }

  SolverResult result;
  result.status = status;
  result.iterations = iterations;
  if (cfg.last_iterate) {
    result.weights_a = attach_gids(m.rows, w_a);
    result.weights_b = attach_gids(m.cols, w_b);
    result.exploitability = raw_exploitability(m, w_a, w_b);
  } else {
    result.weights_a = attach_gids(m.rows, std::move(best_a));
    result.weights_b = attach_gids(m.cols, std::move(best_b));
    result.exploitability = best_expl;
  }
  return result;
}

WeightDistribution smooth_weights(const WeightDistribution& w, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInputError("gamma must be in [0, 1]");
  w.validate();
  WeightDistribution out = w;
  double uniform = 1.0 / static_cast<double>(w.size());
  for (double& x : out.weights) x = gamma * uniform + (1.0 - gamma) * x;
  return out;
}

double exploitability(const UtilityMatrix& m, const WeightDistribution& w_a,
                      const WeightDistribution& w_b) {
  m.validate();
  check_shapes(m, w_a, w_b);
  return raw_exploitability(m, detach(w_a), detach(w_b));
}

std::pair<double, double> expected_utilities(const UtilityMatrix& m,
                                             const WeightDistribution& w_a,
                                             const WeightDistribution& w_b) {
  m.validate();
  check_shapes(m, w_a, w_b);
  double u_a = 0.0, u_b = 0.0;
  for (std::size_t j = 0; j < m.n_rows(); ++j) {
    for (std::size_t k = 0; k < m.n_cols(); ++k) {
      double joint = w_a.weights[j] * w_b.weights[k];
      u_a += joint * m.payoff_a[j][k];
      u_b += joint * m.payoff_b[j][k];
    }
  }
  return {u_a, u_b};
}

// --- support enumeration ------------------------------------------------------

namespace {

// Gaussian elimination with partial pivoting; returns false on a (near-)
// singular system. Small dense systems only (n <= 5 here).
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> rhs, Vec& out) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-12) return false;
    std::swap(a[pivot], a[col]);
    std::swap(rhs[pivot], rhs[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  out.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i] = rhs[i] / a[i][i];
  return true;
}

std::vector<std::size_t> mask_indices(unsigned mask, std::size_t n) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask & (1u << i)) idx.push_back(i);
  }
  return idx;
}

constexpr double kEqTol = 1e-9;

// Solves for the column player's mixture making the row player indifferent
// across `rows` (payoff v), with support `cols`. System unknowns: the support
// weights plus v. Returns false when singular or infeasible.
bool indifference_mixture(const std::vector<std::vector<double>>& payoff,
                          const std::vector<std::size_t>& rows,
                          const std::vector<std::size_t>& cols, Vec& mixture, double& value) {
  const std::size_t s = cols.size();
  // Equations: for each row r in rows: sum_c payoff[r][c]*w_c - v = 0;
  // plus sum_c w_c = 1. Square because |rows| == |cols|.
  std::vector<std::vector<double>> a(s + 1, std::vector<double>(s + 1, 0.0));
  std::vector<double> rhs(s + 1, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < s; ++c) a[i][c] = payoff[rows[i]][cols[c]];
    a[i][s] = -1.0;  // coefficient of v
  }
  for (std::size_t c = 0; c < s; ++c) a[s][c] = 1.0;
  rhs[s] = 1.0;

  Vec solution;
  if (!solve_linear(std::move(a), std::move(rhs), solution)) return false;
  for (std::size_t c = 0; c < s; ++c) {
    if (solution[c] < -kEqTol) return false;  // outside the simplex
  }
  mixture.assign(s, 0.0);
  double sum = 0.0;
  for (std::size_t c = 0; c < s; ++c) sum += (mixture[c] = std::max(solution[c], 0.0));
  for (double& w : mixture) w /= sum;  // squash the clamp residue
  value = solution[s];
  return true;
}

}  // namespace

std::vector<std::pair<WeightDistribution, WeightDistribution>> enumerate_equilibria(
    const UtilityMatrix& m) {
  m.validate();
  const std::size_t rows = m.n_rows(), cols = m.n_cols();
  require(rows >= 1 && cols >= 1, "matrix must be non-empty");
  if (rows > 4 || cols > 4) {
    throw UnsupportedSizeError("brute-force enumeration supports at most 4x4 matrices");
  }

  std::vector<std::pair<WeightDistribution, WeightDistribution>> found;
  for (unsigned mask_a = 1; mask_a < (1u << rows); ++mask_a) {
    std::vector<std::size_t> support_a = mask_indices(mask_a, rows);
    for (unsigned mask_b = 1; mask_b < (1u << cols); ++mask_b) {
      std::vector<std::size_t> support_b = mask_indices(mask_b, cols);
      // Nondegenerate equilibria have equal support sizes; degenerate games
      // may hide unequal-support equilibria from this oracle, which is fine
      // for its verification role.
      if (support_a.size() != support_b.size()) continue;

      Vec mix_b, mix_a;
      double value_a = 0.0, value_b = 0.0;
      if (!indifference_mixture(m.payoff_a, support_a, support_b, mix_b, value_a)) continue;
      // Player B is indifferent across support_b given A's mixture over
      // support_a; B's payoffs are read column-wise.
      std::vector<std::vector<double>> payoff_b_t(cols, std::vector<double>(rows, 0.0));
      for (std::size_t j = 0; j < rows; ++j) {
        for (std::size_t k = 0; k < cols; ++k) payoff_b_t[k][j] = m.payoff_b[j][k];
      }
      if (!indifference_mixture(payoff_b_t, support_b, support_a, mix_a, value_b)) continue;

      Vec w_a(rows, 0.0), w_b(cols, 0.0);
      for (std::size_t i = 0; i < support_a.size(); ++i) w_a[support_a[i]] = mix_a[i];
      for (std::size_t i = 0; i < support_b.size(); ++i) w_b[support_b[i]] = mix_b[i];

      // Best-response verification: no action outside the support may beat
      // the support value.
      bool ok = true;
      for (std::size_t j = 0; j < rows && ok; ++j) {
        double payoff = 0.0;
        for (std::size_t k = 0; k < cols; ++k) payoff += m.payoff_a[j][k] * w_b[k];
        if (payoff > value_a + kEqTol) ok = false;
      }
      for (std::size_t k = 0; k < cols && ok; ++k) {
        double payoff = 0.0;
        for (std::size_t j = 0; j < rows; ++j) payoff += m.payoff_b[j][k] * w_a[j];
        if (payoff > value_b + kEqTol) ok = false;
      }
      if (!ok) continue;

      found.emplace_back(attach_gids(m.rows, std::move(w_a)), attach_gids(m.cols, std::move(w_b)));
    }
  }
  return found;
}

std::pair<WeightDistribution, WeightDistribution> brute_force_equilibrium(const UtilityMatrix& m) {
  auto all = enumerate_equilibria(m);
  if (all.empty()) {
    // Every finite bimatrix game has a mixed equilibrium; reaching this means
    // the game is degenerate in a way equal-support enumeration cannot see.
    throw UnsupportedSizeError("support enumeration found no equilibrium (degenerate game)");
  }
  return all.front();
}

}  // namespace consensus

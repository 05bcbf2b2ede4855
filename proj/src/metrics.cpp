#include "consensus/metrics.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "consensus/errors.hpp"

namespace consensus {

void PplPair::validate() const {
  if (!(ppl_i_of_other > 0.0) || !std::isfinite(ppl_i_of_other) || !(ppl_other_of_i > 0.0) ||
      !std::isfinite(ppl_other_of_i)) {
    throw InvalidInputError("PplPair: perplexities must be positive and finite");
  }
}

double PplPair::gap() const { return std::abs(ppl_i_of_other - ppl_other_of_i); }

double VsmMeans::m(int question) const {
  if (question < 1 || question > 24) {
    throw InvalidInputError("VsmMeans: question number must be in [1, 24]");
  }
  return means[question - 1];
}

void VsmMeans::validate() const {
  for (double v : means) {
    if (!(v >= 1.0 && v <= 5.0)) {
      throw InvalidInputError("VsmMeans: every mean must lie in [1, 5]");
    }
  }
}

double perplexity(const TokenLogProbs& lp) {
  lp.validate();
  double sum = 0.0;
  for (double x : lp.logprobs) sum += x;
  return std::exp(-sum / static_cast<double>(lp.logprobs.size()));
}

double ppl_acceptance(const PplPair& initial, const PplPair& consensus) {
  initial.validate();
  consensus.validate();
  if (initial.stage != PplPair::Stage::initial || consensus.stage != PplPair::Stage::consensus) {
    throw InvalidInputError("ppl_acceptance: stages must be (initial, consensus)");
  }
  constexpr double kBaselineFloor = 1e-9;
  double baseline = initial.gap();
  if (baseline < kBaselineFloor) {
    throw DegenerateBaselineError("initial perplexity gap below 1e-9; topic excluded");
  }
  return consensus.gap() / baseline;
}

double acceptance_score(const std::vector<double>& ratios) {
  if (ratios.empty()) throw InvalidInputError("acceptance_score: no ratios");
  std::size_t hits = 0;
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw InvalidInputError("acceptance_score: ratios must be finite and >= 0");
    }
    if (r < 1.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ratios.size());
}

double value_self_consistency(const ValueVector& v0, const ValueVector& vstar) {
  v0.validate();
  vstar.validate();
  int matches = 0;
  for (std::size_t k = 0; k < v0.stances.size(); ++k) {
    if (v0.stances[k] == vstar.stances[k]) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(v0.stances.size());
}

HofstedeScores hofstede_scores(const VsmMeans& m, const HofstedeConstants& c) {
  m.validate();
  HofstedeScores s;
  s.pdi = 35.0 * (m.m(7) - m.m(2)) + 25.0 * (m.m(20) - m.m(23)) + c.c_pdi;
  s.idv = 35.0 * (m.m(4) - m.m(1)) + 35.0 * (m.m(9) - m.m(6)) + c.c_idv;
  s.mas = 35.0 * (m.m(5) - m.m(3)) + 35.0 * (m.m(8) - m.m(10)) + c.c_mas;
  s.uai = 40.0 * (m.m(18) - m.m(15)) + 25.0 * (m.m(21) - m.m(24)) + c.c_uai;
  s.lto = 40.0 * (m.m(13) - m.m(14)) + 25.0 * (m.m(19) - m.m(22)) + c.c_lto;
  s.ivr = 35.0 * (m.m(12) - m.m(11)) + 40.0 * (m.m(17) - m.m(16)) + c.c_ivr;
  return s;
}

FairnessProjection fairness_projection(const std::vector<Embedding>& consensus_points,
                                       const Embedding& anchor_a, const Embedding& anchor_b) {
  if (consensus_points.empty()) {
    throw InvalidInputError("fairness_projection: no consensus points");
  }
  auto require_unit = [](const Embedding& v, const char* name) {
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-6) {
      throw InvalidInputError(std::string("fairness_projection: ") + name +
                              " must be unit-norm");
    }
  };
  require_unit(anchor_a, "anchor_a");
  require_unit(anchor_b, "anchor_b");

  const std::size_t n = consensus_points.size();
  const std::size_t dim = consensus_points[0].size();

  FairnessProjection out;
  out.records.reserve(n);
  for (const auto& p : consensus_points) {
    if (p.size() != dim) {
      throw InvalidInputError("fairness_projection: points must share one dimension");
    }
    FairnessRecord rec;
    rec.d_a = 1.0 - cosine_similarity(p, anchor_a);
    rec.d_b = 1.0 - cosine_similarity(p, anchor_b);
    out.records.push_back(rec);
  }

  if (n >= 2 && dim >= 2) {
    Eigen::MatrixXd x(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dim; ++j) x(i, j) = consensus_points[i][j];
    }
    Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(cov);
    if (eigensolver.info() != Eigen::Success) {
      throw InvalidInputError("fairness_projection: eigendecomposition failed");
    }
    // Eigenvalues come back ascending; the two principal components are the
    // last columns. Fix each sign by the first non-negligible loading.
    Eigen::MatrixXd components(dim, 2);
    components.col(0) = eigensolver.eigenvectors().col(dim - 1);
    components.col(1) = eigensolver.eigenvectors().col(dim - 2);
    for (int cidx = 0; cidx < 2; ++cidx) {
      for (std::size_t j = 0; j < dim; ++j) {
        double v = components(j, cidx);
        if (std::abs(v) > 1e-12) {
          if (v < 0.0) components.col(cidx) = -components.col(cidx);
          break;
        }
      }
    }
    Eigen::MatrixXd projected = x * components;  // n x 2
    for (std::size_t i = 0; i < n; ++i) {
      out.records[i].pca_xy = {projected(i, 0), projected(i, 1)};
    }
  }

  double gap_sum = 0.0;
  for (const auto& rec : out.records) gap_sum += std::abs(rec.d_a - rec.d_b);
  out.summary.mean_abs_gap = gap_sum / static_cast<double>(n);
  out.summary.mean_distance_to_diagonal = out.summary.mean_abs_gap / std::sqrt(2.0);
  return out;
}

}  // namespace consensus

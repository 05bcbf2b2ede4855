#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "consensus/embedding.hpp"
#include "consensus/providers.hpp"
#include "consensus/values.hpp"

namespace consensus {

struct PplPair {
  enum class Stage { initial, consensus };

  double ppl_i_of_other = 0.0;  // perplexity agent i assigns to the other's response
  double ppl_other_of_i = 0.0;
  Stage stage = Stage::initial;

  void validate() const;  // both positive and finite
  double gap() const;     // |ppl_i_of_other - ppl_other_of_i|
};

// Mean scores of the 24 VSM13 content questions, each on a 1-5 scale.
// m(1) addresses question m_01, ..., m(24) question m_24.
struct VsmMeans {
  std::array<double, 24> means{};

  double m(int question) const;  // 1-based accessor
  void validate() const;
};

struct HofstedeConstants {
  double c_pdi = 0.0;
  double c_idv = 43.0;
  double c_mas = 60.0;
  double c_uai = 100.0;
  double c_lto = -25.0;
  double c_ivr = -15.0;
};

struct HofstedeScores {
  double pdi = 0.0, idv = 0.0, mas = 0.0, uai = 0.0, lto = 0.0, ivr = 0.0;
};

// exp(-(1/N) sum log p). Throws InvalidInputError on an empty sequence.
double perplexity(const TokenLogProbs& lp);

// Ratio of cross-agent perplexity gaps, consensus over initial; < 1 means the
// agents moved closer in probability space. A baseline gap below 1e-9 throws
// DegenerateBaselineError (the topic is excluded, not scored).
double ppl_acceptance(const PplPair& initial, const PplPair& consensus);

// Fraction of ratios strictly below 1.
double acceptance_score(const std::vector<double>& ratios);

// Fraction of the 10 Schwartz dimensions with unchanged stance.
double value_self_consistency(const ValueVector& v0, const ValueVector& vstar);

// The six printed VSM13 linear formulas, e.g. PDI = 35(m07-m02) + 25(m20-m23) + C.
HofstedeScores hofstede_scores(const VsmMeans& m, const HofstedeConstants& c = {});

// --- Fairness geometry ------------------------------------------------------

struct FairnessRecord {
  double d_a = 0.0;  // cosine distance (1 - cos) to culture A's anchor
  double d_b = 0.0;
  std::optional<std::array<double, 2>> pca_xy;  // absent when PCA unavailable
};

struct FairnessSummary {
  double mean_abs_gap = 0.0;               // mean |d_a - d_b|
  double mean_distance_to_diagonal = 0.0;  // mean |d_a - d_b| / sqrt(2)
};

struct FairnessProjection {
  std::vector<FairnessRecord> records;  // one per consensus embedding
  FairnessSummary summary;
};

// Distances of each consensus point to the two cultures' initial-stance
// anchors, plus the 2-component PCA projection of the point set
// (mean-centered, components by descending eigenvalue, each component's sign
// fixed so its first non-negligible coordinate is non-negative). With fewer
// than 2 points the distances are still returned and pca_xy stays empty.
FairnessProjection fairness_projection(const std::vector<Embedding>& consensus_points,
                                       const Embedding& anchor_a,
                                       const Embedding& anchor_b);

}  // namespace consensus

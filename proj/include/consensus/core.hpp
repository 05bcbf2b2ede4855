#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "consensus/embedding.hpp"
#include "consensus/errors.hpp"

namespace consensus {

struct CultureId {
  std::string id;            // short stable token, e.g. "english_speaking"
  std::string display_name;  // e.g. "English-Speaking"

  void validate() const;  // id non-empty, no whitespace
};

// A cultural claim triple; the pure-strategy atom of the meta-game.
struct Guideline {
  std::string culture;  // owning CultureId::id
  int ordinal = 0;      // position within that culture's pool, 0-based
  std::string content;
  std::string reason;
  std::string description;
  int origin_round = 0;  // 0 for initial guidelines, else the round that admitted it

  // Unique within a game: "<culture>#<ordinal>".
  std::string gid() const;
  // Text fed to the embedder: "content. reason. description."
  std::string embedding_text() const;
  void validate() const;  // content non-empty, ordinal/origin_round >= 0
};

// A mixed strategy: probability vector over one culture's guidelines.
struct WeightDistribution {
  std::vector<std::string> gids;  // parallel to weights, distinct
  std::vector<double> weights;    // each >= 0, sum 1 +/- 1e-9

  std::size_t size() const { return weights.size(); }
  static WeightDistribution uniform_over(const std::vector<Guideline>& pool);
  void validate() const;
};

struct UtilityConfig {
  // Defaults are the 5:5:2 mix, pre-normalized so utilities are comparable
  // across configurations. Any non-negative triple is accepted; normalized()
  // rescales to sum 1 without changing argmax behavior.
  double alpha = 5.0 / 12.0;      // weight of the consistency term
  double beta = 5.0 / 12.0;       // weight of the acceptance term
  double gamma_nov = 2.0 / 12.0;  // weight of the novelty term
  double epsilon = 0.0;           // minimum utility gain to admit a new guideline

  UtilityConfig normalized() const;
  void validate() const;  // all >= 0, alpha+beta+gamma_nov > 0, epsilon >= 0
};

// Per-player payoff tables over joint guideline indices (rows: culture A,
// cols: culture B). Entries are exact Eq.-1 utilities with the acceptance
// term replaced by the raw pairwise similarity, so that the expectation of a
// row (column) under the opponent's weights reproduces the full utility.
struct UtilityMatrix {
  std::vector<std::string> rows;  // gids of culture A
  std::vector<std::string> cols;  // gids of culture B
  std::vector<std::vector<double>> payoff_a;  // |rows| x |cols|
  std::vector<std::vector<double>> payoff_b;  // |rows| x |cols|

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return cols.size(); }
  void validate() const;  // shapes consistent, entries finite
};

// One culture's strategy pool plus everything utility evaluation needs.
struct CulturePool {
  std::vector<Guideline> guidelines;
  std::vector<Embedding> embeddings;  // parallel to guidelines, unit norm
  Embedding anchor;                   // the culture's initial-stance embedding

  void validate() const;
};

// --- Eq.-1 terms -----------------------------------------------------------

// Cosine similarity of a candidate to the culture's initial anchor.
double consistency(const Embedding& candidate, const Embedding& anchor);

// Expected similarity to the opponent's strategy: sum_k w_k * cos(c, opp_k).
double acceptance(const Embedding& candidate,
                  const std::vector<Embedding>& opponent_embeddings,
                  const WeightDistribution& opponent_weights);

// 1 - max over history similarities; an empty history scores 1.0 (a first
// proposal is maximally novel).
double novelty(const Embedding& candidate, const std::vector<Embedding>& own_history);

// alpha*consistency + beta*acceptance + gamma*novelty. cfg must be normalized.
double utility(const Embedding& candidate, const Embedding& anchor,
               const std::vector<Embedding>& own_history,
               const std::vector<Embedding>& opponent_embeddings,
               const WeightDistribution& opponent_weights, const UtilityConfig& cfg);

// --- Meta-game matrix ------------------------------------------------------

// The novelty history of a guideline is every own guideline with a strictly
// earlier origin_round; this freezes each entry at admission time, so matrix
// extension never changes existing values.
std::vector<Embedding> novelty_history(const CulturePool& pool, int origin_round);

UtilityMatrix build_utility_matrix(const CulturePool& a, const CulturePool& b,
                                   const UtilityConfig& cfg);

// Append the payoff row for a's newest guideline / column for b's newest.
// Only new entries are computed; existing entries are untouched.
void extend_matrix_with_row(UtilityMatrix& m, const CulturePool& a, const CulturePool& b,
                            const UtilityConfig& cfg);
void extend_matrix_with_col(UtilityMatrix& m, const CulturePool& a, const CulturePool& b,
                            const UtilityConfig& cfg);

}  // namespace consensus

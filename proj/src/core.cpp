#include "consensus/core.hpp"

#include <cctype>
#include <cmath>

namespace consensus {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidInputError(what);
}

// Scalar Eq.-1 combination; cfg must already be normalized.
double combine(double consistency_term, double acceptance_term, double novelty_term,
               const UtilityConfig& cfg) {
  return cfg.alpha * consistency_term + cfg.beta * acceptance_term + cfg.gamma_nov * novelty_term;
}

}  // namespace

void CultureId::validate() const {
  require(!id.empty(), "culture id must be non-empty");
  for (char c : id) {
    require(!std::isspace(static_cast<unsigned char>(c)), "culture id must not contain whitespace");
  }
}

std::string Guideline::gid() const { return culture + "#" + std::to_string(ordinal); }

std::string Guideline::embedding_text() const {
  return content + ". " + reason + ". " + description + ".";
}

void Guideline::validate() const {
  require(!content.empty(), "guideline content must be non-empty");
  require(ordinal >= 0, "guideline ordinal must be non-negative");
  require(origin_round >= 0, "guideline origin_round must be non-negative");
}

WeightDistribution WeightDistribution::uniform_over(const std::vector<Guideline>& pool) {
  require(!pool.empty(), "cannot build a distribution over an empty pool");
  WeightDistribution w;
  w.gids.reserve(pool.size());
  w.weights.assign(pool.size(), 1.0 / static_cast<double>(pool.size()));
  for (const auto& g : pool) w.gids.push_back(g.gid());
  return w;
}

void WeightDistribution::validate() const {
  require(!weights.empty(), "weight distribution must be non-empty");
  require(gids.size() == weights.size(), "weights and gids must be parallel");
  double sum = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, "weights must be finite and non-negative");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "weights must sum to 1 within 1e-9");
  for (std::size_t i = 0; i < gids.size(); ++i) {
    for (std::size_t j = i + 1; j < gids.size(); ++j) {
      require(gids[i] != gids[j], "weight distribution gids must be distinct");
    }
  }
}

UtilityConfig UtilityConfig::normalized() const {
  validate();
  double total = alpha + beta + gamma_nov;
  UtilityConfig out = *this;
  out.alpha = alpha / total;
  out.beta = beta / total;
  out.gamma_nov = gamma_nov / total;
  return out;
}

void UtilityConfig::validate() const {
  require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be finite and >= 0");
  require(std::isfinite(beta) && beta >= 0.0, "beta must be finite and >= 0");
  require(std::isfinite(gamma_nov) && gamma_nov >= 0.0, "gamma_nov must be finite and >= 0");
  require(alpha + beta + gamma_nov > 0.0, "utility weights must not all be zero");
  require(std::isfinite(epsilon) && epsilon >= 0.0, "epsilon must be finite and >= 0");
}

void UtilityMatrix::validate() const {
  require(payoff_a.size() == rows.size() && payoff_b.size() == rows.size(),
          "payoff row count must match row gids");
  for (const auto& m : {&payoff_a, &payoff_b}) {
    for (const auto& row : *m) {
      require(row.size() == cols.size(), "payoff column count must match col gids");
      for (double v : row) require(std::isfinite(v), "payoff entries must be finite");
    }
  }
}

void CulturePool::validate() const {
  require(!guidelines.empty(), "culture pool must hold at least one guideline");
  require(embeddings.size() == guidelines.size(), "pool embeddings must parallel guidelines");
  require(!anchor.empty(), "culture pool requires an anchor embedding");
  for (const auto& g : guidelines) g.validate();
  for (const auto& e : embeddings) {
    require(e.size() == anchor.size(), "pool embeddings must share the anchor dimension");
  }
}

// --- Eq.-1 terms -------------------------------------------------------------

double consistency(const Embedding& candidate, const Embedding& anchor) {
  return cosine_similarity(candidate, anchor);
}

double acceptance(const Embedding& candidate, const std::vector<Embedding>& opponent_embeddings,
                  const WeightDistribution& opponent_weights) {
  opponent_weights.validate();
  require(opponent_embeddings.size() == opponent_weights.size(),
          "opponent weights must index exactly the opponent embeddings");
  double acc = 0.0;
  for (std::size_t k = 0; k < opponent_embeddings.size(); ++k) {
    acc += opponent_weights.weights[k] * cosine_similarity(candidate, opponent_embeddings[k]);
  }
  return acc;
}

double novelty(const Embedding& candidate, const std::vector<Embedding>& own_history) {
  if (own_history.empty()) return 1.0;  // a first proposal is maximally novel
  double max_sim = -1.0;
  for (const auto& h : own_history) {
    double s = cosine_similarity(candidate, h);
    if (s > max_sim) max_sim = s;
  }
  return 1.0 - max_sim;
}

double utility(const Embedding& candidate, const Embedding& anchor,
               const std::vector<Embedding>& own_history,
               const std::vector<Embedding>& opponent_embeddings,
               const WeightDistribution& opponent_weights, const UtilityConfig& cfg) {
  cfg.validate();
  require(std::abs(cfg.alpha + cfg.beta + cfg.gamma_nov - 1.0) <= 1e-9,
          "utility requires a normalized UtilityConfig");
  return combine(consistency(candidate, anchor),
                 acceptance(candidate, opponent_embeddings, opponent_weights),
                 novelty(candidate, own_history), cfg);
}

// --- Meta-game matrix --------------------------------------------------------

std::vector<Embedding> novelty_history(const CulturePool& pool, int origin_round) {
  std::vector<Embedding> history;
  for (std::size_t i = 0; i < pool.guidelines.size(); ++i) {
    if (pool.guidelines[i].origin_round < origin_round) history.push_back(pool.embeddings[i]);
  }
  return history;
}

namespace {

// alpha*Consistency + gamma*Novelty of pool guideline i — the row-player part
// of an entry, constant along that guideline's row (or column).
double own_terms(const CulturePool& pool, std::size_t i, const UtilityConfig& cfg) {
  double cons = consistency(pool.embeddings[i], pool.anchor);
  double nov = novelty(pool.embeddings[i], novelty_history(pool, pool.guidelines[i].origin_round));
  return cfg.alpha * cons + cfg.gamma_nov * nov;
}

}  // namespace

UtilityMatrix build_utility_matrix(const CulturePool& a, const CulturePool& b,
                                   const UtilityConfig& raw_cfg) {
  a.validate();
  b.validate();
  UtilityConfig cfg = raw_cfg.normalized();

  UtilityMatrix m;
  m.rows.reserve(a.guidelines.size());
  m.cols.reserve(b.guidelines.size());
  for (const auto& g : a.guidelines) m.rows.push_back(g.gid());
  for (const auto& g : b.guidelines) m.cols.push_back(g.gid());

  std::vector<double> own_a(a.guidelines.size()), own_b(b.guidelines.size());
  for (std::size_t j = 0; j < a.guidelines.size(); ++j) own_a[j] = own_terms(a, j, cfg);
  for (std::size_t k = 0; k < b.guidelines.size(); ++k) own_b[k] = own_terms(b, k, cfg);

  m.payoff_a.assign(a.guidelines.size(), std::vector<double>(b.guidelines.size(), 0.0));
  m.payoff_b.assign(a.guidelines.size(), std::vector<double>(b.guidelines.size(), 0.0));
  for (std::size_t j = 0; j < a.guidelines.size(); ++j) {
    for (std::size_t k = 0; k < b.guidelines.size(); ++k) {
      double sim = cosine_similarity(a.embeddings[j], b.embeddings[k]);
      m.payoff_a[j][k] = own_a[j] + cfg.beta * sim;
      m.payoff_b[j][k] = own_b[k] + cfg.beta * sim;
    }
  }
  return m;
}

void extend_matrix_with_row(UtilityMatrix& m, const CulturePool& a, const CulturePool& b,
                            const UtilityConfig& raw_cfg) {
  a.validate();
  b.validate();
  require(a.guidelines.size() == m.rows.size() + 1,
          "row extension expects exactly one new guideline in pool a");
  require(b.guidelines.size() == m.cols.size(), "row extension must not change pool b");
  UtilityConfig cfg = raw_cfg.normalized();

  std::size_t j = a.guidelines.size() - 1;
  double own_a = own_terms(a, j, cfg);
  std::vector<double> row_a(m.cols.size()), row_b(m.cols.size());
  for (std::size_t k = 0; k < m.cols.size(); ++k) {
    double sim = cosine_similarity(a.embeddings[j], b.embeddings[k]);
    row_a[k] = own_a + cfg.beta * sim;
    row_b[k] = own_terms(b, k, cfg) + cfg.beta * sim;
  }
  m.rows.push_back(a.guidelines[j].gid());
  m.payoff_a.push_back(std::move(row_a));
  m.payoff_b.push_back(std::move(row_b));
}

void extend_matrix_with_col(UtilityMatrix& m, const CulturePool& a, const CulturePool& b,
                            const UtilityConfig& raw_cfg) {
  a.validate();
  b.validate();
  require(b.guidelines.size() == m.cols.size() + 1,
          "column extension expects exactly one new guideline in pool b");
  require(a.guidelines.size() == m.rows.size(), "column extension must not change pool a");
  UtilityConfig cfg = raw_cfg.normalized();

  std::size_t k = b.guidelines.size() - 1;
  double own_b = own_terms(b, k, cfg);
  for (std::size_t j = 0; j < m.rows.size(); ++j) {
    double sim = cosine_similarity(a.embeddings[j], b.embeddings[k]);
    m.payoff_a[j].push_back(own_terms(a, j, cfg) + cfg.beta * sim);
    m.payoff_b[j].push_back(own_b + cfg.beta * sim);
  }
  m.cols.push_back(b.guidelines[k].gid());
}

}  // namespace consensus

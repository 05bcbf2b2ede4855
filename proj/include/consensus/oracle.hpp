#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "consensus/core.hpp"
#include "consensus/providers.hpp"
#include "consensus/verbalizer.hpp"

namespace consensus {

enum class CandidateMode { adversarial, complementary, innovative };

const char* to_string(CandidateMode mode);

struct Candidate {
  CandidateMode mode = CandidateMode::adversarial;
  std::string content;
  std::string reason;
  std::string description;
};

struct CandidateBatch {
  std::vector<Candidate> candidates;    // at least one after a successful generate
  std::vector<std::string> warnings;    // one entry per dropped unparseable block
};

struct BestResponse {
  Guideline guideline;
  double expected_utility = 0.0;
  // Gain over the best existing own guideline's expected utility under the
  // opponent's current weights; a proposal is admitted when delta_u >= epsilon.
  double delta_u = 0.0;
  std::size_t batch_index = 0;
};

struct OracleConfig {
  int per_mode_count = 2;  // candidates requested from each generation mode

  void validate() const;
};

// Prompt text assets with {slot} placeholders; see assets/prompts/.
struct OraclePrompts {
  std::string negotiation_system;   // slots: {culture}, {topic}
  std::string analysis_user;        // slots: {opponent_culture}, {opponent_position}
  std::string generation_user;      // slots: {analysis}, {mode}, {mode_instruction}, {count}
  std::string mode_adversarial;
  std::string mode_complementary;
  std::string mode_innovative;

  static OraclePrompts from_assets();  // reads assets/prompts/*
};

// Wire format for machine-readable claims inside chat responses:
//   <<<CANDIDATE
//   CONTENT: ...
//   REASON: ...
//   DESCRIPTION: ...
//   >>>
// Blocks missing any field are dropped and reported through warnings.
std::vector<Candidate> parse_candidates(const std::string& text, CandidateMode mode,
                                        std::vector<std::string>& warnings);

// Everything the oracle needs to know about one side of the game.
struct OracleContext {
  std::string topic;
  CultureId own_culture;
  CultureId opponent_culture;
  const CulturePool* own_pool = nullptr;
  const CulturePool* opponent_pool = nullptr;
  const WeightDistribution* own_weights = nullptr;       // current smoothed
  const WeightDistribution* opponent_weights = nullptr;  // current smoothed
  std::optional<WeightDistribution> prev_opponent_weights;
  // Expected utilities of existing own guidelines under opponent_weights
  // (matrix row/column expectations), for the delta_u baseline.
  std::vector<double> incumbent_utilities;
  int round = 1;            // 1-based round being played
  std::string tag_prefix;   // "<culture>/round<r>" for provider routing
};

// Asks the chat provider for a weakness/gap analysis of the opponent's
// current position; the prompt embeds the verbalizer rendering of the
// opponent's weights verbatim.
std::string analyze_opponent(ChatProvider& chat, const OraclePrompts& prompts,
                             const OracleContext& ctx);

// One chat request per mode with mode-specific instructions; unparseable
// blocks are dropped with warnings; throws OracleError only when every mode
// yields zero candidates.
CandidateBatch generate_candidates(ChatProvider& chat, const OraclePrompts& prompts,
                                   const OracleContext& ctx, const std::string& analysis,
                                   const OracleConfig& cfg);

// Embeds every candidate, scores expected utility under the opponent's
// current weights via the Eq.-1 terms, and returns the maximizer (ties break
// toward the lowest batch index). delta_u is measured against the incumbent
// best expected utility from ctx.incumbent_utilities.
BestResponse select_best_response(const CandidateBatch& batch, const OracleContext& ctx,
                                  const UtilityConfig& cfg, EmbeddingProvider& embedder);

}  // namespace consensus

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "consensus/core.hpp"
#include "consensus/oracle.hpp"
#include "consensus/providers.hpp"
#include "consensus/solver.hpp"
#include "consensus/verbalizer.hpp"

namespace consensus {

enum class GameStatus { initializing, negotiating, converged, max_rounds_reached };

const char* to_string(GameStatus s);

struct GameConfig {
  UtilityConfig utility;
  SolverConfig solver;
  OracleConfig oracle;
  int max_rounds = 8;
  int initial_guidelines = 1;  // k initial guidelines per culture

  void validate() const;
};

struct CultureState {
  CultureId culture;
  CulturePool pool;
  WeightDistribution weights;  // current smoothed weights over pool
  std::string initial_response;
  std::string final_response;
};

struct GameState {
  std::string topic;
  CultureState a;
  CultureState b;
  UtilityMatrix matrix;
  int round = 0;  // rounds completed
  GameStatus status = GameStatus::initializing;

  // FNV-1a over the canonical serialization; equal digests after a failed
  // round prove rollback left no partial effects.
  std::uint64_t digest() const;
};

// --- Transcript -------------------------------------------------------------

inline constexpr int kTranscriptSchemaVersion = 1;

struct ProposalRecord {
  Guideline guideline;
  double expected_utility = 0.0;
  double delta_u = 0.0;
  bool accepted = false;  // true iff delta_u >= epsilon
  std::string claim_speech;  // stage-2 speech; empty when rejected
  std::vector<std::string> warnings;  // dropped candidate diagnostics
};

struct CultureRoundRecord {
  std::string culture;                 // CultureId::id
  WeightDistribution interim_weights;  // smoothed weights spoken this round
  std::string position_speech;         // stage 1
  std::string analysis;
  ProposalRecord proposal;
};

struct RoundRecord {
  int round = 0;  // 1-based
  std::string solver_status;        // "converged" | "max_iters_reached"
  double solver_exploitability = 0.0;  // of the raw (pre-smoothing) pair
  CultureRoundRecord a;
  CultureRoundRecord b;
};

struct NegotiationTranscript {
  int schema_version = kTranscriptSchemaVersion;
  std::string topic;
  CultureId culture_a;
  CultureId culture_b;
  std::string initial_response_a;
  std::string initial_response_b;
  std::vector<Guideline> initial_guidelines_a;
  std::vector<Guideline> initial_guidelines_b;
  std::vector<RoundRecord> rounds;  // contiguous from 1
  WeightDistribution final_weights_a;
  WeightDistribution final_weights_b;
  double final_exploitability = 0.0;
  std::string final_response_a;
  std::string final_response_b;
  std::string status;  // terminal GameStatus name
};

// Canonical JSON (schema-versioned, keys sorted, 2-space indent, trailing
// newline); byte-identical across runs for identical transcripts.
std::string to_json_string(const NegotiationTranscript& t);
NegotiationTranscript transcript_from_json(const std::string& json_text);

// --- Game driver ------------------------------------------------------------

struct GameDeps {
  EmbeddingProvider* embedder = nullptr;
  ChatProvider* chat = nullptr;
  OraclePrompts prompts;
  SpeechTemplates templates;
};

struct Game {
  GameConfig config;
  GameState state;
  NegotiationTranscript transcript;
};

// Phase 1: record initial free-text responses, collect (or elicit via one
// chat call per culture) k initial guidelines, embed everything, build the
// initial matrix, set uniform weights. Throws with no game constructed on
// provider/embedding failure.
Game initialize_game(const std::string& topic, const CultureId& culture_a,
                     const CultureId& culture_b,
                     const std::vector<Guideline>& initial_a,  // empty => elicit
                     const std::vector<Guideline>& initial_b,  // empty => elicit
                     const GameConfig& cfg, const GameDeps& deps);

// Phase 2, one round: solve -> smooth -> stage-1 speeches -> per-culture
// analyze/generate/select -> admit accepted proposals (A's matrix extension
// before B's) with stage-2 claim speeches -> advance the round counter.
// Returns the successor game; the input is untouched, so a throw from any
// step leaves the caller's game exactly at round start.
Game run_round(const Game& game, const GameDeps& deps);

// Phase 2+3: rounds until both cultures reject in the same round (converged)
// or max_rounds is reached; a failed round is retried once before the error
// propagates. Afterwards elicits temperature-0 final consensus responses and
// finalizes the transcript.
Game run_to_consensus(Game game, const GameDeps& deps);

}  // namespace consensus

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "consensus/errors.hpp"
#include "consensus/orchestrator.hpp"

namespace consensus {

// The closed category set of the negotiation-topic dataset.
inline constexpr std::array<const char*, 6> kTopicCategories = {
    "Gender and Family Roles",
    "Religion and Secularism",
    "Politics and Governance",
    "Law and Ethics",
    "Social Norms and Modernization",
    "International Relations and Security",
};

inline constexpr std::array<const char*, 2> kTopicSources = {"GAS", "WVS"};

struct Topic {
  std::string id;
  std::string question;  // must start with "Should" (screening contract)
  std::string category;  // one of kTopicCategories
  std::string source;    // "GAS" | "WVS"
};

struct TopicDiagnostic {
  std::size_t record_index = 0;  // position in the input array
  std::string id;                // record id when present
  std::string message;
};

struct TopicLoadResult {
  std::vector<Topic> topics;
  std::vector<TopicDiagnostic> rejected;
};

// Loads a JSON array of {id, question, category, source}. Structurally
// invalid files throw FormatError with line context; an empty array throws
// InvalidInputError; per-record contract violations land in `rejected`.
TopicLoadResult load_topics(const std::string& path);

struct AllocationRequest {
  std::vector<double> shares;  // probability vector: >= 0, sums to 1 +/- 1e-9
  long long target = 0;        // K >= 0

  void validate() const;
};

// Proportional apportionment: c_i = round-half-away-from-zero(shares_i * K),
// then largest-remainder repair ordered by the signed allocation gap
// shares_i*K - c_i (add to the most under-allocated first / remove from the
// most over-allocated first, ties by lowest index) until the counts sum to K.
// Guarantees sum == K, every count >= 0 and |c_i - shares_i*K| <= 1.
std::vector<long long> allocate_samples(const AllocationRequest& req);

struct PreferencePair {
  std::string prompt;    // the topic question
  std::string chosen;    // final consensus response
  std::string rejected;  // initial response
};

// Two pairs per transcript (one per culture). Throws TranscriptError when
// initial or final responses are missing.
std::vector<PreferencePair> export_preference_pairs(const NegotiationTranscript& t);

// JSONL round-trip: one {"prompt","chosen","rejected"} object per line.
std::string preference_pairs_to_jsonl(const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> preference_pairs_from_jsonl(const std::string& jsonl);

}  // namespace consensus

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "consensus/core.hpp"

namespace consensus {

// Speech templates with named slots. The canonical copies live under
// assets/templates/; builtin() returns identical strings so the renderer
// works without touching the filesystem, and a test pins the two in sync.
struct SpeechTemplates {
  // slots: {dispersion}, {guideline_lines}
  std::string position;
  // slots: {rank}, {content}, {weight}, {intensity}, {change}
  std::string guideline_line;
  // slots: {content}, {reason}, {description}
  std::string claim;

  static SpeechTemplates builtin();
  static SpeechTemplates from_directory(const std::string& dir);
};

// Five-level weight label over [0,1]:
//   [0,0.12) extremely low | [0.12,0.25) low | [0.25,0.40) moderate |
//   [0.40,0.60) high | [0.60,1] extremely high
std::string intensity_label(double weight);

// Five-level |delta| label with a direction word for non-zero change:
//   <0.01 "no change" | <0.05 slight | <0.10 moderate | <0.20 notable |
//   >=0.20 significant, e.g. "significantly decreased".
// An absent previous weight means the guideline is new this round.
std::string change_label(std::optional<double> prev_weight, double new_weight);

// Distribution summary: "highly concentrated" when max >= 0.6, "relatively
// balanced" when max - min < 0.25, else "mixed emphasis". The four-weight
// profile 0.45/0.30/0.15/0.10 is special-cased to "relatively balanced" to
// match the published sample speech that our general rule cannot produce.
std::string dispersion_phrase(const std::vector<double>& weights);

// Deterministic stage-1 position statement: guidelines ranked by weight
// descending (ties by pool order), one line per guideline carrying its
// content verbatim plus intensity and change labels, topped by the
// dispersion summary. prev_weights may be absent (first spoken round); a gid
// missing from prev_weights is labelled as newly proposed.
std::string render_position_speech(const std::vector<Guideline>& guidelines,
                                   const WeightDistribution& new_weights,
                                   const std::optional<WeightDistribution>& prev_weights,
                                   const SpeechTemplates& templates = SpeechTemplates::builtin());

// Deterministic stage-2 claim speech for a newly admitted guideline.
std::string render_claim_speech(const Guideline& g,
                                const SpeechTemplates& templates = SpeechTemplates::builtin());

}  // namespace consensus

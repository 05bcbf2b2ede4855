#include "consensus/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "consensus/io.hpp"

namespace consensus {

namespace {

bool in_set(const std::string& value, const auto& set) {
  return std::any_of(set.begin(), set.end(),
                     [&](const char* s) { return value == s; });
}

// 1-based line number of a byte offset, for parse-error context.
std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

std::string string_or_empty(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return "";
  return it->get<std::string>();
}

}  // namespace

TopicLoadResult load_topics(const std::string& path) {
  const std::string text = read_file(path);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("topics file '" + path + "' is not valid JSON (line " +
                      std::to_string(line_of_offset(text, e.byte)) + "): " + e.what());
  }
  if (!doc.is_array()) {
    throw FormatError("topics file '" + path + "' must be a JSON array of records");
  }
  if (doc.empty()) {
    throw InvalidInputError("topics file '" + path + "' contains no records");
  }

  TopicLoadResult result;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    std::string id = rec.is_object() ? string_or_empty(rec, "id") : "";
    auto reject = [&](const std::string& message) {
      result.rejected.push_back({i, id, message});
    };

    if (!rec.is_object()) {
      reject("record is not a JSON object");
      continue;
    }
    Topic t;
    t.id = id;
    t.question = string_or_empty(rec, "question");
    t.category = string_or_empty(rec, "category");
    t.source = string_or_empty(rec, "source");
    if (t.id.empty()) {
      reject("missing or non-string 'id'");
      continue;
    }
    if (t.question.empty()) {
      reject("missing or non-string 'question'");
      continue;
    }
    if (t.question.rfind("Should", 0) != 0) {
      reject("question must start with \"Should\" (screening contract)");
      continue;
    }
    if (!in_set(t.category, kTopicCategories)) {
      reject("unknown category '" + t.category + "'");
      continue;
    }
    if (!in_set(t.source, kTopicSources)) {
      reject("unknown source '" + t.source + "' (expected GAS or WVS)");
      continue;
    }
    result.topics.push_back(std::move(t));
  }
  return result;
}

void AllocationRequest::validate() const {
  if (shares.empty()) throw InvalidInputError("allocation shares must be non-empty");
  double sum = 0.0;
  for (double s : shares) {
    if (!std::isfinite(s) || s < 0.0) {
      throw InvalidInputError("allocation shares must be finite and >= 0");
    }
    sum += s;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidInputError("allocation shares must sum to 1");
  }
  if (target < 0) throw InvalidInputError("allocation target must be >= 0");
}

std::vector<long long> allocate_samples(const AllocationRequest& req) {
  req.validate();
  const std::size_t n = req.shares.size();
  const double k = static_cast<double>(req.target);

  std::vector<long long> counts(n);
  std::vector<double> gap(n);  // under-allocation after rounding
  long long total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double exact = req.shares[i] * k;
    // Half-away-from-zero; shares are non-negative so this is floor(x + 0.5).
    counts[i] = static_cast<long long>(std::floor(exact + 0.5));
    gap[i] = exact - static_cast<double>(counts[i]);
    total += counts[i];
  }

  // Largest-remainder repair on the signed gap keeps every count within 1 of
  // its exact share even when several entries round the same way.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  while (total != req.target) {
    if (total < req.target) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return gap[a] > gap[b]; });
      for (std::size_t idx : order) {
        counts[idx] += 1;
        gap[idx] -= 1.0;
        ++total;
        if (total == req.target) break;
      }
    } else {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return gap[a] < gap[b]; });
      for (std::size_t idx : order) {
        if (counts[idx] == 0) continue;  // counts never go negative
        counts[idx] -= 1;
        gap[idx] += 1.0;
        --total;
        if (total == req.target) break;
      }
    }
  }
  return counts;
}

std::vector<PreferencePair> export_preference_pairs(const NegotiationTranscript& t) {
  if (t.topic.empty()) throw TranscriptError("transcript has no topic");
  if (t.initial_response_a.empty() || t.initial_response_b.empty()) {
    throw TranscriptError("transcript is missing initial responses");
  }
  if (t.final_response_a.empty() || t.final_response_b.empty()) {
    throw TranscriptError("transcript is missing final consensus responses");
  }
  return {{t.topic, t.final_response_a, t.initial_response_a},
          {t.topic, t.final_response_b, t.initial_response_b}};
}

std::string preference_pairs_to_jsonl(const std::vector<PreferencePair>& pairs) {
  std::ostringstream out;
  for (const auto& p : pairs) {
    nlohmann::json j = {{"prompt", p.prompt}, {"chosen", p.chosen}, {"rejected", p.rejected}};
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<PreferencePair> preference_pairs_from_jsonl(const std::string& jsonl) {
  std::vector<PreferencePair> pairs;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("prompt") || !j.contains("chosen") ||
        !j.contains("rejected")) {
      throw FormatError("preference-pair line " + std::to_string(line_no) +
                        " is not a {prompt, chosen, rejected} object");
    }
    pairs.push_back({j["prompt"].get<std::string>(), j["chosen"].get<std::string>(),
                     j["rejected"].get<std::string>()});
  }
  return pairs;
}

}  // namespace consensus

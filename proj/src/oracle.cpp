#include "consensus/oracle.hpp"

#include <algorithm>

#include "consensus/io.hpp"

namespace consensus {

namespace {

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

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const std::string& culture_name(const CultureId& c) {
  return c.display_name.empty() ? c.id : c.display_name;
}

void require_context(const OracleContext& ctx) {
  if (!ctx.own_pool || !ctx.opponent_pool || !ctx.own_weights || !ctx.opponent_weights) {
    throw InvalidInputError("oracle context is missing pool or weight references");
  }
  ctx.own_culture.validate();
  ctx.opponent_culture.validate();
  if (ctx.topic.empty()) throw InvalidInputError("oracle context has an empty topic");
  if (ctx.round < 1) throw InvalidInputError("oracle context round must be >= 1");
}

}  // namespace

const char* to_string(CandidateMode mode) {
  switch (mode) {
    case CandidateMode::adversarial: return "adversarial";
    case CandidateMode::complementary: return "complementary";
    case CandidateMode::innovative: return "innovative";
  }
  throw InvalidInputError("unknown candidate mode");
}

void OracleConfig::validate() const {
  if (per_mode_count < 1) throw InvalidInputError("per_mode_count must be >= 1");
}

OraclePrompts OraclePrompts::from_assets() {
  OraclePrompts p;
  p.negotiation_system = load_text_asset("prompts/negotiation_system.txt");
  p.analysis_user = load_text_asset("prompts/analysis_user.txt");
  p.generation_user = load_text_asset("prompts/generation_user.txt");
  p.mode_adversarial = load_text_asset("prompts/mode_adversarial.txt");
  p.mode_complementary = load_text_asset("prompts/mode_complementary.txt");
  p.mode_innovative = load_text_asset("prompts/mode_innovative.txt");
  return p;
}

std::vector<Candidate> parse_candidates(const std::string& text, CandidateMode mode,
                                        std::vector<std::string>& warnings) {
  static const std::string kOpen = "<<<CANDIDATE";
  static const std::string kClose = ">>>";

  std::vector<Candidate> out;
  std::size_t cursor = 0;
  int block_no = 0;
  while (true) {
    std::size_t open = text.find(kOpen, cursor);
    if (open == std::string::npos) break;
    ++block_no;
    std::size_t body_begin = open + kOpen.size();
    std::size_t close = text.find(kClose, body_begin);
    if (close == std::string::npos) {
      warnings.push_back("candidate block " + std::to_string(block_no) + " (" +
                         to_string(mode) + "): unterminated, dropped");
      break;
    }
    std::string body = text.substr(body_begin, close - body_begin);
    cursor = close + kClose.size();

    // A field's value is its line plus any following lines that start no
    // other field; multi-line values collapse to single spaces.
    Candidate c;
    c.mode = mode;
    std::string* active = nullptr;
    std::size_t line_begin = 0;
    while (line_begin <= body.size()) {
      std::size_t line_end = body.find('\n', line_begin);
      std::string line = body.substr(
          line_begin, line_end == std::string::npos ? std::string::npos : line_end - line_begin);
      std::string t = trim(line);
      if (t.rfind("CONTENT:", 0) == 0) {
        c.content = trim(t.substr(8));
        active = &c.content;
      } else if (t.rfind("REASON:", 0) == 0) {
        c.reason = trim(t.substr(7));
        active = &c.reason;
      } else if (t.rfind("DESCRIPTION:", 0) == 0) {
        c.description = trim(t.substr(12));
        active = &c.description;
      } else if (!t.empty() && active != nullptr) {
        if (!active->empty()) *active += " ";
        *active += t;
      }
      if (line_end == std::string::npos) break;
      line_begin = line_end + 1;
    }

    const char* missing = c.content.empty()      ? "CONTENT"
                          : c.reason.empty()      ? "REASON"
                          : c.description.empty() ? "DESCRIPTION"
                                                  : nullptr;
    if (missing != nullptr) {
      warnings.push_back("candidate block " + std::to_string(block_no) + " (" +
                         to_string(mode) + "): missing " + missing + ", dropped");
      continue;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string analyze_opponent(ChatProvider& chat, const OraclePrompts& prompts,
                             const OracleContext& ctx) {
  require_context(ctx);
  std::string opponent_position =
      render_position_speech(ctx.opponent_pool->guidelines, *ctx.opponent_weights,
                             ctx.prev_opponent_weights, SpeechTemplates::builtin());

  ChatRequest req;
  req.system_prompt = fill(prompts.negotiation_system,
                           {{"culture", culture_name(ctx.own_culture)}, {"topic", ctx.topic}});
  req.messages.push_back(
      {"user", fill(prompts.analysis_user,
                    {{"opponent_culture", culture_name(ctx.opponent_culture)},
                     {"opponent_position", opponent_position}})});
  req.temperature = 0.0;
  req.tag = ctx.tag_prefix + "/analyze";
  return chat.chat_complete(req);
}

CandidateBatch generate_candidates(ChatProvider& chat, const OraclePrompts& prompts,
                                   const OracleContext& ctx, const std::string& analysis,
                                   const OracleConfig& cfg) {
  require_context(ctx);
  cfg.validate();

  struct ModeSpec {
    CandidateMode mode;
    const std::string* instruction;
  };
  const ModeSpec modes[] = {{CandidateMode::adversarial, &prompts.mode_adversarial},
                            {CandidateMode::complementary, &prompts.mode_complementary},
                            {CandidateMode::innovative, &prompts.mode_innovative}};

  CandidateBatch batch;
  for (const auto& spec : modes) {
    ChatRequest req;
    req.system_prompt = fill(prompts.negotiation_system,
                             {{"culture", culture_name(ctx.own_culture)}, {"topic", ctx.topic}});
    req.messages.push_back(
        {"user", fill(prompts.generation_user,
                      {{"analysis", analysis},
                       {"mode", to_string(spec.mode)},
                       {"mode_instruction", *spec.instruction},
                       {"count", std::to_string(cfg.per_mode_count)}})});
    req.temperature = 0.0;
    req.tag = ctx.tag_prefix + "/generate/" + to_string(spec.mode);

    std::string reply = chat.chat_complete(req);
    auto parsed = parse_candidates(reply, spec.mode, batch.warnings);
    for (auto& c : parsed) batch.candidates.push_back(std::move(c));
  }

  if (batch.candidates.empty()) {
    throw OracleError("every generation mode produced zero parseable candidates");
  }
  return batch;
}

BestResponse select_best_response(const CandidateBatch& batch, const OracleContext& ctx,
                                  const UtilityConfig& cfg, EmbeddingProvider& embedder) {
  require_context(ctx);
  if (batch.candidates.empty()) {
    throw InvalidInputError("select_best_response: empty candidate batch");
  }
  if (ctx.incumbent_utilities.empty()) {
    throw InvalidInputError("select_best_response: missing incumbent utilities");
  }

  std::size_t best_index = 0;
  double best_utility = 0.0;
  for (std::size_t i = 0; i < batch.candidates.size(); ++i) {
    const Candidate& c = batch.candidates[i];
    Guideline g;
    g.culture = ctx.own_culture.id;
    g.content = c.content;
    g.reason = c.reason;
    g.description = c.description;
    Embedding emb = embedder.embed(g.embedding_text());
    // A fresh candidate's novelty history is the whole current own pool.
    double u = utility(emb, ctx.own_pool->anchor, ctx.own_pool->embeddings,
                       ctx.opponent_pool->embeddings, *ctx.opponent_weights, cfg);
    if (i == 0 || u > best_utility) {
      best_index = i;
      best_utility = u;
    }
  }

  double incumbent_best =
      *std::max_element(ctx.incumbent_utilities.begin(), ctx.incumbent_utilities.end());

  const Candidate& winner = batch.candidates[best_index];
  BestResponse br;
  br.guideline.culture = ctx.own_culture.id;
  br.guideline.ordinal = static_cast<int>(ctx.own_pool->guidelines.size());
  br.guideline.content = winner.content;
  br.guideline.reason = winner.reason;
  br.guideline.description = winner.description;
  br.guideline.origin_round = ctx.round;
  br.expected_utility = best_utility;
  br.delta_u = best_utility - incumbent_best;
  br.batch_index = best_index;
  return br;
}

}  // namespace consensus

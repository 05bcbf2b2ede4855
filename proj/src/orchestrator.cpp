#include "consensus/orchestrator.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

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

const std::string& culture_name(const CultureId& c) {
  return c.display_name.empty() ? c.id : c.display_name;
}

// Internal stage prompts. The negotiation system prompt is an asset because
// its voice defines the agents; these are fixed plumbing around it.
constexpr const char* kInitialResponsePrompt =
    "Topic: {topic}\n\nGive your culture's initial response to this topic in a short "
    "paragraph: state where you stand and why.";

constexpr const char* kElicitPrompt =
    "Topic: {topic}\n\nState your culture's opening position as exactly {count} "
    "guidelines, each in this exact wire format and nothing else:\n"
    "<<<CANDIDATE\nCONTENT: <one-sentence guideline>\nREASON: <why your culture holds "
    "it>\nDESCRIPTION: <what adopting it would look like>\n>>>";

constexpr const char* kFinalResponsePrompt =
    "The negotiation has concluded. Your final position:\n\n{position}\n\nProvide your "
    "culture's final consensus response to the topic in a short paragraph, honoring the "
    "negotiated weights.";

void require_deps(const GameDeps& deps) {
  if (deps.embedder == nullptr || deps.chat == nullptr) {
    throw InvalidInputError("game dependencies must provide an embedder and a chat provider");
  }
}

std::string chat_once(ChatProvider& chat, const OraclePrompts& prompts, const CultureId& culture,
                      const std::string& topic, const std::string& user_text,
                      const std::string& tag) {
  ChatRequest req;
  req.system_prompt =
      fill(prompts.negotiation_system, {{"culture", culture_name(culture)}, {"topic", topic}});
  req.messages.push_back({"user", user_text});
  req.temperature = 0.0;
  req.tag = tag;
  return chat.chat_complete(req);
}

Embedding embed_anchor(EmbeddingProvider& embedder, const std::vector<Guideline>& pool) {
  if (pool.size() == 1) return embedder.embed(pool[0].embedding_text());
  std::string joined;
  for (const auto& g : pool) {
    if (!joined.empty()) joined += " ";
    joined += g.embedding_text();
  }
  return embedder.embed(joined);
}

CultureState init_culture(const CultureId& culture, const std::string& topic,
                          std::vector<Guideline> initial, const GameConfig& cfg,
                          const GameDeps& deps, std::string* initial_response_out) {
  *initial_response_out =
      chat_once(*deps.chat, deps.prompts, culture, topic,
                fill(kInitialResponsePrompt, {{"topic", topic}}), culture.id + "/round0/initial");

  if (initial.empty()) {
    std::string reply = chat_once(
        *deps.chat, deps.prompts, culture, topic,
        fill(kElicitPrompt,
             {{"topic", topic}, {"count", std::to_string(cfg.initial_guidelines)}}),
        culture.id + "/round0/elicit");
    std::vector<std::string> warnings;
    auto parsed = parse_candidates(reply, CandidateMode::innovative, warnings);
    if (parsed.empty()) {
      throw OracleError("initial-guideline elicitation for '" + culture.id +
                        "' produced no parseable candidates");
    }
    std::size_t take = std::min<std::size_t>(parsed.size(), cfg.initial_guidelines);
    for (std::size_t i = 0; i < take; ++i) {
      Guideline g;
      g.content = parsed[i].content;
      g.reason = parsed[i].reason;
      g.description = parsed[i].description;
      initial.push_back(std::move(g));
    }
  }

  // Normalize ownership fields so gids are unique and round-tagged correctly
  // regardless of how the caller filled them in.
  for (std::size_t i = 0; i < initial.size(); ++i) {
    initial[i].culture = culture.id;
    initial[i].ordinal = static_cast<int>(i);
    initial[i].origin_round = 0;
    initial[i].validate();
  }

  CultureState cs;
  cs.culture = culture;
  cs.pool.guidelines = std::move(initial);
  std::vector<std::string> texts;
  texts.reserve(cs.pool.guidelines.size());
  for (const auto& g : cs.pool.guidelines) texts.push_back(g.embedding_text());
  cs.pool.embeddings = deps.embedder->embed_batch(texts);
  cs.pool.anchor = embed_anchor(*deps.embedder, cs.pool.guidelines);
  cs.pool.validate();
  cs.weights = WeightDistribution::uniform_over(cs.pool.guidelines);
  return cs;
}

// Smoothed weights padded with zero mass for guidelines admitted after the
// solve, so stored weights always index the full pool.
WeightDistribution pad_to_pool(const WeightDistribution& w, const CulturePool& pool) {
  WeightDistribution out = w;
  for (std::size_t i = out.size(); i < pool.guidelines.size(); ++i) {
    out.gids.push_back(pool.guidelines[i].gid());
    out.weights.push_back(0.0);
  }
  return out;
}

const char* to_string(SolverStatus s) {
  return s == SolverStatus::converged ? "converged" : "max_iters_reached";
}

std::vector<double> row_expectations(const std::vector<std::vector<double>>& payoff,
                                     const std::vector<double>& col_weights) {
  std::vector<double> out(payoff.size(), 0.0);
  for (std::size_t j = 0; j < payoff.size(); ++j) {
    for (std::size_t k = 0; k < col_weights.size(); ++k) {
      out[j] += payoff[j][k] * col_weights[k];
    }
  }
  return out;
}

std::vector<double> col_expectations(const std::vector<std::vector<double>>& payoff,
                                     const std::vector<double>& row_weights) {
  if (payoff.empty()) return {};
  std::vector<double> out(payoff[0].size(), 0.0);
  for (std::size_t j = 0; j < payoff.size(); ++j) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] += payoff[j][k] * row_weights[j];
    }
  }
  return out;
}

// --- digest helpers ----------------------------------------------------------

void feed(std::uint64_t& h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= 0x1f;
  h *= 1099511628211ull;
}

void feed(std::uint64_t& h, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  feed(h, std::string(buf));
}

void feed(std::uint64_t& h, const WeightDistribution& w) {
  for (const auto& g : w.gids) feed(h, g);
  for (double x : w.weights) feed(h, x);
}

void feed(std::uint64_t& h, const CulturePool& pool) {
  for (const auto& g : pool.guidelines) {
    feed(h, g.gid());
    feed(h, g.content);
    feed(h, g.reason);
    feed(h, g.description);
    feed(h, std::to_string(g.origin_round));
  }
  for (const auto& e : pool.embeddings) {
    for (double x : e) feed(h, x);
  }
  for (double x : pool.anchor) feed(h, x);
}

}  // namespace

const char* to_string(GameStatus s) {
  switch (s) {
    case GameStatus::initializing: return "initializing";
    case GameStatus::negotiating: return "negotiating";
    case GameStatus::converged: return "converged";
    case GameStatus::max_rounds_reached: return "max_rounds_reached";
  }
  throw InvalidInputError("unknown game status");
}

void GameConfig::validate() const {
  utility.validate();
  solver.validate();
  oracle.validate();
  if (max_rounds < 1) throw InvalidInputError("max_rounds must be >= 1");
  if (initial_guidelines < 1) throw InvalidInputError("initial_guidelines must be >= 1");
}

std::uint64_t GameState::digest() const {
  std::uint64_t h = 1469598103934665603ull;
  feed(h, topic);
  feed(h, a.culture.id);
  feed(h, b.culture.id);
  feed(h, a.pool);
  feed(h, b.pool);
  feed(h, a.weights);
  feed(h, b.weights);
  feed(h, a.initial_response);
  feed(h, b.initial_response);
  feed(h, a.final_response);
  feed(h, b.final_response);
  for (const auto& gid : matrix.rows) feed(h, gid);
  for (const auto& gid : matrix.cols) feed(h, gid);
  for (const auto& row : matrix.payoff_a) {
    for (double v : row) feed(h, v);
  }
  for (const auto& row : matrix.payoff_b) {
    for (double v : row) feed(h, v);
  }
  feed(h, std::to_string(round));
  feed(h, to_string(status));
  return h;
}

// --- transcript JSON ---------------------------------------------------------

namespace {

nlohmann::json to_json(const CultureId& c) {
  return {{"id", c.id}, {"display_name", c.display_name}};
}

nlohmann::json to_json(const Guideline& g) {
  return {{"culture", g.culture},       {"ordinal", g.ordinal},
          {"content", g.content},       {"reason", g.reason},
          {"description", g.description}, {"origin_round", g.origin_round}};
}

nlohmann::json to_json(const WeightDistribution& w) {
  return {{"gids", w.gids}, {"weights", w.weights}};
}

nlohmann::json to_json(const ProposalRecord& p) {
  return {{"guideline", to_json(p.guideline)},
          {"expected_utility", p.expected_utility},
          {"delta_u", p.delta_u},
          {"accepted", p.accepted},
          {"claim_speech", p.claim_speech},
          {"warnings", p.warnings}};
}

nlohmann::json to_json(const CultureRoundRecord& r) {
  return {{"culture", r.culture},
          {"interim_weights", to_json(r.interim_weights)},
          {"position_speech", r.position_speech},
          {"analysis", r.analysis},
          {"proposal", to_json(r.proposal)}};
}

nlohmann::json to_json(const RoundRecord& r) {
  return {{"round", r.round},
          {"solver_status", r.solver_status},
          {"solver_exploitability", r.solver_exploitability},
          {"a", to_json(r.a)},
          {"b", to_json(r.b)}};
}

const nlohmann::json& field(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw TranscriptError(std::string("transcript is missing field '") + key + "'");
  }
  return *it;
}

CultureId culture_from(const nlohmann::json& j) {
  CultureId c;
  c.id = field(j, "id").get<std::string>();
  c.display_name = field(j, "display_name").get<std::string>();
  return c;
}

Guideline guideline_from(const nlohmann::json& j) {
  Guideline g;
  g.culture = field(j, "culture").get<std::string>();
  g.ordinal = field(j, "ordinal").get<int>();
  g.content = field(j, "content").get<std::string>();
  g.reason = field(j, "reason").get<std::string>();
  g.description = field(j, "description").get<std::string>();
  g.origin_round = field(j, "origin_round").get<int>();
  return g;
}

WeightDistribution weights_from(const nlohmann::json& j) {
  WeightDistribution w;
  w.gids = field(j, "gids").get<std::vector<std::string>>();
  w.weights = field(j, "weights").get<std::vector<double>>();
  return w;
}

ProposalRecord proposal_from(const nlohmann::json& j) {
  ProposalRecord p;
  p.guideline = guideline_from(field(j, "guideline"));
  p.expected_utility = field(j, "expected_utility").get<double>();
  p.delta_u = field(j, "delta_u").get<double>();
  p.accepted = field(j, "accepted").get<bool>();
  p.claim_speech = field(j, "claim_speech").get<std::string>();
  p.warnings = field(j, "warnings").get<std::vector<std::string>>();
  return p;
}

CultureRoundRecord culture_round_from(const nlohmann::json& j) {
  CultureRoundRecord r;
  r.culture = field(j, "culture").get<std::string>();
  r.interim_weights = weights_from(field(j, "interim_weights"));
  r.position_speech = field(j, "position_speech").get<std::string>();
  r.analysis = field(j, "analysis").get<std::string>();
  r.proposal = proposal_from(field(j, "proposal"));
  return r;
}

}  // namespace

std::string to_json_string(const NegotiationTranscript& t) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : t.rounds) rounds.push_back(to_json(r));
  nlohmann::json ga = nlohmann::json::array();
  for (const auto& g : t.initial_guidelines_a) ga.push_back(to_json(g));
  nlohmann::json gb = nlohmann::json::array();
  for (const auto& g : t.initial_guidelines_b) gb.push_back(to_json(g));

  nlohmann::json doc = {{"schema_version", t.schema_version},
                        {"topic", t.topic},
                        {"culture_a", to_json(t.culture_a)},
                        {"culture_b", to_json(t.culture_b)},
                        {"initial_response_a", t.initial_response_a},
                        {"initial_response_b", t.initial_response_b},
                        {"initial_guidelines_a", std::move(ga)},
                        {"initial_guidelines_b", std::move(gb)},
                        {"rounds", std::move(rounds)},
                        {"final_weights_a", to_json(t.final_weights_a)},
                        {"final_weights_b", to_json(t.final_weights_b)},
                        {"final_exploitability", t.final_exploitability},
                        {"final_response_a", t.final_response_a},
                        {"final_response_b", t.final_response_b},
                        {"status", t.status}};
  return doc.dump(2) + "\n";
}

NegotiationTranscript transcript_from_json(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw TranscriptError("transcript text is not a JSON object");
  }
  int version = field(doc, "schema_version").get<int>();
  if (version != kTranscriptSchemaVersion) {
    throw TranscriptError("unsupported transcript schema version " + std::to_string(version));
  }

  NegotiationTranscript t;
  t.schema_version = version;
  t.topic = field(doc, "topic").get<std::string>();
  t.culture_a = culture_from(field(doc, "culture_a"));
  t.culture_b = culture_from(field(doc, "culture_b"));
  t.initial_response_a = field(doc, "initial_response_a").get<std::string>();
  t.initial_response_b = field(doc, "initial_response_b").get<std::string>();
  for (const auto& j : field(doc, "initial_guidelines_a")) {
    t.initial_guidelines_a.push_back(guideline_from(j));
  }
  for (const auto& j : field(doc, "initial_guidelines_b")) {
    t.initial_guidelines_b.push_back(guideline_from(j));
  }
  for (const auto& j : field(doc, "rounds")) {
    RoundRecord r;
    r.round = field(j, "round").get<int>();
    r.solver_status = field(j, "solver_status").get<std::string>();
    r.solver_exploitability = field(j, "solver_exploitability").get<double>();
    r.a = culture_round_from(field(j, "a"));
    r.b = culture_round_from(field(j, "b"));
    t.rounds.push_back(std::move(r));
  }
  t.final_weights_a = weights_from(field(doc, "final_weights_a"));
  t.final_weights_b = weights_from(field(doc, "final_weights_b"));
  t.final_exploitability = field(doc, "final_exploitability").get<double>();
  t.final_response_a = field(doc, "final_response_a").get<std::string>();
  t.final_response_b = field(doc, "final_response_b").get<std::string>();
  t.status = field(doc, "status").get<std::string>();
  return t;
}

// --- game driver -------------------------------------------------------------

Game initialize_game(const std::string& topic, const CultureId& culture_a,
                     const CultureId& culture_b, const std::vector<Guideline>& initial_a,
                     const std::vector<Guideline>& initial_b, const GameConfig& cfg,
                     const GameDeps& deps) {
  if (topic.empty()) throw InvalidInputError("topic must be non-empty");
  culture_a.validate();
  culture_b.validate();
  if (culture_a.id == culture_b.id) {
    throw InvalidInputError("the two cultures must have distinct ids");
  }
  cfg.validate();
  require_deps(deps);

  Game game;
  game.config = cfg;
  GameState& st = game.state;
  st.topic = topic;
  st.a = init_culture(culture_a, topic, initial_a, cfg, deps, &game.transcript.initial_response_a);
  st.b = init_culture(culture_b, topic, initial_b, cfg, deps, &game.transcript.initial_response_b);
  st.matrix = build_utility_matrix(st.a.pool, st.b.pool, cfg.utility);
  st.round = 0;
  st.status = GameStatus::negotiating;

  NegotiationTranscript& t = game.transcript;
  t.topic = topic;
  t.culture_a = culture_a;
  t.culture_b = culture_b;
  t.initial_guidelines_a = st.a.pool.guidelines;
  t.initial_guidelines_b = st.b.pool.guidelines;
  t.status = to_string(st.status);
  return game;
}

namespace {

struct OracleOutcome {
  std::string analysis;
  CandidateBatch batch;
  BestResponse selection;
  bool accepted = false;
};

OracleOutcome run_culture_oracle(const Game& game, const GameDeps& deps, bool for_a,
                                 const WeightDistribution& wa, const WeightDistribution& wb,
                                 int round) {
  const GameState& st = game.state;
  const CultureState& own = for_a ? st.a : st.b;
  const CultureState& opp = for_a ? st.b : st.a;

  OracleContext ctx;
  ctx.topic = st.topic;
  ctx.own_culture = own.culture;
  ctx.opponent_culture = opp.culture;
  ctx.own_pool = &own.pool;
  ctx.opponent_pool = &opp.pool;
  ctx.own_weights = for_a ? &wa : &wb;
  ctx.opponent_weights = for_a ? &wb : &wa;
  if (!game.transcript.rounds.empty()) {
    const RoundRecord& prev = game.transcript.rounds.back();
    ctx.prev_opponent_weights = for_a ? prev.b.interim_weights : prev.a.interim_weights;
  }
  ctx.incumbent_utilities = for_a ? row_expectations(st.matrix.payoff_a, wb.weights)
                                  : col_expectations(st.matrix.payoff_b, wa.weights);
  ctx.round = round;
  ctx.tag_prefix = own.culture.id + "/round" + std::to_string(round);

  OracleOutcome out;
  out.analysis = analyze_opponent(*deps.chat, deps.prompts, ctx);
  out.batch = generate_candidates(*deps.chat, deps.prompts, ctx, out.analysis,
                                  game.config.oracle);
  out.selection = select_best_response(out.batch, ctx, game.config.utility, *deps.embedder);
  out.accepted = out.selection.delta_u >= game.config.utility.epsilon;
  return out;
}

void admit_guideline(GameState& st, const GameDeps& deps, const GameConfig& cfg,
                     const Guideline& g, bool for_a) {
  CulturePool& pool = for_a ? st.a.pool : st.b.pool;
  pool.guidelines.push_back(g);
  pool.embeddings.push_back(deps.embedder->embed(g.embedding_text()));
  if (for_a) {
    extend_matrix_with_row(st.matrix, st.a.pool, st.b.pool, cfg.utility);
  } else {
    extend_matrix_with_col(st.matrix, st.a.pool, st.b.pool, cfg.utility);
  }
}

}  // namespace

Game run_round(const Game& game, const GameDeps& deps) {
  require_deps(deps);
  if (game.state.status != GameStatus::negotiating) {
    throw InvalidInputError("run_round requires a game in the negotiating state");
  }

  // Work on a copy; the caller's game stays at round start if anything throws.
  Game next = game;
  GameState& st = next.state;
  const GameConfig& cfg = next.config;
  const int round = st.round + 1;

  SolverResult solved = solve_equilibrium(st.matrix, cfg.solver);
  WeightDistribution wa = smooth_weights(solved.weights_a, cfg.solver.smoothing_gamma);
  WeightDistribution wb = smooth_weights(solved.weights_b, cfg.solver.smoothing_gamma);

  std::optional<WeightDistribution> prev_a, prev_b;
  if (!next.transcript.rounds.empty()) {
    prev_a = next.transcript.rounds.back().a.interim_weights;
    prev_b = next.transcript.rounds.back().b.interim_weights;
  }
  std::string speech_a =
      render_position_speech(st.a.pool.guidelines, wa, prev_a, deps.templates);
  std::string speech_b =
      render_position_speech(st.b.pool.guidelines, wb, prev_b, deps.templates);

  // Both oracle pipelines observe the same round-start snapshot; acceptances
  // are merged afterwards, A's matrix extension first.
  OracleOutcome oa = run_culture_oracle(next, deps, /*for_a=*/true, wa, wb, round);
  OracleOutcome ob = run_culture_oracle(next, deps, /*for_a=*/false, wa, wb, round);

  RoundRecord rec;
  rec.round = round;
  rec.solver_status = to_string(solved.status);
  rec.solver_exploitability = solved.exploitability;
  rec.a.culture = st.a.culture.id;
  rec.a.interim_weights = wa;
  rec.a.position_speech = speech_a;
  rec.a.analysis = oa.analysis;
  rec.a.proposal = {oa.selection.guideline, oa.selection.expected_utility, oa.selection.delta_u,
                    oa.accepted, "", oa.batch.warnings};
  rec.b.culture = st.b.culture.id;
  rec.b.interim_weights = wb;
  rec.b.position_speech = speech_b;
  rec.b.analysis = ob.analysis;
  rec.b.proposal = {ob.selection.guideline, ob.selection.expected_utility, ob.selection.delta_u,
                    ob.accepted, "", ob.batch.warnings};

  if (oa.accepted) {
    rec.a.proposal.claim_speech = render_claim_speech(oa.selection.guideline, deps.templates);
    admit_guideline(st, deps, cfg, oa.selection.guideline, /*for_a=*/true);
  }
  if (ob.accepted) {
    rec.b.proposal.claim_speech = render_claim_speech(ob.selection.guideline, deps.templates);
    admit_guideline(st, deps, cfg, ob.selection.guideline, /*for_a=*/false);
  }

  st.a.weights = pad_to_pool(wa, st.a.pool);
  st.b.weights = pad_to_pool(wb, st.b.pool);
  st.round = round;
  if (!oa.accepted && !ob.accepted) {
    st.status = GameStatus::converged;
  } else if (st.round >= cfg.max_rounds) {
    st.status = GameStatus::max_rounds_reached;
  }

  next.transcript.rounds.push_back(std::move(rec));
  next.transcript.status = to_string(st.status);
  return next;
}

Game run_to_consensus(Game game, const GameDeps& deps) {
  require_deps(deps);
  if (game.state.status != GameStatus::negotiating) {
    throw InvalidInputError("run_to_consensus requires a game in the negotiating state");
  }

  while (game.state.status == GameStatus::negotiating) {
    try {
      game = run_round(game, deps);
    } catch (const Error&) {
      // One retry per failed round; rollback semantics make the retry start
      // from the identical round-start state.
      game = run_round(game, deps);
    }
  }

  GameState& st = game.state;
  NegotiationTranscript& t = game.transcript;
  const RoundRecord& last = t.rounds.back();

  // Whenever the final round still admitted guidelines (max_rounds exit), the
  // consensus weights must cover them: run one more interim solve on the
  // final matrix. On a converged exit the last solve already was on the final
  // matrix, so its result stands.
  if (last.a.proposal.accepted || last.b.proposal.accepted) {
    SolverResult solved = solve_equilibrium(st.matrix, game.config.solver);
    st.a.weights = smooth_weights(solved.weights_a, game.config.solver.smoothing_gamma);
    st.b.weights = smooth_weights(solved.weights_b, game.config.solver.smoothing_gamma);
    t.final_exploitability = solved.exploitability;
  } else {
    t.final_exploitability = last.solver_exploitability;
  }

  std::optional<WeightDistribution> prev_a = last.a.interim_weights;
  std::optional<WeightDistribution> prev_b = last.b.interim_weights;
  std::string position_a =
      render_position_speech(st.a.pool.guidelines, st.a.weights, prev_a, deps.templates);
  std::string position_b =
      render_position_speech(st.b.pool.guidelines, st.b.weights, prev_b, deps.templates);

  st.a.final_response = chat_once(*deps.chat, deps.prompts, st.a.culture, st.topic,
                                  fill(kFinalResponsePrompt, {{"position", position_a}}),
                                  st.a.culture.id + "/final");
  st.b.final_response = chat_once(*deps.chat, deps.prompts, st.b.culture, st.topic,
                                  fill(kFinalResponsePrompt, {{"position", position_b}}),
                                  st.b.culture.id + "/final");

  t.final_weights_a = st.a.weights;
  t.final_weights_b = st.b.weights;
  t.final_response_a = st.a.final_response;
  t.final_response_b = st.b.final_response;
  t.status = to_string(st.status);
  return game;
}

}  // namespace consensus

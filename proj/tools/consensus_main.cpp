// Command-line front end: negotiation runs, the equilibrium solver, metric
// summaries and the dataset utilities, each as a subcommand.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "consensus/embedding.hpp"
#include "consensus/ingest.hpp"
#include "consensus/io.hpp"
#include "consensus/manifest.hpp"
#include "consensus/metrics.hpp"
#include "consensus/orchestrator.hpp"
#include "consensus/providers.hpp"
#include "consensus/solver.hpp"
#include "consensus/verbalizer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitProvider = 2;
constexpr int kExitUsage = 64;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw consensus::InvalidInputError("expected a comma-separated number list");
  return out;
}

consensus::SpeechTemplates load_templates() {
  try {
    return consensus::SpeechTemplates::from_directory(consensus::asset_root() + "/templates");
  } catch (const consensus::IoError&) {
    return consensus::SpeechTemplates::builtin();
  }
}

consensus::UtilityMatrix matrix_from_json_file(const std::string& path) {
  nlohmann::json doc = nlohmann::json::parse(consensus::read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("payoff_a") ||
      !doc.contains("payoff_b")) {
    throw consensus::FormatError("matrix file '" + path +
                                 "' must be a JSON object with payoff_a and payoff_b");
  }
  consensus::UtilityMatrix m;
  m.payoff_a = doc["payoff_a"].get<std::vector<std::vector<double>>>();
  m.payoff_b = doc["payoff_b"].get<std::vector<std::vector<double>>>();
  if (doc.contains("rows")) m.rows = doc["rows"].get<std::vector<std::string>>();
  if (doc.contains("cols")) m.cols = doc["cols"].get<std::vector<std::string>>();
  if (m.rows.empty()) {
    for (std::size_t j = 0; j < m.payoff_a.size(); ++j) m.rows.push_back("r" + std::to_string(j));
  }
  if (m.cols.empty() && !m.payoff_a.empty()) {
    for (std::size_t k = 0; k < m.payoff_a[0].size(); ++k) {
      m.cols.push_back("c" + std::to_string(k));
    }
  }
  m.validate();
  return m;
}

// --- negotiate ----------------------------------------------------------------

struct NegotiateOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> errors;
};

NegotiateOutcome run_negotiate(const consensus::RunManifest& m) {
  using namespace consensus;

  TopicLoadResult loaded = load_topics(m.topics_path);
  std::vector<Topic> topics;
  for (const auto& t : loaded.topics) {
    if (!m.category.empty() && t.category != m.category) continue;
    if (!m.topic_ids.empty() &&
        std::find(m.topic_ids.begin(), m.topic_ids.end(), t.id) == m.topic_ids.end()) {
      continue;
    }
    topics.push_back(t);
  }
  if (topics.empty()) {
    throw InvalidInputError("topic selection matched no topics in " + m.topics_path);
  }

  ensure_directory(m.out_dir);
  OraclePrompts prompts = OraclePrompts::from_assets();
  SpeechTemplates templates = load_templates();

  HashedNgramEmbedder deterministic_embedder;
  std::unique_ptr<EmbeddingProvider> remote_embedder;
  std::shared_ptr<HttpTransport> transport;
  if (m.provider == RunManifest::ProviderMode::remote) {
    transport = make_httplib_transport(m.base_url, m.api_key);
    if (m.embedder.kind == EmbedderSpec::Kind::remote) {
      remote_embedder = make_embedder(m.embedder);
    }
  }
  EmbeddingProvider& embedder =
      remote_embedder ? *remote_embedder : static_cast<EmbeddingProvider&>(deterministic_embedder);

  std::atomic<std::size_t> next{0};
  std::mutex sink_mutex;
  NegotiateOutcome outcome;

  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < topics.size(); i = next.fetch_add(1)) {
      const Topic& topic = topics[i];
      try {
        std::unique_ptr<ChatProvider> chat;
        if (m.provider == RunManifest::ProviderMode::scripted) {
          chat = std::make_unique<SyntheticChatProvider>(m.seed ^ fnv1a64(topic.id));
        } else {
          chat = std::make_unique<RemoteChatProvider>(transport, m.model);
        }
        GameDeps deps{&embedder, chat.get(), prompts, templates};
        Game game = initialize_game(topic.question, m.culture_a, m.culture_b, {}, {},
                                    m.game, deps);
        game = run_to_consensus(std::move(game), deps);

        std::string path = m.out_dir + "/" + topic.id + ".json";
        atomic_write_file(path, to_json_string(game.transcript));
        std::lock_guard<std::mutex> lock(sink_mutex);
        std::cout << "wrote " << path << " (" << game.transcript.status << ", "
                  << game.transcript.rounds.size() << " rounds)\n";
      } catch (const ProviderError& e) {
        std::lock_guard<std::mutex> lock(sink_mutex);
        outcome.errors.push_back("topic " + topic.id + ": provider failure: " + e.what());
        outcome.exit_code = kExitProvider;
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(sink_mutex);
        outcome.errors.push_back("topic " + topic.id + ": " + e.what());
        if (outcome.exit_code != kExitProvider) outcome.exit_code = kExitValidation;
      }
    }
  };

  std::vector<std::thread> workers;
  int jobs = std::max(1, std::min<int>(m.jobs, static_cast<int>(topics.size())));
  workers.reserve(jobs);
  for (int j = 0; j < jobs; ++j) workers.emplace_back(worker);
  for (auto& w : workers) w.join();
  return outcome;
}

// --- metrics -------------------------------------------------------------------

struct TopicMetricsRow {
  std::string id;
  std::optional<double> ratio;  // absent when the baseline is degenerate
  double vsc_a = 0.0;
  double vsc_b = 0.0;
};

void run_metrics(const std::string& transcripts_dir, const std::string& out_dir,
                 std::uint64_t seed) {
  using namespace consensus;
  namespace fs = std::filesystem;

  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(transcripts_dir, ec)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list transcripts directory '" + transcripts_dir + "'");
  if (files.empty()) {
    throw InvalidInputError("no transcript .json files in '" + transcripts_dir + "'");
  }
  std::sort(files.begin(), files.end());

  BigramLogProbProvider scorer;
  SyntheticValueJudge judge(seed);
  HashedNgramEmbedder embedder;

  std::vector<TopicMetricsRow> rows;
  std::vector<double> ratios;
  std::vector<Embedding> consensus_points;
  std::vector<std::pair<Embedding, Embedding>> anchors;  // per topic (a, b)

  for (const auto& file : files) {
    NegotiationTranscript t = transcript_from_json(read_file(file.string()));
    if (t.final_response_a.empty() || t.final_response_b.empty()) {
      throw TranscriptError("transcript '" + file.string() + "' has no final responses");
    }

    TopicMetricsRow row;
    row.id = file.stem().string();

    auto ppl_of = [&](const std::string& text) {
      return perplexity(scorer.score_logprobs(t.topic, text));
    };
    PplPair initial{ppl_of(t.initial_response_b), ppl_of(t.initial_response_a),
                    PplPair::Stage::initial};
    PplPair consensus{ppl_of(t.final_response_b), ppl_of(t.final_response_a),
                      PplPair::Stage::consensus};
    try {
      row.ratio = ppl_acceptance(initial, consensus);
      ratios.push_back(*row.ratio);
    } catch (const DegenerateBaselineError&) {
      row.ratio.reset();  // excluded, not scored
    }

    row.vsc_a = value_self_consistency(judge.judge_value_vector(t.initial_response_a),
                                       judge.judge_value_vector(t.final_response_a));
    row.vsc_b = value_self_consistency(judge.judge_value_vector(t.initial_response_b),
                                       judge.judge_value_vector(t.final_response_b));
    rows.push_back(row);

    Embedding ea = embedder.embed(t.final_response_a);
    Embedding eb = embedder.embed(t.final_response_b);
    Embedding mid(ea.size());
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < ea.size(); ++i) {
      mid[i] = 0.5 * (ea[i] + eb[i]);
      norm_sq += mid[i] * mid[i];
    }
    if (norm_sq <= 0.0) mid = ea;  // antipodal responses: fall back to one side
    double inv = 1.0 / std::sqrt(norm_sq > 0.0 ? norm_sq : 1.0);
    if (norm_sq > 0.0) {
      for (double& x : mid) x *= inv;
    }
    consensus_points.push_back(std::move(mid));
    anchors.emplace_back(embedder.embed(t.initial_response_a),
                         embedder.embed(t.initial_response_b));
  }

  // Distances use each topic's own anchors; the PCA plane comes from the full
  // consensus-point set.
  FairnessProjection joint =
      fairness_projection(consensus_points, anchors[0].first, anchors[0].second);
  std::vector<FairnessRecord> per_topic;
  per_topic.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    FairnessRecord rec;
    rec.d_a = 1.0 - cosine_similarity(consensus_points[i], anchors[i].first);
    rec.d_b = 1.0 - cosine_similarity(consensus_points[i], anchors[i].second);
    rec.pca_xy = joint.records[i].pca_xy;
    per_topic.push_back(rec);
  }
  double gap_sum = 0.0;
  for (const auto& rec : per_topic) gap_sum += std::abs(rec.d_a - rec.d_b);
  FairnessSummary fairness;
  fairness.mean_abs_gap = gap_sum / static_cast<double>(per_topic.size());
  fairness.mean_distance_to_diagonal = fairness.mean_abs_gap / std::sqrt(2.0);

  std::ostringstream csv;
  csv << "topic_id,ratio,vsc_a,vsc_b,d_a,d_b,pca_x,pca_y\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto& rec = per_topic[i];
    csv << row.id << ",";
    if (row.ratio.has_value()) csv << format_double(*row.ratio);
    csv << "," << format_double(row.vsc_a) << "," << format_double(row.vsc_b) << ","
        << format_double(rec.d_a) << "," << format_double(rec.d_b) << ",";
    if (rec.pca_xy.has_value()) {
      csv << format_double((*rec.pca_xy)[0]) << "," << format_double((*rec.pca_xy)[1]);
    } else {
      csv << ",";
    }
    csv << "\n";
  }

  double vsc_a_sum = 0.0, vsc_b_sum = 0.0;
  for (const auto& row : rows) {
    vsc_a_sum += row.vsc_a;
    vsc_b_sum += row.vsc_b;
  }
  nlohmann::json summary = {
      {"topics", rows.size()},
      {"excluded_degenerate", rows.size() - ratios.size()},
      {"acceptance_score",
       ratios.empty() ? nlohmann::json(nullptr) : nlohmann::json(acceptance_score(ratios))},
      {"ratio_mean", ratios.empty() ? nlohmann::json(nullptr)
                                    : nlohmann::json(std::accumulate(ratios.begin(), ratios.end(),
                                                                     0.0) /
                                                     static_cast<double>(ratios.size()))},
      {"mean_vsc_a", vsc_a_sum / static_cast<double>(rows.size())},
      {"mean_vsc_b", vsc_b_sum / static_cast<double>(rows.size())},
      {"fairness",
       {{"mean_abs_gap", fairness.mean_abs_gap},
        {"mean_distance_to_diagonal", fairness.mean_distance_to_diagonal}}}};

  ensure_directory(out_dir);
  atomic_write_file(out_dir + "/metrics.csv", csv.str());
  atomic_write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
  std::cout << "wrote " << out_dir << "/metrics.csv and " << out_dir << "/summary.json\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace consensus;

  CLI::App app{"Cross-cultural consensus negotiation toolkit"};
  app.require_subcommand(1);

  // negotiate ------------------------------------------------------------
  auto* negotiate = app.add_subcommand("negotiate", "Run negotiations over a topic file");
  std::string config_path, topics_path, cultures_csv, out_dir, provider_name, base_url, model,
      api_key, category;
  std::vector<std::string> topic_ids;
  std::uint64_t seed = 0;
  int jobs = 0, max_rounds = 0, max_iters = 0, per_mode = 0;
  double alpha = 0, beta = 0, gamma_nov = 0, epsilon = 0, eta = 0, smoothing_gamma = 0,
         tolerance = 0;
  negotiate->add_option("--config", config_path, "JSON config file");
  negotiate->add_option("--topics", topics_path, "topics JSON file");
  negotiate->add_option("--topic-ids", topic_ids, "only negotiate these topic ids");
  negotiate->add_option("--category", category, "only negotiate topics in this category");
  negotiate->add_option("--cultures", cultures_csv, "culture pair as A,B ids");
  negotiate->add_option("--out", out_dir, "output directory for transcripts");
  negotiate->add_option("--provider", provider_name, "chat provider: scripted|remote");
  negotiate->add_option("--seed", seed, "seed for scripted providers");
  negotiate->add_option("--jobs", jobs, "worker pool size for batch runs");
  negotiate->add_option("--max-rounds", max_rounds, "negotiation round cap");
  negotiate->add_option("--alpha", alpha, "consistency weight");
  negotiate->add_option("--beta", beta, "acceptance weight");
  negotiate->add_option("--gamma-nov", gamma_nov, "novelty weight");
  negotiate->add_option("--epsilon", epsilon, "minimum utility gain to admit a proposal");
  negotiate->add_option("--eta", eta, "solver learning rate");
  negotiate->add_option("--max-iters", max_iters, "solver iteration budget");
  negotiate->add_option("--smoothing-gamma", smoothing_gamma, "weight smoothing factor");
  negotiate->add_option("--base-url", base_url, "remote API base URL");
  negotiate->add_option("--model", model, "remote model name");
  negotiate->add_option("--api-key", api_key, "remote API key");

  // solve ------------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "Solve a bimatrix game for equilibrium weights");
  std::string matrix_path, solve_out;
  bool use_brute = false;
  double s_eta = 0, s_tolerance = 0;
  int s_max_iters = 0;
  solve->add_option("--matrix", matrix_path, "matrix JSON file (payoff_a, payoff_b)")
      ->required();
  solve->add_option("--out", solve_out, "also write the result as JSON here");
  solve->add_option("--eta", s_eta, "learning rate");
  solve->add_option("--max-iters", s_max_iters, "iteration budget");
  solve->add_option("--tolerance", s_tolerance, "convergence threshold");
  solve->add_flag("--brute-force", use_brute, "use support enumeration (<= 4x4)");

  // metrics ----------------------------------------------------------------
  auto* metrics = app.add_subcommand("metrics", "Score a directory of transcripts");
  std::string m_transcripts, m_out;
  std::uint64_t m_seed = 0;
  metrics->add_option("--transcripts", m_transcripts, "directory of transcript .json files")
      ->required();
  metrics->add_option("--out", m_out, "output directory")->required();
  metrics->add_option("--seed", m_seed, "seed for the deterministic stance judge");

  // verbalize ----------------------------------------------------------------
  auto* verbalize = app.add_subcommand("verbalize", "Render a position speech from weights");
  std::string v_weights, v_out;
  verbalize->add_option("--weights", v_weights, "weights JSON file")->required();
  verbalize->add_option("--out", v_out, "write the speech here instead of stdout");

  // hofstede -----------------------------------------------------------------
  auto* hofstede = app.add_subcommand("hofstede", "Compute the six VSM13 indices");
  std::string h_means;
  hofstede->add_option("--means", h_means, "JSON array of the 24 question means")->required();

  // allocate -----------------------------------------------------------------
  auto* allocate = app.add_subcommand("allocate", "Proportional sample allocation");
  std::string a_shares;
  long long a_target = 0;
  allocate->add_option("--shares", a_shares, "comma-separated shares summing to 1")->required();
  allocate->add_option("--target", a_target, "total sample count K")->required();

  // export-pairs ---------------------------------------------------------------
  auto* export_pairs = app.add_subcommand("export-pairs", "Export preference pairs as JSONL");
  std::vector<std::string> e_transcripts;
  std::string e_out;
  export_pairs->add_option("--transcript", e_transcripts, "transcript JSON file(s)")
      ->required();
  export_pairs->add_option("--out", e_out, "output JSONL path")->required();

  // validate-topics ----------------------------------------------------------
  auto* validate_topics = app.add_subcommand("validate-topics", "Check a topics file");
  std::string t_topics;
  validate_topics->add_option("--topics", t_topics, "topics JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (negotiate->parsed()) {
      RunManifest m = manifest_from_config_file(config_path);
      apply_environment(m);
      if (negotiate->count("--topics")) m.topics_path = topics_path;
      if (negotiate->count("--topic-ids")) m.topic_ids = topic_ids;
      if (negotiate->count("--category")) m.category = category;
      if (negotiate->count("--cultures")) {
        auto comma = cultures_csv.find(',');
        if (comma == std::string::npos) {
          throw InvalidInputError("--cultures expects two comma-separated ids");
        }
        m.culture_a = {cultures_csv.substr(0, comma), ""};
        m.culture_b = {cultures_csv.substr(comma + 1), ""};
      }
      if (negotiate->count("--out")) m.out_dir = out_dir;
      if (negotiate->count("--provider")) m.provider = parse_provider_mode(provider_name);
      if (negotiate->count("--seed")) m.seed = seed;
      if (negotiate->count("--jobs")) m.jobs = jobs;
      if (negotiate->count("--max-rounds")) m.game.max_rounds = max_rounds;
      if (negotiate->count("--alpha")) m.game.utility.alpha = alpha;
      if (negotiate->count("--beta")) m.game.utility.beta = beta;
      if (negotiate->count("--gamma-nov")) m.game.utility.gamma_nov = gamma_nov;
      if (negotiate->count("--epsilon")) m.game.utility.epsilon = epsilon;
      if (negotiate->count("--eta")) m.game.solver.eta = eta;
      if (negotiate->count("--max-iters")) m.game.solver.max_iters = max_iters;
      if (negotiate->count("--smoothing-gamma")) m.game.solver.smoothing_gamma = smoothing_gamma;
      if (negotiate->count("--base-url")) m.base_url = base_url;
      if (negotiate->count("--model")) m.model = model;
      if (negotiate->count("--api-key")) m.api_key = api_key;
      if (m.topics_path.empty()) throw InvalidInputError("negotiate requires --topics");
      m.validate();

      NegotiateOutcome outcome = run_negotiate(m);
      for (const auto& err : outcome.errors) std::cerr << "error: " << err << "\n";
      return outcome.exit_code;
    }

    if (solve->parsed()) {
      UtilityMatrix m = matrix_from_json_file(matrix_path);
      nlohmann::json result;
      if (use_brute) {
        auto [wa, wb] = brute_force_equilibrium(m);
        double expl = exploitability(m, wa, wb);
        std::cout << "weights_a:";
        for (double w : wa.weights) std::cout << " " << format_double(w);
        std::cout << "\nweights_b:";
        for (double w : wb.weights) std::cout << " " << format_double(w);
        std::cout << "\nexploitability: " << format_double(expl) << "\nstatus: exact\n";
        result = {{"weights_a", wa.weights},
                  {"weights_b", wb.weights},
                  {"exploitability", expl},
                  {"status", "exact"}};
      } else {
        SolverConfig cfg;
        if (solve->count("--eta")) cfg.eta = s_eta;
        if (solve->count("--max-iters")) cfg.max_iters = s_max_iters;
        if (solve->count("--tolerance")) cfg.tolerance = s_tolerance;
        SolverResult res = solve_equilibrium(m, cfg);
        std::cout << "weights_a:";
        for (double w : res.weights_a.weights) std::cout << " " << format_double(w);
        std::cout << "\nweights_b:";
        for (double w : res.weights_b.weights) std::cout << " " << format_double(w);
        std::cout << "\nexploitability: " << format_double(res.exploitability)
                  << "\niterations: " << res.iterations << "\nstatus: "
                  << (res.status == SolverStatus::converged ? "converged" : "max_iters_reached")
                  << "\n";
        result = {{"weights_a", res.weights_a.weights},
                  {"weights_b", res.weights_b.weights},
                  {"exploitability", res.exploitability},
                  {"iterations", res.iterations},
                  {"status",
                   res.status == SolverStatus::converged ? "converged" : "max_iters_reached"}};
      }
      if (!solve_out.empty()) atomic_write_file(solve_out, result.dump(2) + "\n");
      return kExitOk;
    }

    if (metrics->parsed()) {
      run_metrics(m_transcripts, m_out, m_seed);
      return kExitOk;
    }

    if (verbalize->parsed()) {
      nlohmann::json doc = nlohmann::json::parse(read_file(v_weights), nullptr, false);
      if (doc.is_discarded() || !doc.is_object() || !doc.contains("guidelines") ||
          !doc.contains("weights")) {
        throw FormatError("weights file must be a JSON object with guidelines and weights");
      }
      std::vector<Guideline> guidelines;
      int ordinal = 0;
      for (const auto& j : doc["guidelines"]) {
        Guideline g;
        g.culture = "cli";
        g.ordinal = ordinal++;
        g.content = j.value("content", "");
        g.reason = j.value("reason", "");
        g.description = j.value("description", "");
        guidelines.push_back(std::move(g));
      }
      WeightDistribution w;
      w.weights = doc["weights"].get<std::vector<double>>();
      for (const auto& g : guidelines) w.gids.push_back(g.gid());
      std::optional<WeightDistribution> prev;
      if (doc.contains("prev_weights")) {
        WeightDistribution p;
        p.weights = doc["prev_weights"].get<std::vector<double>>();
        p.gids = w.gids;
        prev = std::move(p);
      }
      std::string speech = render_position_speech(guidelines, w, prev, load_templates());
      if (v_out.empty()) {
        std::cout << speech << "\n";
      } else {
        atomic_write_file(v_out, speech + "\n");
      }
      return kExitOk;
    }

    if (hofstede->parsed()) {
      nlohmann::json doc = nlohmann::json::parse(read_file(h_means), nullptr, false);
      if (doc.is_discarded() || !doc.is_array() || doc.size() != 24) {
        throw FormatError("means file must be a JSON array of exactly 24 numbers");
      }
      VsmMeans means;
      for (std::size_t i = 0; i < 24; ++i) means.means[i] = doc[i].get<double>();
      HofstedeScores s = hofstede_scores(means);
      std::cout << "PDI " << format_double(s.pdi) << "\nIDV " << format_double(s.idv)
                << "\nMAS " << format_double(s.mas) << "\nUAI " << format_double(s.uai)
                << "\nLTO " << format_double(s.lto) << "\nIVR " << format_double(s.ivr) << "\n";
      return kExitOk;
    }

    if (allocate->parsed()) {
      AllocationRequest req;
      req.shares = parse_double_list(a_shares);
      req.target = a_target;
      std::vector<long long> counts = allocate_samples(req);
      for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i) std::cout << ",";
        std::cout << counts[i];
      }
      std::cout << "\n";
      return kExitOk;
    }

    if (export_pairs->parsed()) {
      std::vector<PreferencePair> pairs;
      for (const auto& path : e_transcripts) {
        NegotiationTranscript t = transcript_from_json(read_file(path));
        for (auto& p : export_preference_pairs(t)) pairs.push_back(std::move(p));
      }
      atomic_write_file(e_out, preference_pairs_to_jsonl(pairs));
      std::cout << "wrote " << pairs.size() << " pairs to " << e_out << "\n";
      return kExitOk;
    }

    if (validate_topics->parsed()) {
      TopicLoadResult result = load_topics(t_topics);
      std::cout << "accepted " << result.topics.size() << " topics, rejected "
                << result.rejected.size() << "\n";
      for (const auto& d : result.rejected) {
        std::cout << "rejected record " << d.record_index
                  << (d.id.empty() ? "" : " (id " + d.id + ")") << ": " << d.message << "\n";
      }
      return result.rejected.empty() ? kExitOk : kExitValidation;
    }
  } catch (const ProviderError& e) {
    std::cerr << "provider failure: " << e.what() << " (attempts " << e.attempts << ", status "
              << e.http_status << ")\n";
    return kExitProvider;
  } catch (const CapabilityError& e) {
    std::cerr << "provider capability failure: " << e.what() << "\n";
    return kExitProvider;
  } catch (const ScriptError& e) {
    std::cerr << "script exhausted: " << e.what() << "\n";
    return kExitProvider;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  return kExitOk;
}

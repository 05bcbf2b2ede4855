#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

std::string cli_path() { return CONSENSUS_CLI_PATH; }

fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "consensus_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

RunResult run_cli(const std::string& args) {
  static int run_no = 0;
  fs::path capture = scratch_dir() / ("capture_" + std::to_string(run_no++) + ".txt");
  std::string cmd = cli_path() + " " + args + " > " + capture.string() + " 2>&1";
  int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.output = slurp(capture);
  return r;
}

// Topics file with two valid records.
fs::path write_topics(const std::string& name) {
  fs::path path = scratch_dir() / name;
  spit(path, R"([
  {"id": "fam-01", "question": "Should elderly parents live with their adult children?",
   "category": "Gender and Family Roles", "source": "GAS"},
  {"id": "law-02", "question": "Should voting be mandatory for all citizens?",
   "category": "Politics and Governance", "source": "WVS"}
])");
  return path;
}

}  // namespace

TEST_CASE("help exits zero and names every subcommand") {
  RunResult r = run_cli("--help");
  CHECK(r.exit_code == 0);
  for (const char* sub : {"negotiate", "solve", "metrics", "verbalize", "hofstede",
                          "allocate", "export-pairs", "validate-topics"}) {
    CHECK(r.output.find(sub) != std::string::npos);
  }
}

TEST_CASE("usage errors exit with code 64") {
  CHECK(run_cli("").exit_code == 64);                      // a subcommand is required
  CHECK(run_cli("no-such-command").exit_code == 64);       // unknown subcommand
  CHECK(run_cli("solve").exit_code == 64);                 // missing required --matrix
  CHECK(run_cli("allocate --target 5").exit_code == 64);   // missing required --shares
  CHECK(run_cli("hofstede").exit_code == 64);              // missing required --means
}

TEST_CASE("solve finds the uniform equilibrium of rock-paper-scissors") {
  fs::path matrix = scratch_dir() / "rps.json";
  spit(matrix, R"({
  "payoff_a": [[0, -1, 1], [1, 0, -1], [-1, 1, 0]],
  "payoff_b": [[0, 1, -1], [-1, 0, 1], [1, -1, 0]]
})");

  RunResult r = run_cli("solve --matrix " + matrix.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("weights_a:") != std::string::npos);
  CHECK(r.output.find("status: converged") != std::string::npos);
  // All six printed weights are 1/3 to the printed precision.
  std::size_t count = 0;
  for (std::size_t pos = r.output.find("0.333333"); pos != std::string::npos;
       pos = r.output.find("0.333333", pos + 1)) {
    ++count;
  }
  CHECK(count == 6);

  // The brute-force flag takes the support-enumeration route.
  fs::path out = scratch_dir() / "rps_solution.json";
  RunResult b = run_cli("solve --matrix " + matrix.string() + " --brute-force --out " +
                        out.string());
  CHECK(b.exit_code == 0);
  CHECK(b.output.find("status: exact") != std::string::npos);
  nlohmann::json solution = nlohmann::json::parse(slurp(out));
  REQUIRE(solution["weights_a"].size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(solution["weights_a"][i].get<double>() == doctest::Approx(1.0 / 3).epsilon(1e-9));
    CHECK(solution["weights_b"][i].get<double>() == doctest::Approx(1.0 / 3).epsilon(1e-9));
  }
  CHECK(solution["exploitability"].get<double>() <= 1e-9);

  // A malformed matrix file is a validation failure, not a crash.
  fs::path bad = scratch_dir() / "bad_matrix.json";
  spit(bad, "{\"payoff_a\": [[0]]}");
  CHECK(run_cli("solve --matrix " + bad.string()).exit_code == 1);
}

TEST_CASE("hofstede prints the six exact constants for flat means") {
  fs::path means = scratch_dir() / "means_flat.json";
  std::string flat = "[";
  for (int i = 0; i < 24; ++i) flat += (i ? ", 3.0" : "3.0");
  flat += "]";
  spit(means, flat);

  RunResult r = run_cli("hofstede --means " + means.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output == "PDI 0\nIDV 43\nMAS 60\nUAI 100\nLTO -25\nIVR -15\n");

  // One activated pair: m07 = 4 lifts PDI by 35.
  fs::path means2 = scratch_dir() / "means_pdi.json";
  std::string lifted = "[3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 4.0";
  for (int i = 7; i < 24; ++i) lifted += ", 3.0";
  lifted += "]";
  spit(means2, lifted);
  RunResult r2 = run_cli("hofstede --means " + means2.string());
  CHECK(r2.exit_code == 0);
  CHECK(r2.output.find("PDI 35\n") != std::string::npos);

  fs::path short_means = scratch_dir() / "means_short.json";
  spit(short_means, "[3.0, 3.0]");
  CHECK(run_cli("hofstede --means " + short_means.string()).exit_code == 1);
}

TEST_CASE("allocate prints integer counts that honour the shares") {
  RunResult r = run_cli("allocate --shares 0.5,0.3,0.2 --target 10");
  CHECK(r.exit_code == 0);
  CHECK(r.output == "5,3,2\n");

  RunResult r2 = run_cli("allocate --shares 1.0 --target 7");
  CHECK(r2.output == "7\n");

  // Shares that do not sum to one fail validation.
  CHECK(run_cli("allocate --shares 0.9,0.9 --target 10").exit_code == 1);
}

TEST_CASE("validate-topics separates exit codes for clean and dirty files") {
  fs::path good = write_topics("topics_clean.json");
  RunResult ok = run_cli("validate-topics --topics " + good.string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("accepted 2 topics, rejected 0") != std::string::npos);

  fs::path dirty = scratch_dir() / "topics_dirty.json";
  spit(dirty, R"([
  {"id": "ok-1", "question": "Should courts allow cameras?", "category": "Law and Ethics",
   "source": "GAS"},
  {"id": "bad-1", "question": "Cameras in courts?", "category": "Law and Ethics",
   "source": "GAS"}
])");
  RunResult rejected = run_cli("validate-topics --topics " + dirty.string());
  CHECK(rejected.exit_code == 1);
  CHECK(rejected.output.find("accepted 1 topics, rejected 1") != std::string::npos);
  CHECK(rejected.output.find("bad-1") != std::string::npos);
  CHECK(rejected.output.find("Should") != std::string::npos);

  fs::path broken = scratch_dir() / "topics_broken.json";
  spit(broken, "[{\"id\":");
  CHECK(run_cli("validate-topics --topics " + broken.string()).exit_code == 1);
}

TEST_CASE("negotiate with the scripted provider is deterministic end to end") {
  fs::path topics = write_topics("topics_negotiate.json");
  fs::path out1 = scratch_dir() / "run1";
  fs::path out2 = scratch_dir() / "run2";

  std::string base = "negotiate --topics " + topics.string() +
                     " --cultures east,west --provider scripted --seed 42 --jobs 2 --out ";
  RunResult r1 = run_cli(base + out1.string());
  CHECK(r1.exit_code == 0);
  CHECK(r1.output.find("fam-01.json") != std::string::npos);
  CHECK(r1.output.find("law-02.json") != std::string::npos);

  RunResult r2 = run_cli(base + out2.string());
  CHECK(r2.exit_code == 0);

  for (const char* name : {"fam-01.json", "law-02.json"}) {
    std::string t1 = slurp(out1 / name);
    std::string t2 = slurp(out2 / name);
    REQUIRE_FALSE(t1.empty());
    CHECK(t1 == t2);  // byte-identical across runs
    nlohmann::json doc = nlohmann::json::parse(t1);
    CHECK(doc["schema_version"].get<int>() == 1);
    CHECK((doc["status"] == "converged" || doc["status"] == "max_rounds_reached"));
    CHECK_FALSE(doc["final_response_a"].get<std::string>().empty());
  }

  // Topic filtering by id.
  fs::path out3 = scratch_dir() / "run3";
  RunResult r3 = run_cli("negotiate --topics " + topics.string() +
                         " --cultures east,west --provider scripted --seed 42 --topic-ids " +
                         "fam-01 --out " + out3.string());
  CHECK(r3.exit_code == 0);
  CHECK(fs::exists(out3 / "fam-01.json"));
  CHECK_FALSE(fs::exists(out3 / "law-02.json"));

  // A selection that matches nothing is a validation error.
  RunResult none = run_cli("negotiate --topics " + topics.string() +
                           " --cultures east,west --provider scripted --topic-ids nothing " +
                           "--out " + (scratch_dir() / "run4").string());
  CHECK(none.exit_code == 1);
}

TEST_CASE("export-pairs turns transcripts into preference JSONL") {
  fs::path topics = write_topics("topics_pairs.json");
  fs::path run_dir = scratch_dir() / "pairs_run";
  RunResult neg = run_cli("negotiate --topics " + topics.string() +
                          " --cultures east,west --provider scripted --seed 7 --out " +
                          run_dir.string());
  REQUIRE(neg.exit_code == 0);

  fs::path jsonl = scratch_dir() / "pairs.jsonl";
  RunResult exp = run_cli("export-pairs --transcript " + (run_dir / "fam-01.json").string() +
                          " --transcript " + (run_dir / "law-02.json").string() + " --out " +
                          jsonl.string());
  CHECK(exp.exit_code == 0);
  CHECK(exp.output.find("wrote 4 pairs") != std::string::npos);

  std::istringstream lines(slurp(jsonl));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.contains("prompt"));
    CHECK(j.contains("chosen"));
    CHECK(j.contains("rejected"));
    ++count;
  }
  CHECK(count == 4);
}

TEST_CASE("metrics scores a directory of transcripts") {
  fs::path topics = write_topics("topics_metrics.json");
  fs::path run_dir = scratch_dir() / "metrics_run";
  RunResult neg = run_cli("negotiate --topics " + topics.string() +
                          " --cultures east,west --provider scripted --seed 11 --out " +
                          run_dir.string());
  REQUIRE(neg.exit_code == 0);

  fs::path out_dir = scratch_dir() / "metrics_out";
  RunResult m = run_cli("metrics --transcripts " + run_dir.string() + " --out " +
                        out_dir.string() + " --seed 5");
  CHECK(m.exit_code == 0);

  std::string csv = slurp(out_dir / "metrics.csv");
  CHECK(csv.rfind("topic_id,ratio,vsc_a,vsc_b,d_a,d_b,pca_x,pca_y\n", 0) == 0);
  CHECK(csv.find("fam-01") != std::string::npos);
  CHECK(csv.find("law-02") != std::string::npos);

  nlohmann::json summary = nlohmann::json::parse(slurp(out_dir / "summary.json"));
  CHECK(summary["topics"].get<int>() == 2);
  CHECK(summary.contains("acceptance_score"));
  CHECK(summary["mean_vsc_a"].get<double>() >= 0.0);
  CHECK(summary["mean_vsc_a"].get<double>() <= 1.0);
  CHECK(summary["fairness"]["mean_distance_to_diagonal"].get<double>() >= 0.0);

  // Determinism: the same seed reproduces both artifacts byte for byte.
  fs::path out_dir2 = scratch_dir() / "metrics_out2";
  RunResult m2 = run_cli("metrics --transcripts " + run_dir.string() + " --out " +
                         out_dir2.string() + " --seed 5");
  CHECK(m2.exit_code == 0);
  CHECK(slurp(out_dir / "metrics.csv") == slurp(out_dir2 / "metrics.csv"));
  CHECK(slurp(out_dir / "summary.json") == slurp(out_dir2 / "summary.json"));

  CHECK(run_cli("metrics --transcripts " + (scratch_dir() / "empty_dir").string() +
                " --out " + out_dir.string())
            .exit_code == 1);
}

TEST_CASE("verbalize renders a speech from a weights file") {
  fs::path weights = scratch_dir() / "weights.json";
  spit(weights, R"({
  "guidelines": [
    {"content": "Respect the family council", "reason": "it binds generations",
     "description": "quarterly family meetings"},
    {"content": "Honour individual choice", "reason": "autonomy matters",
     "description": "personal decisions prevail"}
  ],
  "weights": [0.75, 0.25]
})");
  RunResult r = run_cli("verbalize --weights " + weights.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("stance distribution") != std::string::npos);
  CHECK(r.output.find("Respect the family council") != std::string::npos);
  CHECK(r.output.find("(weight 0.75") != std::string::npos);

  fs::path bad = scratch_dir() / "weights_bad.json";
  spit(bad, "{\"weights\": [1.0]}");
  CHECK(run_cli("verbalize --weights " + bad.string()).exit_code == 1);
}

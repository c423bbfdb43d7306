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

#include "nlqre/game.hpp"
#include "nlqre/game_zoo.hpp"
#include "nlqre/learning.hpp"
#include "support/oracles.hpp"

using namespace nlqre;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

const fs::path kScratch = fs::path("cli_scratch");

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string fixture(const std::string& name) {
  return (fs::path(FIXTURE_DIR) / name).string();
}

struct ScratchDir {
  ScratchDir() {
    fs::remove_all(kScratch);
    fs::create_directories(kScratch);
  }
};

ScratchDir scratch_once;

std::string path_of(const std::string& name) { return (kScratch / name).string(); }

}  // namespace

TEST_CASE("bad invocations exit nonzero") {
  CHECK(run_cli("> /dev/null 2>&1") != 0);
  CHECK(run_cli("solve --game /nonexistent/game.json > /dev/null 2>&1") != 0);
  CHECK(run_cli("frobnicate > /dev/null 2>&1") != 0);
  CHECK(run_cli("solve --game " + fixture("rps.json") +
                " --solver simplex > /dev/null 2>&1") != 0);
}

TEST_CASE("newton solve of the bundled fixture finds the uniform equilibrium") {
  const std::string out = path_of("rps_newton.json");
  const int rc = run_cli("solve --game " + fixture("rps.json") +
                         " --lambda 1 --solver newton --residual-tol 1e-12 --out " + out +
                         " 2> /dev/null");
  REQUIRE(rc == 0);
  const json j = json::parse(slurp(out));
  CHECK(j.at("converged").get<bool>());
  CHECK(j.at("solver").get<std::string>() == "newton");
  CHECK(std::abs(j.at("value").get<double>()) < 1e-9);
  const auto bu = j.at("behavioral_u").get<std::vector<double>>();
  const auto bv = j.at("behavioral_v").get<std::vector<double>>();
  REQUIRE(bu.size() == 4);
  for (int a = 1; a <= 3; ++a) {
    CHECK(std::abs(bu[a] - 1.0 / 3) < 1e-8);
    CHECK(std::abs(bv[a] - 1.0 / 3) < 1e-8);
  }
}

TEST_CASE("the two solvers agree through the command line") {
  const std::string a = path_of("rps_a.json"), b = path_of("rps_b.json");
  REQUIRE(run_cli("solve --game " + fixture("rps.json") +
                  " --lambda 0.4 --solver newton --residual-tol 1e-12 --out " + a +
                  " 2> /dev/null") == 0);
  REQUIRE(run_cli("solve --game " + fixture("rps.json") +
                  " --lambda 0.4 --solver fom --gap-tol 1e-11 --out " + b + " 2> /dev/null") ==
          0);
  const json ja = json::parse(slurp(a));
  const json jb = json::parse(slurp(b));
  const auto ua = ja.at("u").get<std::vector<double>>();
  const auto ub = jb.at("u").get<std::vector<double>>();
  REQUIRE(ua.size() == ub.size());
  for (size_t i = 0; i < ua.size(); ++i) CHECK(std::abs(ua[i] - ub[i]) < 1e-4);
}

TEST_CASE("a newton solve that stalls reports failure through the exit code") {
  const std::string game = path_of("poker.json");
  REQUIRE(run_cli("gen --family poker --cards 4 --out " + game) == 0);
  const std::string out = path_of("poker_stall.json");
  const int rc = run_cli("solve --game " + game +
                         " --lambda 0.001 --solver newton --out " + out + " 2> /dev/null");
  CHECK(rc == 2);
  const json j = json::parse(slurp(out));
  CHECK_FALSE(j.at("converged").get<bool>());
  CHECK(j.contains("diagnostic"));
}

TEST_CASE("generated games are deterministic, loadable, and solvable") {
  const std::string a = path_of("gen_a.json"), b = path_of("gen_b.json");
  REQUIRE(run_cli("gen --family stacked --depth 2 --actions 2 --seed 7 --out " + a) == 0);
  REQUIRE(run_cli("gen --family stacked --depth 2 --actions 2 --seed 7 --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));

  Game g = load_game(a);
  CHECK(validate_treeplex(g.tu).ok);
  CHECK(validate_treeplex(g.tv).ok);
  CHECK(g.tu.num_sequences() == 11);

  const std::string sol = path_of("gen_sol.json");
  REQUIRE(run_cli("solve --game " + a + " --solver fom --out " + sol + " 2> /dev/null") == 0);
  const json j = json::parse(slurp(sol));
  CHECK(j.at("converged").get<bool>());
  CHECK(j.at("gap").get<double>() <= 1e-9);
}

TEST_CASE("bench emits per-trial rows and aggregates with a config hash") {
  const std::string out = path_of("bench.csv");
  REQUIRE(run_cli("bench --depths 1 --sizes 3 --trials 2 --seed 3 --out " + out) == 0);
  std::istringstream in(slurp(out));
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "kind,game,phase,solver,seconds,iterations,achieved,seq_u,seq_v,seed,speedup,"
        "config_hash");
  int trials = 0, means = 0, stddevs = 0;
  std::string hash;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("trial,", 0) == 0) ++trials;
    if (line.rfind("mean,", 0) == 0) ++means;
    if (line.rfind("stddev,", 0) == 0) ++stddevs;
    const auto cut = line.rfind(',');
    REQUIRE(cut != std::string::npos);
    const std::string h = line.substr(cut + 1);
    if (hash.empty()) hash = h;
    CHECK(h == hash);
  }
  // Two trials, two phases, two solvers each; one mean and stddev per (phase, solver).
  CHECK(trials == 8);
  CHECK(means == 4);
  CHECK(stddevs == 4);
  CHECK_FALSE(hash.empty());
}

TEST_CASE("training with zero epochs writes back the zero initialization") {
  const std::string game = path_of("train_game.json");
  REQUIRE(run_cli("gen --family stacked --depth 1 --actions 3 --seed 5 --out " + game) == 0);
  Game g = load_game(game);

  std::vector<ObservedPlay> plays(3);
  for (int i = 0; i < 3; ++i) {
    plays[i].features = Vec::Ones(2);
    plays[i].records.push_back({0, 0, i});
  }
  spill(path_of("train.jsonl"), dataset_to_jsonl(plays));

  const std::string model = path_of("model0.json");
  REQUIRE(run_cli("train --game " + game + " --train-data " + path_of("train.jsonl") +
                  " --epochs 0 --out " + model + " 2> /dev/null") == 0);
  LambdaModel m = lambda_model_from_json(slurp(model));
  CHECK(m.weights.rows() == group_count(g));
  CHECK(m.weights.cols() == 2);
  CHECK(m.weights.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("training runs end to end and is reproducible per seed") {
  const std::string game = path_of("train_game2.json");
  REQUIRE(run_cli("gen --family stacked --depth 1 --actions 3 --seed 6 --out " + game) == 0);
  // Sampling walks the extensive tree, which the sequence-form JSON does not
  // carry; regenerate the same game in process for that step.
  Game g = gen_stacked({.depth = 1, .actions = 3, .seed = 6});

  LambdaModel truth = zero_model(g, 1, 1.0);
  auto data = sample_dataset(g, truth, [](std::mt19937_64&) { return Vec::Ones(1); }, 40, 13);
  spill(path_of("train2.jsonl"), dataset_to_jsonl({data.begin(), data.begin() + 30}));
  spill(path_of("test2.jsonl"), dataset_to_jsonl({data.begin() + 30, data.end()}));

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.05;
  cfg.optimizer = "sgd";
  cfg.seed = 4;
  spill(path_of("cfg.json"), train_config_to_json(cfg));

  const std::string m1 = path_of("model1.json"), m2 = path_of("model2.json");
  const std::string csv = path_of("loss.csv");
  REQUIRE(run_cli("train --game " + game + " --train-data " + path_of("train2.jsonl") +
                  " --test-data " + path_of("test2.jsonl") + " --config " + path_of("cfg.json") +
                  " --eps-lambda 1.0 --out " + m1 + " --out-csv " + csv + " 2> /dev/null") == 0);
  REQUIRE(run_cli("train --game " + game + " --train-data " + path_of("train2.jsonl") +
                  " --test-data " + path_of("test2.jsonl") + " --config " + path_of("cfg.json") +
                  " --eps-lambda 1.0 --out " + m2 + " 2> /dev/null") == 0);
  CHECK(slurp(m1) == slurp(m2));

  LambdaModel m = lambda_model_from_json(slurp(m1));
  CHECK(m.weights.lpNorm<Eigen::Infinity>() > 0.0);

  std::istringstream hist(slurp(csv));
  std::string line;
  REQUIRE(std::getline(hist, line));
  CHECK(line == "epoch,train_loss,test_loss,wall_seconds");
  int rows = 0;
  while (std::getline(hist, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("csv observations ingest into trainable json lines") {
  const std::string game = path_of("info.json");
  REQUIRE(run_cli("gen --family info --out " + game) == 0);

  spill(path_of("obs.csv"),
        "subject,episode,age_bin,education,stage,revealed,action\n"
        "0,0,2,GCSE,1,,reveal\n"
        "0,0,2,GCSE,2,7,guess-top\n"
        "1,4,5,Graduate,1,,guess-bottom\n"
        "2,0,1,PhD,1,,reveal\n");

  const std::string out = path_of("obs.jsonl");
  REQUIRE(run_cli("ingest --game " + game + " --csv " + path_of("obs.csv") + " --out " + out +
                  " 2> /dev/null") == 0);
  auto plays = dataset_from_jsonl(slurp(out));
  REQUIRE(plays.size() == 2);  // the PhD row is skipped
  CHECK(plays[0].records.size() == 2);
  CHECK(plays[1].records.size() == 1);
  CHECK(plays[0].features[2] == 1.0);
  CHECK(plays[0].features[8] == 1.0);
  CHECK(plays[1].features[5] == 1.0);
  CHECK(plays[1].features[11] == 1.0);
}

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlqre/bench.hpp"
#include "nlqre/fom_backward.hpp"
#include "nlqre/fom_forward.hpp"
#include "nlqre/game.hpp"
#include "nlqre/game_zoo.hpp"
#include "nlqre/learning.hpp"
#include "nlqre/newton.hpp"
#include "nlqre/rng.hpp"

namespace {

using nlqre::Game;
using nlqre::Vec;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << text;
}

// --lambda accepts either a scalar (uniform over all infosets) or a path to
// a JSON file {"u": [...], "v": [...]}.
nlqre::RationalityParams resolve_lambda(const Game& g, const std::string& source) {
  if (source.empty()) return g.lambda;
  try {
    size_t pos = 0;
    const double value = std::stod(source, &pos);
    if (pos == source.size()) {
      nlqre::RationalityParams lam;
      lam.u = Vec::Constant(g.tu.num_infosets(), value);
      lam.v = Vec::Constant(g.tv.num_infosets(), value);
      return lam;
    }
  } catch (const std::exception&) {
  }
  const json j = json::parse(read_file(source));
  nlqre::RationalityParams lam;
  const auto ju = j.at("u").get<std::vector<double>>();
  const auto jv = j.at("v").get<std::vector<double>>();
  lam.u = Eigen::Map<const Vec>(ju.data(), ju.size());
  lam.v = Eigen::Map<const Vec>(jv.data(), jv.size());
  if (lam.u.size() != g.tu.num_infosets() || lam.v.size() != g.tv.num_infosets())
    throw std::runtime_error("lambda file sizes do not match the game's infoset counts");
  return lam;
}

json vec_json(const Vec& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

int cmd_solve(const std::string& game_path, const std::string& lambda_source,
              const std::string& solver, double tau, double gap_tol, double residual_tol,
              const std::string& out_path) {
  const Game g = nlqre::load_game(game_path);
  const nlqre::RationalityParams lam = resolve_lambda(g, lambda_source);
  nlqre::EquilibriumSolution sol;
  if (solver == "newton") {
    nlqre::NewtonOptions opts;
    opts.tol = residual_tol;
    sol = nlqre::newton_solve(g, lam, opts);
  } else if (solver == "fom") {
    nlqre::FomOptions opts;
    opts.tau = tau;
    opts.gap_tol = gap_tol;
    sol = nlqre::fom_forward_solve(g, lam, opts);
  } else {
    throw std::runtime_error("unknown solver: " + solver);
  }
  json out{{"game", g.name},
           {"solver", solver},
           {"value", sol.value},
           {"iterations", sol.iterations},
           {"converged", sol.converged},
           {"u", vec_json(sol.u)},
           {"v", vec_json(sol.v)},
           {"behavioral_u", vec_json(nlqre::sequence_to_behavioral(g.tu, sol.u))},
           {"behavioral_v", vec_json(nlqre::sequence_to_behavioral(g.tv, sol.v))}};
  if (std::isfinite(sol.gap)) out["gap"] = sol.gap;
  if (std::isfinite(sol.residual)) out["residual"] = sol.residual;
  if (!sol.diagnostic.empty()) out["diagnostic"] = sol.diagnostic;
  write_output(out_path, out.dump(2) + "\n");
  if (!sol.converged) {
    std::cerr << "solver did not converge: " << sol.diagnostic << "\n";
    return 2;
  }
  return 0;
}

int cmd_gen(const std::string& family, int depth, int actions, int cards, std::uint64_t seed,
            bool swap_roles, const std::string& out_path) {
  Game g;
  if (family == "stacked") {
    nlqre::StackedGameSpec spec;
    spec.depth = depth;
    spec.actions = actions;
    spec.seed = seed;
    g = nlqre::gen_stacked(spec);
  } else if (family == "poker") {
    nlqre::PokerSpec spec;
    spec.deck.resize(cards);
    for (int i = 0; i < cards; ++i) spec.deck[i] = i + 1;
    spec.swap_roles = swap_roles;
    g = nlqre::gen_one_card_poker(spec);
  } else if (family == "info") {
    g = nlqre::gen_info_gathering(nlqre::InfoGatherSpec{}).game;
  } else {
    throw std::runtime_error("unknown game family: " + family);
  }
  write_output(out_path, nlqre::game_to_json(g) + "\n");
  return 0;
}

int cmd_bench(const std::string& depths, const std::string& sizes, int trials,
              std::uint64_t seed, double tau, const std::string& out_path) {
  nlqre::BenchSuite suite;
  auto parse_list = [](const std::string& s) {
    std::vector<int> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
  };
  if (!depths.empty()) suite.depths = parse_list(depths);
  if (!sizes.empty()) suite.sizes = parse_list(sizes);
  suite.trials = trials;
  suite.seed = seed;
  suite.forward_tau = tau;
  suite.backward_tau = tau;
  const auto records = nlqre::run_bench(suite);
  write_output(out_path, nlqre::bench_to_csv(records, suite));
  return 0;
}

int cmd_train(const std::string& game_path, const std::string& train_path,
              const std::string& test_path, const std::string& config_path,
              const std::string& init_path, int feature_dim, double eps_lambda,
              const std::string& out_model, const std::string& out_csv, int epochs_override,
              std::uint64_t seed_override, bool have_epochs, bool have_seed, int threads) {
  const Game g = nlqre::load_game(game_path);
  const auto train_set = nlqre::dataset_from_jsonl(read_file(train_path));
  const auto test_set =
      test_path.empty() ? std::vector<nlqre::ObservedPlay>{} : nlqre::dataset_from_jsonl(
                                                                   read_file(test_path));
  nlqre::TrainConfig cfg;
  if (!config_path.empty()) cfg = nlqre::train_config_from_json(read_file(config_path));
  if (have_epochs) cfg.epochs = epochs_override;
  if (have_seed) cfg.seed = seed_override;
  cfg.threads = threads;
  nlqre::LambdaModel init;
  if (!init_path.empty()) {
    init = nlqre::lambda_model_from_json(read_file(init_path));
  } else {
    if (train_set.empty()) throw std::runtime_error("empty training set");
    const int dim = feature_dim > 0 ? feature_dim : static_cast<int>(train_set[0].features.size());
    init = nlqre::zero_model(g, dim, eps_lambda);
  }
  const nlqre::TrainResult result = nlqre::train(g, train_set, test_set, init, cfg);
  for (const std::string& d : result.diagnostics) std::cerr << d << "\n";
  write_output(out_model, nlqre::lambda_model_to_json(result.model) + "\n");
  if (!out_csv.empty()) write_output(out_csv, nlqre::loss_history_to_csv(result.history));
  return result.aborted ? 3 : 0;
}

int cmd_ingest(const std::string& game_path, const std::string& csv_path,
               const std::string& out_path) {
  const Game g = nlqre::load_game(game_path);
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open file: " + csv_path);
  const nlqre::IngestResult result = nlqre::ingest_info_gathering_csv(in, g);
  for (const std::string& d : result.diagnostics) std::cerr << d << "\n";
  write_output(out_path, nlqre::dataset_to_jsonl(result.plays));
  std::cerr << "ingested " << result.plays.size() << " plays, " << result.diagnostics.size()
            << " skipped rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested-logit quantal response equilibrium solver and learner"};
  app.require_subcommand(1);

  std::string game_path, lambda_source, solver = "fom", out_path;
  double tau = 0.0, gap_tol = 1e-9, residual_tol = 1e-8;
  std::uint64_t seed = 0;
  int threads = 1;

  auto* solve = app.add_subcommand("solve", "Solve a game's equilibrium");
  solve->add_option("--game", game_path, "game JSON file")->required();
  solve->add_option("--lambda", lambda_source, "uniform value or JSON file {u:[],v:[]}");
  solve->add_option("--solver", solver, "newton | fom")->check(CLI::IsMember({"newton", "fom"}));
  solve->add_option("--tau", tau, "first-order step parameter (0 = automatic)");
  solve->add_option("--gap-tol", gap_tol, "duality gap target (fom)");
  solve->add_option("--residual-tol", residual_tol, "KKT residual target (newton)");
  solve->add_option("--out", out_path, "output path (default stdout)");

  std::string family = "stacked";
  int depth = 2, actions = 3, cards = 4;
  bool swap_roles = false;
  auto* gen = app.add_subcommand("gen", "Generate a game");
  gen->add_option("--family", family, "stacked | poker | info")
      ->check(CLI::IsMember({"stacked", "poker", "info"}));
  gen->add_option("--depth", depth, "stacked: number of stages");
  gen->add_option("--actions", actions, "stacked: actions per stage");
  gen->add_option("--cards", cards, "poker: deck size (values 1..cards)");
  gen->add_flag("--swap-roles", swap_roles, "poker: seat the max player first");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", out_path, "output path (default stdout)");

  std::string depths_list, sizes_list;
  int trials = 3;
  auto* bench = app.add_subcommand("bench", "Time Newton vs first-order solvers");
  bench->add_option("--depths", depths_list, "comma-separated depths (default 1,2)");
  bench->add_option("--sizes", sizes_list, "comma-separated action counts (default 3,5,10)");
  bench->add_option("--trials", trials, "trials per setting");
  bench->add_option("--seed", seed, "suite seed");
  bench->add_option("--tau", tau, "first-order step parameter (0 = automatic)");
  bench->add_option("--out", out_path, "output CSV path (default stdout)");

  std::string train_path, test_path, config_path, init_path, out_csv;
  int feature_dim = 0, epochs = 0;
  double eps_lambda = 1e-3;
  auto* train = app.add_subcommand("train", "Fit a feature-to-lambda model");
  train->add_option("--game", game_path, "game JSON file")->required();
  train->add_option("--train-data", train_path, "training set (JSON lines)")->required();
  train->add_option("--test-data", test_path, "test set (JSON lines)");
  train->add_option("--config", config_path, "TrainConfig JSON");
  train->add_option("--init", init_path, "initial model JSON");
  train->add_option("--feature-dim", feature_dim, "feature dimension for a zero init");
  train->add_option("--eps-lambda", eps_lambda, "rationality floor for a zero init");
  auto* epochs_opt = train->add_option("--epochs", epochs, "override config epochs");
  auto* seed_opt = train->add_option("--seed", seed, "override config seed");
  train->add_option("--threads", threads, "batch parallelism");
  train->add_option("--out", out_path, "trained model path (default stdout)");
  train->add_option("--out-csv", out_csv, "per-epoch loss CSV path");

  std::string csv_path;
  auto* ingest = app.add_subcommand("ingest", "Convert an observed-play CSV to JSON lines");
  ingest->add_option("--game", game_path, "game JSON file")->required();
  ingest->add_option("--csv", csv_path, "input CSV")->required();
  ingest->add_option("--out", out_path, "output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return cmd_solve(game_path, lambda_source, solver, tau, gap_tol, residual_tol, out_path);
    if (gen->parsed())
      return cmd_gen(family, depth, actions, cards, seed, swap_roles, out_path);
    if (bench->parsed())
      return cmd_bench(depths_list, sizes_list, trials, seed, tau, out_path);
    if (train->parsed())
      return cmd_train(game_path, train_path, test_path, config_path, init_path, feature_dim,
                       eps_lambda, out_path, out_csv, epochs, seed, epochs_opt->count() > 0,
                       seed_opt->count() > 0, threads);
    if (ingest->parsed()) return cmd_ingest(game_path, csv_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "nlqre/game.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace nlqre {

using nlohmann::json;

int Game::num_lambda_groups() const {
  int m = -1;
  for (int g : lambda_group_u) m = std::max(m, g);
  for (int g : lambda_group_v) m = std::max(m, g);
  return m + 1;
}

namespace {

json treeplex_to_json(const Treeplex& t) {
  json infosets = json::array();
  for (const Infoset& is : t.infosets()) {
    json j{{"parent_sequence", is.parent_sequence}, {"actions", is.actions}};
    if (!is.label.empty()) j["label"] = is.label;
    infosets.push_back(std::move(j));
  }
  return json{{"num_sequences", t.num_sequences()}, {"infosets", std::move(infosets)}};
}

Treeplex treeplex_from_json(const json& j) {
  std::vector<Infoset> infosets;
  for (const json& ij : j.at("infosets")) {
    Infoset is;
    is.parent_sequence = ij.at("parent_sequence").get<int>();
    is.actions = ij.at("actions").get<std::vector<int>>();
    if (ij.contains("label")) is.label = ij.at("label").get<std::string>();
    infosets.push_back(std::move(is));
  }
  return Treeplex(j.at("num_sequences").get<int>(), std::move(infosets));
}

Vec vec_from_json(const json& j) {
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

json vec_to_json(const Vec& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

}  // namespace

std::string game_to_json(const Game& g) {
  json payoffs = json::array();
  for (const PayoffEntry& e : g.payoff.entries())
    payoffs.push_back(json::array({e.row, e.col, e.value}));
  json j{{"treeplex_u", treeplex_to_json(g.tu)},
         {"treeplex_v", treeplex_to_json(g.tv)},
         {"payoffs", std::move(payoffs)},
         {"lambda", json{{"u", vec_to_json(g.lambda.u)}, {"v", vec_to_json(g.lambda.v)}}}};
  if (!g.name.empty()) j["name"] = g.name;
  if (!g.lambda_group_u.empty() || !g.lambda_group_v.empty())
    j["lambda_groups"] = json{{"u", g.lambda_group_u}, {"v", g.lambda_group_v}};
  return j.dump(2);
}

Game game_from_json(const std::string& text) {
  json j = json::parse(text);
  Game g;
  g.tu = treeplex_from_json(j.at("treeplex_u"));
  g.tv = treeplex_from_json(j.at("treeplex_v"));
  std::vector<PayoffEntry> entries;
  for (const json& e : j.at("payoffs")) {
    if (e.size() != 3) throw std::invalid_argument("payoff triplet must have 3 fields");
    entries.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
  }
  g.payoff = SparsePayoff(g.tu.num_sequences(), g.tv.num_sequences(), std::move(entries));
  g.lambda.u = vec_from_json(j.at("lambda").at("u"));
  g.lambda.v = vec_from_json(j.at("lambda").at("v"));
  if (g.lambda.u.size() != g.tu.num_infosets() || g.lambda.v.size() != g.tv.num_infosets())
    throw std::invalid_argument("lambda arrays must match infoset counts");
  if (j.contains("name")) g.name = j.at("name").get<std::string>();
  if (j.contains("lambda_groups")) {
    g.lambda_group_u = j.at("lambda_groups").at("u").get<std::vector<int>>();
    g.lambda_group_v = j.at("lambda_groups").at("v").get<std::vector<int>>();
  }
  ValidationReport ru = validate_treeplex(g.tu);
  ValidationReport rv = validate_treeplex(g.tv);
  if (!ru.ok || !rv.ok) {
    std::string msg = "invalid treeplex:";
    for (const auto& s : ru.issues) msg += " [u] " + s;
    for (const auto& s : rv.issues) msg += " [v] " + s;
    throw std::invalid_argument(msg);
  }
  return g;
}

Game load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open game file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return game_from_json(ss.str());
}

void save_game(const Game& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write game file: " + path);
  out << game_to_json(g) << "\n";
}

}  // namespace nlqre

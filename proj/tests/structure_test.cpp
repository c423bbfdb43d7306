#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include <Eigen/Dense>

#include "nlqre/game.hpp"
#include "nlqre/game_zoo.hpp"
#include "nlqre/payoff.hpp"
#include "nlqre/treeplex.hpp"
#include "support/oracles.hpp"

using namespace nlqre;
namespace oracle = nlqre::testing;

TEST_CASE("treeplex indexes sequences and infosets") {
  // Root infoset (2 actions) and a second infoset hanging off action 1.
  std::vector<Infoset> sets;
  sets.push_back({0, {1, 2}, "first"});
  sets.push_back({1, {3, 4}, "second"});
  Treeplex t(5, sets);

  CHECK(t.num_sequences() == 5);
  CHECK(t.num_infosets() == 2);
  CHECK(t.seq_infoset(0) == -1);
  CHECK(t.seq_parent(0) == -1);
  CHECK(t.seq_infoset(1) == 0);
  CHECK(t.seq_infoset(2) == 0);
  CHECK(t.seq_infoset(3) == 1);
  CHECK(t.seq_parent(3) == 1);
  CHECK(t.seq_parent(4) == 1);
  REQUIRE(t.children(0).size() == 1);
  CHECK(t.children(0)[0] == 0);
  REQUIRE(t.children(1).size() == 1);
  CHECK(t.children(1)[0] == 1);
  CHECK(t.children(2).empty());
  CHECK(validate_treeplex(t).ok);
}

TEST_CASE("validation reports structural defects") {
  // Two infosets claiming the same sequence.
  Treeplex dup(4, {{0, {1, 2}, ""}, {1, {2, 3}, ""}});
  auto rep = validate_treeplex(dup);
  CHECK_FALSE(rep.ok);
  CHECK(rep.issues.size() >= 1);

  // Action sequence not after its parent.
  Treeplex order(4, {{0, {1, 2}, ""}, {3, {3, 3}, ""}});
  CHECK_FALSE(validate_treeplex(order).ok);

  // Empty infoset.
  Treeplex empty(3, {{0, {1, 2}, ""}, {1, {}, ""}});
  CHECK_FALSE(validate_treeplex(empty).ok);

  // Unclaimed sequence.
  Treeplex orphan(4, {{0, {1, 2}, ""}});
  CHECK_FALSE(validate_treeplex(orphan).ok);

  // Infoset listed before the one owning its parent sequence.
  Treeplex back(5, {{3, {4, 4}, ""}, {0, {1, 2, 3}, ""}});
  CHECK_FALSE(validate_treeplex(back).ok);

  CHECK_THROWS_AS(Treeplex(3, {{0, {1, 7}, ""}}), std::invalid_argument);
  CHECK_THROWS_AS(Treeplex(3, {{5, {1, 2}, ""}}), std::invalid_argument);
}

TEST_CASE("random treeplexes satisfy flow constraints and round-trip") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    Treeplex t = oracle::random_treeplex(rng, 2 + trial, 4);
    REQUIRE(validate_treeplex(t).ok);
    const Vec u = oracle::random_interior_plan(t, rng);

    CHECK(constraint_residual(t, u) < 1e-14);
    // Against the dense constraint matrix.
    Eigen::MatrixXd e = oracle::full_constraints(t);
    Vec target = Vec::Zero(e.rows());
    target[0] = 1.0;
    CHECK((e * u - target).lpNorm<Eigen::Infinity>() < 1e-14);

    const Vec b = sequence_to_behavioral(t, u);
    const Vec u2 = behavioral_to_sequence(t, b);
    CHECK((u - u2).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("behavioral conversion rejects malformed input") {
  Treeplex t(3, {{0, {1, 2}, ""}});
  Vec neg(3);
  neg << 1.0, -0.25, 1.25;
  CHECK_THROWS_AS(behavioral_to_sequence(t, neg), std::invalid_argument);
  Vec short_vec(2);
  short_vec << 1.0, 1.0;
  CHECK_THROWS_AS(behavioral_to_sequence(t, short_vec), std::invalid_argument);
  Vec unnorm(3);
  unnorm << 1.0, 0.5, 0.6;
  CHECK_THROWS_AS(behavioral_to_sequence(t, unnorm), std::invalid_argument);

  Treeplex chain(5, {{0, {1, 2}, ""}, {1, {3, 4}, ""}});
  Vec zero_parent(5);
  zero_parent << 1.0, 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(sequence_to_behavioral(chain, zero_parent), std::invalid_argument);
}

TEST_CASE("uniform behavioral puts equal mass on every action") {
  std::mt19937_64 rng(7);
  Treeplex t = oracle::random_treeplex(rng, 6, 5);
  const Vec b = uniform_behavioral(t);
  CHECK(b[0] == 1.0);
  for (int h = 0; h < t.num_infosets(); ++h) {
    const Infoset& is = t.infoset(h);
    for (int a : is.actions) CHECK(b[a] == doctest::Approx(1.0 / is.actions.size()));
  }
}

TEST_CASE("sparse payoff matches dense algebra") {
  std::mt19937_64 rng(99);
  std::vector<PayoffEntry> entries;
  const int rows = 9, cols = 7;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (uniform01(rng) < 0.4) entries.push_back({i, j, uniform_in(rng, -5.0, 5.0)});
  SparsePayoff p(rows, cols, entries);

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& e : entries) d(e.row, e.col) = e.value;
  CHECK((Eigen::MatrixXd(p.to_eigen()) - d).norm() < 1e-15);

  Vec x = Vec::Random(cols), y = Vec::Random(rows);
  CHECK((p.apply(x, false) - d * x).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((p.apply(y, true) - d.transpose() * y).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(p.quadratic(y, x) == doctest::Approx(y.dot(d * x)).epsilon(1e-12));
}

TEST_CASE("sparse payoff rejects duplicate coordinates") {
  std::vector<PayoffEntry> entries = {{1, 1, 2.0}, {1, 1, 3.0}};
  CHECK_THROWS_AS(SparsePayoff(3, 3, entries), std::invalid_argument);
}

TEST_CASE("operator norm estimate brackets the spectral norm") {
  // Known spectrum: the padded estimate must land at 1.15 * 3.
  std::vector<PayoffEntry> diag = {{0, 0, 3.0}, {1, 1, -2.0}, {2, 2, 1.0}};
  SparsePayoff p(3, 3, diag);
  CHECK(p.operator_norm_estimate() == doctest::Approx(1.15 * 3.0).epsilon(1e-9));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<PayoffEntry> entries;
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 8; ++j)
        if (uniform01(rng) < 0.6) entries.push_back({i, j, uniform_in(rng, -3.0, 3.0)});
    SparsePayoff q(12, 8, entries);
    Eigen::MatrixXd d = Eigen::MatrixXd(q.to_eigen());
    const double sigma = d.jacobiSvd().singularValues()[0];
    const double est = q.operator_norm_estimate();
    CHECK(est >= sigma * 0.9999);
    CHECK(est <= sigma * 1.1501);
  }
}

TEST_CASE("game json serialization round-trips") {
  Game g = gen_stacked({.depth = 2, .actions = 2, .seed = 31});
  const std::string text = game_to_json(g);
  Game h = game_from_json(text);

  CHECK(h.tu.num_sequences() == g.tu.num_sequences());
  CHECK(h.tv.num_infosets() == g.tv.num_infosets());
  REQUIRE(h.payoff.entries().size() == g.payoff.entries().size());
  for (size_t i = 0; i < g.payoff.entries().size(); ++i) {
    CHECK(h.payoff.entries()[i].row == g.payoff.entries()[i].row);
    CHECK(h.payoff.entries()[i].col == g.payoff.entries()[i].col);
    CHECK(h.payoff.entries()[i].value == doctest::Approx(g.payoff.entries()[i].value));
  }
  CHECK((h.lambda.u - g.lambda.u).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((h.lambda.v - g.lambda.v).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(h.lambda_group_u == g.lambda_group_u);
  for (int i = 0; i < g.tu.num_infosets(); ++i)
    CHECK(h.tu.infoset(i).actions == g.tu.infoset(i).actions);

  const std::string path = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                           "/structure_roundtrip.json";
  save_game(g, path);
  Game k = load_game(path);
  CHECK(game_to_json(k) == text);
  std::remove(path.c_str());
}

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlqre/game.hpp"
#include "nlqre/grad_layer.hpp"

namespace nlqre {

// Affine feature-to-rationality model with weight tying: every infoset h
// belongs to a group g(h) and lambda_h = weights.row(g(h)) . features +
// eps_lambda. Weight rows are shared across players when the game ties them.
struct LambdaModel {
  Eigen::MatrixXd weights;  // groups x feature dimension
  double eps_lambda = 1e-3;
};

// Group id of an infoset; identity mapping (u infosets first) when the game
// declares no tying.
int infoset_group(const Game& g, int player, int infoset);
int group_count(const Game& g);

LambdaModel zero_model(const Game& g, int feature_dim, double eps_lambda = 1e-3);

// Throws std::domain_error if any resulting lambda is nonpositive.
RationalityParams lambda_forward(const Game& g, const LambdaModel& m, const Vec& features);

// Adam with bias correction; returns the additive step for the weights.
struct AdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

Eigen::MatrixXd adam_step(AdamState& state, const Eigen::MatrixXd& gradient, double lr);

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-4;
  int epochs = 30;
  std::string optimizer = "adam";  // "adam" | "sgd"
  std::uint64_t seed = 0;
  // Stop after any epoch whose test loss reaches this target (0 disables).
  double stop_below_test_loss = 0.0;
  double train_gap_tol = 1e-6;  // forward duality gap during training
  double test_gap_tol = 1e-9;   // evaluation solves, so reported losses are solver-noise-free
  double backward_tol = 1e-8;
  double forward_tau = 0.0;   // <= 0 picks the step size automatically
  double backward_tau = 0.0;  // <= 0 picks the step size automatically
  int threads = 1;
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-play loss over the epoch's batches
  double test_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  LambdaModel model;
  std::vector<EpochStats> history;
  std::vector<std::string> diagnostics;
  bool aborted = false;
};

// Minibatch SGD/Adam over the model weights: per batch, group plays sharing
// a feature vector, solve the equilibrium once per group, backpropagate the
// summed log-loss gradient, and chain into weight space. Deterministic for a
// fixed seed; with threads > 1 only floating-point summation order changes.
TrainResult train(const Game& g, const std::vector<ObservedPlay>& train_set,
                  const std::vector<ObservedPlay>& test_set, const LambdaModel& init,
                  const TrainConfig& cfg);

// Mean per-play log loss of a model on a dataset at the given duality gap.
double evaluate_loss(const Game& g, const LambdaModel& m,
                     const std::vector<ObservedPlay>& dataset, double gap_tol, int threads = 1);

// Draw features, solve the equilibrium tightly, and sample one joint
// trajectory per play by walking the behavioral strategies and chance.
using FeatureSampler = std::function<Vec(std::mt19937_64&)>;

std::vector<ObservedPlay> sample_dataset(const Game& g, const LambdaModel& m,
                                         const FeatureSampler& draw_features, int n,
                                         std::uint64_t seed);

// One trajectory per line: {"features": [...], "records": [{"player":..,
// "infoset":.., "action":..}, ...]}.
std::string dataset_to_jsonl(const std::vector<ObservedPlay>& plays);
std::vector<ObservedPlay> dataset_from_jsonl(const std::string& text);

// Weights as a row-major nested array plus the floor constant.
std::string lambda_model_to_json(const LambdaModel& m);
LambdaModel lambda_model_from_json(const std::string& text);

std::string loss_history_to_csv(const std::vector<EpochStats>& history);

}  // namespace nlqre

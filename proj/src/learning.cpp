#include "nlqre/learning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "nlqre/fom_backward.hpp"
#include "nlqre/fom_forward.hpp"
#include "nlqre/game_tree.hpp"
#include "nlqre/newton.hpp"

namespace nlqre {

using nlohmann::json;

int infoset_group(const Game& g, int player, int infoset) {
  const std::vector<int>& map = player == 0 ? g.lambda_group_u : g.lambda_group_v;
  if (!map.empty()) return map[infoset];
  return player == 0 ? infoset : g.tu.num_infosets() + infoset;
}

int group_count(const Game& g) {
  if (g.lambda_group_u.empty() && g.lambda_group_v.empty())
    return g.tu.num_infosets() + g.tv.num_infosets();
  return g.num_lambda_groups();
}

LambdaModel zero_model(const Game& g, int feature_dim, double eps_lambda) {
  LambdaModel m;
  m.weights = Eigen::MatrixXd::Zero(group_count(g), feature_dim);
  m.eps_lambda = eps_lambda;
  return m;
}

namespace {

RationalityParams lambda_raw(const Game& g, const LambdaModel& m, const Vec& features) {
  if (features.size() != m.weights.cols())
    throw std::invalid_argument("lambda_forward: feature dimension mismatch");
  RationalityParams out;
  out.u = Vec(g.tu.num_infosets());
  out.v = Vec(g.tv.num_infosets());
  for (int h = 0; h < g.tu.num_infosets(); ++h)
    out.u[h] = m.weights.row(infoset_group(g, 0, h)).dot(features) + m.eps_lambda;
  for (int h = 0; h < g.tv.num_infosets(); ++h)
    out.v[h] = m.weights.row(infoset_group(g, 1, h)).dot(features) + m.eps_lambda;
  return out;
}

}  // namespace

RationalityParams lambda_forward(const Game& g, const LambdaModel& m, const Vec& features) {
  RationalityParams out = lambda_raw(g, m, features);
  const double lo = std::min(out.u.size() ? out.u.minCoeff() : 1.0,
                             out.v.size() ? out.v.minCoeff() : 1.0);
  if (!(lo > 0.0) || !std::isfinite(lo))
    throw std::domain_error("lambda_forward: rationality parameter must be positive and finite");
  return out;
}

Eigen::MatrixXd adam_step(AdamState& state, const Eigen::MatrixXd& gradient, double lr) {
  if (state.t == 0) {
    state.m = Eigen::MatrixXd::Zero(gradient.rows(), gradient.cols());
    state.v = Eigen::MatrixXd::Zero(gradient.rows(), gradient.cols());
  }
  ++state.t;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * gradient;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * gradient.cwiseProduct(gradient);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const Eigen::ArrayXXd mhat = state.m.array() / c1;
  const Eigen::ArrayXXd vhat = state.v.array() / c2;
  return (-lr) * (mhat / (vhat.sqrt() + state.eps)).matrix();
}

namespace {

std::string feature_key(const Vec& f) {
  return std::string(reinterpret_cast<const char*>(f.data()), f.size() * sizeof(double));
}

struct WarmStart {
  Vec u;
  Vec v;
  bool set = false;
};

using WarmCache = std::unordered_map<std::string, WarmStart>;

struct GroupTask {
  Vec features;
  std::vector<int> members;  // dataset indices
  WarmStart* warm = nullptr;
};

// Deterministic grouping: groups appear in order of first occurrence.
std::vector<GroupTask> group_by_features(const std::vector<ObservedPlay>& data,
                                         const std::vector<int>& indices, WarmCache& cache) {
  std::vector<GroupTask> groups;
  std::unordered_map<std::string, size_t> slot;
  for (int idx : indices) {
    const std::string key = feature_key(data[idx].features);
    const auto [it, fresh] = slot.try_emplace(key, groups.size());
    if (fresh) {
      groups.push_back({data[idx].features, {}, &cache[key]});
    }
    groups[it->second].members.push_back(idx);
  }
  return groups;
}

void run_slots(int n_slots, int threads, const std::function<void(int)>& work) {
  const int n_threads = std::max(1, std::min(threads, n_slots));
  if (n_threads == 1) {
    for (int s = 0; s < n_slots; ++s) work(s);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&, t] {
      for (int s = t; s < n_slots; s += n_threads) work(s);
    });
  for (auto& th : pool) th.join();
}

struct GroupResult {
  double loss_sum = 0.0;
  int finite_count = 0;
  Vec grad_u;  // summed loss gradients over finite members
  Vec grad_v;
  Vec u;  // group equilibrium, kept for the backward pass
  Vec v;
  RationalityParams lambda;
  bool solved = false;
  std::vector<std::string> diagnostics;
};

GroupResult solve_and_score(const Game& g, const LambdaModel& model, const GroupTask& task,
                            const std::vector<ObservedPlay>& data, double gap_tol, double tau,
                            bool want_grads) {
  GroupResult res;
  res.lambda = lambda_raw(g, model, task.features);
  const double lo = std::min(res.lambda.u.size() ? res.lambda.u.minCoeff() : 1.0,
                             res.lambda.v.size() ? res.lambda.v.minCoeff() : 1.0);
  if (!std::isfinite(lo)) {
    res.diagnostics.push_back("non-finite lambda for a feature vector; group skipped");
    return res;
  }
  if (lo <= 0.0) {
    // Keep the solver domain valid for feature vectors the projection guard
    // has not seen; logged, never silent.
    const double floor = model.eps_lambda / 2.0;
    res.lambda.u = res.lambda.u.cwiseMax(floor);
    res.lambda.v = res.lambda.v.cwiseMax(floor);
    res.diagnostics.push_back("nonpositive lambda floored to eps_lambda/2 for a solve");
  }
  FomOptions opts;
  opts.tau = tau;
  opts.gap_tol = gap_tol;
  const bool warm = task.warm && task.warm->set;
  EquilibriumSolution sol = fom_forward_solve(g, res.lambda, opts, warm ? &task.warm->u : nullptr,
                                              warm ? &task.warm->v : nullptr);
  if (task.warm) {
    task.warm->u = sol.u;
    task.warm->v = sol.v;
    task.warm->set = true;
  }
  if (!sol.converged) {
    res.diagnostics.push_back("forward solve did not converge (gap " + std::to_string(sol.gap) +
                              "); group of " + std::to_string(task.members.size()) + " skipped");
    return res;
  }
  res.solved = true;
  res.u = std::move(sol.u);
  res.v = std::move(sol.v);
  if (want_grads) {
    res.grad_u = Vec::Zero(g.tu.num_sequences());
    res.grad_v = Vec::Zero(g.tv.num_sequences());
  }
  for (int idx : task.members) {
    LogLossResult ll = log_loss(g, res.u, res.v, data[idx]);
    if (!ll.finite) {
      res.diagnostics.push_back("play " + std::to_string(idx) + ": " + ll.diagnostic);
      continue;
    }
    res.loss_sum += ll.loss;
    ++res.finite_count;
    if (want_grads) {
      res.grad_u += ll.grad_u;
      res.grad_v += ll.grad_v;
    }
  }
  return res;
}

}  // namespace

double evaluate_loss(const Game& g, const LambdaModel& m,
                     const std::vector<ObservedPlay>& dataset, double gap_tol, int threads) {
  if (dataset.empty()) return 0.0;
  WarmCache cache;
  std::vector<int> all(dataset.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  std::vector<GroupTask> groups = group_by_features(dataset, all, cache);
  std::vector<GroupResult> results(groups.size());
  run_slots(static_cast<int>(groups.size()), threads, [&](int s) {
    results[s] = solve_and_score(g, m, groups[s], dataset, gap_tol, 0.0, false);
  });
  double total = 0.0;
  int count = 0;
  for (const GroupResult& r : results) {
    if (!r.solved) return std::numeric_limits<double>::infinity();
    total += r.loss_sum;
    count += r.finite_count;
  }
  if (count == 0) return std::numeric_limits<double>::infinity();
  return total / count;
}

TrainResult train(const Game& g, const std::vector<ObservedPlay>& train_set,
                  const std::vector<ObservedPlay>& test_set, const LambdaModel& init,
                  const TrainConfig& cfg) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (cfg.batch_size <= 0 || cfg.learning_rate <= 0.0 || cfg.epochs < 0)
    throw std::invalid_argument("train: batch size and learning rate must be positive");
  if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
    throw std::invalid_argument("train: unknown optimizer '" + cfg.optimizer + "'");
  for (const ObservedPlay& p : train_set)
    if (p.features.size() != init.weights.cols())
      throw std::invalid_argument("train: feature dimension mismatch in training set");

  TrainResult out;
  out.model = init;
  AdamState adam;
  std::mt19937_64 rng(cfg.seed);
  WarmCache train_cache, test_cache;
  const int n_groups_w = static_cast<int>(init.weights.rows());
  const int feat_dim = static_cast<int>(init.weights.cols());

  std::vector<int> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int epoch_count = 0;

    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<int> batch(order.begin() + start, order.begin() + stop);
      std::vector<GroupTask> groups = group_by_features(train_set, batch, train_cache);
      std::vector<GroupResult> results(groups.size());
      std::vector<Eigen::MatrixXd> grads(groups.size());
      run_slots(static_cast<int>(groups.size()), cfg.threads, [&](int s) {
        results[s] = solve_and_score(g, out.model, groups[s], train_set, cfg.train_gap_tol,
                                     cfg.forward_tau, true);
        GroupResult& r = results[s];
        grads[s] = Eigen::MatrixXd::Zero(n_groups_w, feat_dim);
        if (!r.solved || r.finite_count == 0) return;
        try {
          BackwardProblem bp = make_backward_problem(g, r.lambda, r.u, r.v, r.grad_u, r.grad_v);
          BackwardFomOptions bo;
          bo.tau = cfg.backward_tau;
          bo.tol = cfg.backward_tol;
          BackwardSolution bs = fom_backward_solve(g, bp, bo);
          if (!bs.converged)
            r.diagnostics.push_back("backward solve stopped at residual " +
                                    std::to_string(bs.residual));
          if (!bs.y_u.allFinite() || !bs.y_v.allFinite())
            throw std::runtime_error("backward solution is not finite");
          LambdaGradient dl = grad_lambda(g, r.u, r.v, bs.y_u, bs.y_v);
          for (int h = 0; h < g.tu.num_infosets(); ++h)
            grads[s].row(infoset_group(g, 0, h)) += dl.u[h] * groups[s].features.transpose();
          for (int h = 0; h < g.tv.num_infosets(); ++h)
            grads[s].row(infoset_group(g, 1, h)) += dl.v[h] * groups[s].features.transpose();
        } catch (const std::exception& e) {
          // Plans can underflow to exact zeros at extreme rationality, which
          // the sensitivity system cannot be built on; drop the gradient.
          grads[s].setZero();
          r.diagnostics.push_back("backward pass skipped for a group: " + std::string(e.what()));
        }
      });

      Eigen::MatrixXd batch_grad = Eigen::MatrixXd::Zero(n_groups_w, feat_dim);
      int batch_count = 0;
      for (size_t s = 0; s < groups.size(); ++s) {
        for (const std::string& d : results[s].diagnostics) out.diagnostics.push_back(d);
        epoch_loss += results[s].loss_sum;
        epoch_count += results[s].finite_count;
        batch_count += results[s].finite_count;
        batch_grad += grads[s];
      }
      if (batch_count == 0) continue;
      batch_grad /= static_cast<double>(batch_count);
      if (cfg.optimizer == "adam")
        out.model.weights += adam_step(adam, batch_grad, cfg.learning_rate);
      else
        out.model.weights -= cfg.learning_rate * batch_grad;
      if (!out.model.weights.allFinite()) {
        out.aborted = true;
        out.diagnostics.push_back("training aborted: non-finite weights at epoch " +
                                  std::to_string(epoch));
        return out;
      }

      // Projection guard: keep lambda(f) >= eps_lambda/2 on this batch's
      // features by shrinking offending weight rows toward zero.
      for (const GroupTask& t : groups) {
        for (int r = 0; r < n_groups_w; ++r) {
          const double dot = out.model.weights.row(r).dot(t.features);
          if (dot < -out.model.eps_lambda / 2.0) {
            out.model.weights.row(r) *= (-out.model.eps_lambda / 2.0) / dot;
            out.diagnostics.push_back("weight row " + std::to_string(r) +
                                      " shrunk to keep lambda positive");
          }
        }
      }
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = epoch_count > 0 ? epoch_loss / epoch_count
                                    : std::numeric_limits<double>::infinity();
    {
      std::vector<int> all(test_set.size());
      for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      std::vector<GroupTask> tgroups = group_by_features(test_set, all, test_cache);
      std::vector<GroupResult> tres(tgroups.size());
      run_slots(static_cast<int>(tgroups.size()), cfg.threads, [&](int s) {
        tres[s] = solve_and_score(g, out.model, tgroups[s], test_set, cfg.test_gap_tol,
                                  cfg.forward_tau, false);
      });
      double total = 0.0;
      int count = 0;
      bool ok = true;
      for (const GroupResult& r : tres) {
        if (!r.solved) ok = false;
        total += r.loss_sum;
        count += r.finite_count;
      }
      st.test_loss = (ok && count > 0) ? total / count
                                       : (test_set.empty()
                                              ? 0.0
                                              : std::numeric_limits<double>::infinity());
    }
    st.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.history.push_back(st);
    if (!std::isfinite(st.train_loss) || st.train_loss > 1e10) {
      out.aborted = true;
      out.diagnostics.push_back("training aborted: exploding loss at epoch " +
                                std::to_string(epoch));
      break;
    }
    if (cfg.stop_below_test_loss > 0.0 && st.test_loss <= cfg.stop_below_test_loss) {
      out.diagnostics.push_back("early stop: test loss reached target at epoch " +
                                std::to_string(epoch));
      break;
    }
  }
  return out;
}

std::vector<ObservedPlay> sample_dataset(const Game& g, const LambdaModel& m,
                                         const FeatureSampler& draw_features, int n,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ObservedPlay> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Vec f = draw_features(rng);
    const RationalityParams lambda = lambda_forward(g, m, f);
    EquilibriumSolution sol = newton_solve(g, lambda);
    if (!sol.converged) {
      FomOptions opts;
      opts.gap_tol = 1e-12;
      sol = fom_forward_solve(g, lambda, opts);
      if (!sol.converged)
        throw std::runtime_error("sample_dataset: equilibrium solve failed on sample " +
                                 std::to_string(i));
    }
    const Vec bu = sequence_to_behavioral(g.tu, sol.u);
    const Vec bv = sequence_to_behavioral(g.tv, sol.v);
    ObservedPlay play = sample_trajectory(g, bu, bv, rng);
    play.features = f;
    out.push_back(std::move(play));
  }
  return out;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j{{"batch_size", cfg.batch_size},
         {"learning_rate", cfg.learning_rate},
         {"epochs", cfg.epochs},
         {"optimizer", cfg.optimizer},
         {"seed", cfg.seed},
         {"train_gap_tol", cfg.train_gap_tol},
         {"test_gap_tol", cfg.test_gap_tol},
         {"backward_tol", cfg.backward_tol},
         {"forward_tau", cfg.forward_tau},
         {"backward_tau", cfg.backward_tau},
         {"threads", cfg.threads},
         {"stop_below_test_loss", cfg.stop_below_test_loss}};
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  json j = json::parse(text);
  TrainConfig cfg;
  if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
  if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  if (j.contains("optimizer")) cfg.optimizer = j.at("optimizer").get<std::string>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("train_gap_tol")) cfg.train_gap_tol = j.at("train_gap_tol").get<double>();
  if (j.contains("test_gap_tol")) cfg.test_gap_tol = j.at("test_gap_tol").get<double>();
  if (j.contains("backward_tol")) cfg.backward_tol = j.at("backward_tol").get<double>();
  if (j.contains("forward_tau")) cfg.forward_tau = j.at("forward_tau").get<double>();
  if (j.contains("backward_tau")) cfg.backward_tau = j.at("backward_tau").get<double>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("stop_below_test_loss"))
    cfg.stop_below_test_loss = j.at("stop_below_test_loss").get<double>();
  return cfg;
}

std::string dataset_to_jsonl(const std::vector<ObservedPlay>& plays) {
  std::ostringstream out;
  for (const ObservedPlay& p : plays) {
    json records = json::array();
    for (const PlayRecord& r : p.records)
      records.push_back(json{{"player", r.player}, {"infoset", r.infoset}, {"action", r.action}});
    std::vector<double> f(p.features.data(), p.features.data() + p.features.size());
    out << json{{"features", f}, {"records", std::move(records)}}.dump() << '\n';
  }
  return out.str();
}

std::vector<ObservedPlay> dataset_from_jsonl(const std::string& text) {
  std::vector<ObservedPlay> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ObservedPlay p;
    const auto f = j.at("features").get<std::vector<double>>();
    p.features = Eigen::Map<const Vec>(f.data(), f.size());
    for (const json& r : j.at("records"))
      p.records.push_back({r.at("player").get<int>(), r.at("infoset").get<int>(),
                           r.at("action").get<int>()});
    out.push_back(std::move(p));
  }
  return out;
}

std::string lambda_model_to_json(const LambdaModel& m) {
  json rows = json::array();
  for (int r = 0; r < m.weights.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.weights.cols(); ++c) row.push_back(m.weights(r, c));
    rows.push_back(std::move(row));
  }
  return json{{"weights", std::move(rows)}, {"eps_lambda", m.eps_lambda}}.dump(2);
}

LambdaModel lambda_model_from_json(const std::string& text) {
  json j = json::parse(text);
  LambdaModel m;
  m.eps_lambda = j.at("eps_lambda").get<double>();
  const json& rows = j.at("weights");
  const int nr = static_cast<int>(rows.size());
  const int nc = nr > 0 ? static_cast<int>(rows.at(0).size()) : 0;
  m.weights = Eigen::MatrixXd::Zero(nr, nc);
  for (int r = 0; r < nr; ++r) {
    if (static_cast<int>(rows.at(r).size()) != nc)
      throw std::invalid_argument("model weights must be rectangular");
    for (int c = 0; c < nc; ++c) m.weights(r, c) = rows.at(r).at(c).get<double>();
  }
  return m;
}

std::string loss_history_to_csv(const std::vector<EpochStats>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,test_loss,wall_seconds\n";
  out.precision(17);
  for (const EpochStats& s : history)
    out << s.epoch << ',' << s.train_loss << ',' << s.test_loss << ',' << s.wall_seconds << '\n';
  return out.str();
}

}  // namespace nlqre

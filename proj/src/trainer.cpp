#include "d2l/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <numeric>

#include "d2l/error.hpp"
#include "d2l/lid.hpp"
#include "d2l/metrics_io.hpp"
#include "rng.hpp"

namespace d2l {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

bool detect_turning_point(LidTrajectory& traj, int epoch) {
  const int w = traj.window;
  if (traj.turning_epoch >= 0 || w < 1 || epoch < w || static_cast<std::size_t>(epoch) >= traj.scores.size())
    return false;
  const auto first = traj.scores.begin() + (epoch - w);
  const auto last = traj.scores.begin() + epoch;
  const double mean = std::accumulate(first, last, 0.0) / w;
  double ss = 0.0;
  for (auto it = first; it != last; ++it) ss += (*it - mean) * (*it - mean);
  const double denom = traj.std_kind == StdKind::Sample ? std::max(w - 1, 1) : w;
  const double sd = std::sqrt(ss / denom);
  if (traj.scores[static_cast<std::size_t>(epoch)] - mean > 2.0 * sd) {
    traj.turning_epoch = epoch - 1;
    return true;
  }
  return false;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be positive");
  if (window < 1 || (epochs > 1 && window > epochs - 1))
    throw Error(ErrorCode::InvalidConfig, "window must lie in [1, epochs-1]");
  if (lid_k < 2) throw Error(ErrorCode::InvalidConfig, "k must be at least 2");
  if (lid_batches < 1) throw Error(ErrorCode::InvalidConfig, "m must be at least 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be positive");
  if (hidden.empty()) throw Error(ErrorCode::InvalidConfig, "at least one hidden layer is required");
  if (!(beta_soft >= 0.0 && beta_soft <= 1.0) || !(beta_hard >= 0.0 && beta_hard <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "bootstrap betas must lie in [0,1]");
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw Error(ErrorCode::InvalidRate, "noise rate must lie in [0,1)");
  if (patience < 0) throw Error(ErrorCode::InvalidConfig, "patience must be nonnegative");
  optimizer.validate();
}

double epoch_lid_score(const Network& model, const Dataset& ds, int m, int k, int batch_size,
                       std::uint64_t seed, int epoch) {
  if (m < 1 || batch_size < 1) throw Error(ErrorCode::InvalidConfig, "m and batch size must be positive");
  const std::size_t n = ds.size();
  const std::size_t take = std::min(n, static_cast<std::size_t>(batch_size));
  std::vector<std::size_t> order(n);
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    auto rng = detail::make_rng(seed, {detail::kLidStream, static_cast<std::uint64_t>(epoch),
                                       static_cast<std::uint64_t>(j)});
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    const std::vector<std::size_t> rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    const ForwardPass pass = model.forward(gather_rows(ds.features, rows));
    total += batch_lid_mean(pass.penultimate(), static_cast<std::size_t>(k));
  }
  return total / m;
}

TrainResult run_training(const Dataset& train, const Dataset& test, const TrainConfig& cfg,
                         const EpochCallback& on_epoch) {
  cfg.validate();
  train.validate();
  test.validate();
  if (train.dim() != test.dim() || train.class_count != test.class_count)
    throw Error(ErrorCode::ShapeMismatch, "train and test sets differ in dimension or class count");

  std::vector<std::size_t> widths{train.dim()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(static_cast<std::size_t>(train.class_count));

  TrainResult result{Network(widths, cfg.seed), {}, {}, {}, {}};
  Network& model = result.model;
  Sgd opt(model);
  LidTrajectory& traj = result.trajectory;
  traj.window = cfg.window;
  traj.std_kind = cfg.std_kind;

  const Matrix raw = one_hot(train.observed_labels, train.class_count);
  std::optional<TransitionMatrix> transition;
  if (cfg.strategy == StrategyKind::Forward || cfg.strategy == StrategyKind::Backward)
    transition = symmetric_transition(train.class_count, cfg.noise_rate);

  const Dataset& lid_source = cfg.lid_on_test ? test : train;
  const bool is_d2l = cfg.strategy == StrategyKind::D2L;
  std::deque<Checkpoint> history;
  double alpha = 1.0;
  double best_test = -1.0;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& rows : batches(train.size(), static_cast<std::size_t>(cfg.batch_size), cfg.seed,
                                    static_cast<std::uint64_t>(epoch))) {
      const Matrix x = gather_rows(train.features, rows);
      const Matrix y = gather_rows(raw, rows);
      const ForwardPass pass = model.forward(x);
      double loss = 0.0;
      Matrix dlogits;
      try {
        switch (cfg.strategy) {
          case StrategyKind::Forward:
            loss = forward_loss(pass.probs, y, *transition);
            dlogits = forward_loss_dlogits(pass.probs, y, *transition);
            break;
          case StrategyKind::Backward:
            loss = backward_loss(pass.probs, y, *transition);
            dlogits = backward_loss_dlogits(pass.probs, y, *transition);
            break;
          default: {
            Matrix targets;
            if (cfg.strategy == StrategyKind::BootSoft)
              targets = bootstrap_targets(y, pass.probs, cfg.beta_soft, false);
            else if (cfg.strategy == StrategyKind::BootHard)
              targets = bootstrap_targets(y, pass.probs, cfg.beta_hard, true);
            else
              targets = d2l_targets(y, pass.probs, alpha);
            loss = soft_cross_entropy(pass.probs, targets);
            dlogits = soft_cross_entropy_dlogits(pass.probs, targets);
            break;
          }
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss) throw;
        throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", strategy " +
                                                  std::string(to_string(cfg.strategy)) + ", lr " +
                                                  std::to_string(cfg.optimizer.lr_at(epoch)) +
                                                  ": training diverged");
      }
      opt.step(model, backprop(model, pass, dlogits, cfg.optimizer.weight_decay), cfg.optimizer, epoch);

      loss_sum += loss * static_cast<double>(rows.size());
      const auto predicted = argmax_rows(pass.probs);
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (predicted[i] == train.observed_labels[rows[i]]) ++correct;
    }

    const auto lid_start = Clock::now();
    const double lid =
        epoch_lid_score(model, lid_source, cfg.lid_batches, cfg.lid_k, cfg.batch_size, cfg.seed, epoch);
    result.timing.lid_seconds += seconds_since(lid_start);
    traj.scores.push_back(lid);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lid = lid;
    if (is_d2l && detect_turning_point(traj, epoch)) {
      const auto it = std::find_if(history.begin(), history.end(),
                                   [&](const Checkpoint& c) { return c.epoch == traj.turning_epoch; });
      if (it == history.end()) throw Error(ErrorCode::InvalidConfig, "no snapshot retained for the turning epoch");
      restore(model, opt, *it);
      rec.rolled_back = true;
    }
    if (is_d2l) alpha = alpha_update(traj.scores, epoch, cfg.epochs, traj.turning_epoch);
    rec.alpha = alpha;

    if (is_d2l && traj.turning_epoch < 0) {
      history.push_back(snapshot(model, opt, epoch));
      while (history.size() > static_cast<std::size_t>(cfg.window) + 1) history.pop_front();
    } else {
      history.clear();
    }

    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.test_acc = accuracy(model.predict(test.features), test.true_labels);
    result.timing.total_seconds += seconds_since(epoch_start);
    result.records.push_back(rec);
    if (on_epoch) on_epoch(rec, model, opt);

    if (cfg.patience > 0) {
      if (rec.test_acc > best_test) {
        best_test = rec.test_acc;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }
  result.momentum = opt.velocity();
  return result;
}

}  // namespace d2l

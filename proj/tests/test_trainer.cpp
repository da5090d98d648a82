#include <cmath>
#include <cstring>
#include <sstream>

#include "d2l/error.hpp"
#include "d2l/lid.hpp"
#include "d2l/metrics_io.hpp"
#include "d2l/trainer.hpp"
#include "doctest.h"

using namespace d2l;

namespace {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool same_model(const Network& a, const Network& b) {
  if (a.layers().size() != b.layers().size()) return false;
  for (std::size_t i = 0; i < a.layers().size(); ++i)
    if (!bitwise_equal(a.layers()[i].weights, b.layers()[i].weights) ||
        !bitwise_equal(a.layers()[i].bias, b.layers()[i].bias))
      return false;
  return true;
}

std::string csv(const std::vector<EpochRecord>& records) {
  std::ostringstream out;
  write_records_csv(out, records);
  return out.str();
}

LidTrajectory trajectory(std::vector<double> scores, int window) {
  LidTrajectory t;
  t.scores = std::move(scores);
  t.window = window;
  return t;
}

SplitDataset small_blobs(int classes, std::size_t n, std::uint64_t seed, double separation = 4.0) {
  return gen_manifold_blobs_split(
      {.d_intrinsic = 4, .d_ambient = 8, .classes = classes, .n = n, .seed = seed, .separation = separation}, 400);
}

TrainConfig quick_config(StrategyKind strategy, int epochs) {
  TrainConfig cfg;
  cfg.strategy = strategy;
  cfg.epochs = epochs;
  cfg.window = std::max(1, epochs / 4);
  cfg.lid_batches = 2;
  cfg.lid_k = 10;
  cfg.batch_size = 64;
  cfg.hidden = {32, 32};
  cfg.seed = 3;
  cfg.optimizer.lr_drops.clear();
  return cfg;
}

}  // namespace

TEST_CASE("turning point: hand-computed example fires with u = 4") {
  auto t = trajectory({10, 9, 8, 8, 8, 20}, 5);
  CHECK(detect_turning_point(t, 5));
  CHECK(t.turning_epoch == 4);
  // at most once
  CHECK_FALSE(detect_turning_point(t, 5));
  CHECK(t.turning_epoch == 4);
}

TEST_CASE("turning point: sample std variant also fires on the example") {
  auto t = trajectory({10, 9, 8, 8, 8, 20}, 5);
  t.std_kind = StdKind::Sample;
  CHECK(detect_turning_point(t, 5));
  CHECK(t.turning_epoch == 4);
}

TEST_CASE("turning point: threshold is two population standard deviations, strictly") {
  // window (8, 10): mean 9, population std 1 -> fires above 11 only
  auto at = trajectory({8, 10, 11}, 2);
  CHECK_FALSE(detect_turning_point(at, 2));
  auto above = trajectory({8, 10, 11.000001}, 2);
  CHECK(detect_turning_point(above, 2));
  CHECK(above.turning_epoch == 1);
}

TEST_CASE("turning point: constant and decreasing trajectories never fire") {
  auto flat = trajectory(std::vector<double>(40, 3.5), 5);
  auto down = trajectory({}, 5);
  for (int i = 0; i < 40; ++i) down.scores.push_back(20.0 - 0.4 * i);
  for (int i = 0; i < 40; ++i) {
    CHECK_FALSE(detect_turning_point(flat, i));
    CHECK_FALSE(detect_turning_point(down, i));
  }
  CHECK(flat.turning_epoch == -1);
  CHECK(down.turning_epoch == -1);
}

TEST_CASE("turning point: needs a full window") {
  auto t = trajectory({1, 1, 50}, 5);
  CHECK_FALSE(detect_turning_point(t, 2));
  CHECK(t.turning_epoch == -1);
}

TEST_CASE("epoch_lid_score with one batch is that batch's LID") {
  const auto data = small_blobs(2, 128, 1);
  const std::vector<std::size_t> widths{8, 32, 16, 2};
  const Network net(widths, 4);
  const double direct = batch_lid_mean(net.forward(data.train.features).penultimate(), 20);
  // the whole set is the single batch, in some order
  CHECK(epoch_lid_score(net, data.train, 1, 20, 128, 9) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("epoch_lid_score is seeded by (seed, epoch)") {
  const auto data = small_blobs(2, 1000, 1);
  const std::vector<std::size_t> widths{8, 32, 16, 2};
  const Network net(widths, 4);
  const double a = epoch_lid_score(net, data.train, 3, 20, 128, 9, 2);
  CHECK(a == epoch_lid_score(net, data.train, 3, 20, 128, 9, 2));
  CHECK(a != epoch_lid_score(net, data.train, 3, 20, 128, 9, 3));
  CHECK(a != epoch_lid_score(net, data.train, 3, 20, 128, 10, 2));
}

TEST_CASE("untrained network on 2-dim blobs scores between 1 and d_ambient") {
  const Dataset ds = gen_manifold_blobs({.d_intrinsic = 2, .d_ambient = 10, .classes = 3, .n = 1280, .seed = 5});
  const std::vector<std::size_t> widths{10, 64, 64, 3};
  const Network net(widths, 6);
  const double score = epoch_lid_score(net, ds, 10, 20, 128, 1);
  CHECK(score >= 1.0);
  CHECK(score <= 10.0);
}

TEST_CASE("cross-entropy fits clean separable blobs") {
  const auto data = gen_manifold_blobs_split({.d_intrinsic = 2, .d_ambient = 10, .classes = 2, .n = 2000, .seed = 2}, 400);
  TrainConfig cfg = quick_config(StrategyKind::CrossEntropy, 10);
  const auto result = run_training(data.train, data.test, cfg);
  REQUIRE(result.records.size() == 10);
  CHECK(result.records.back().train_acc >= 0.99);
  CHECK(accuracy(result.model.predict(data.train.features), data.train.true_labels) >= 0.99);
  for (const auto& r : result.records) {
    CHECK(r.alpha == 1.0);
    CHECK_FALSE(r.rolled_back);
  }
  CHECK(result.trajectory.scores.size() == 10);
  CHECK(result.timing.lid_seconds > 0.0);
  CHECK(result.timing.lid_seconds <= result.timing.total_seconds);
}

TEST_CASE("d2l without a turning point is bitwise cross-entropy") {
  const auto data = small_blobs(3, 900, 7);
  TrainConfig cfg = quick_config(StrategyKind::CrossEntropy, 6);
  cfg.window = 5;
  const auto ce = run_training(data.train, data.test, cfg);
  cfg.strategy = StrategyKind::D2L;
  const auto d2l = run_training(data.train, data.test, cfg);
  REQUIRE(d2l.trajectory.turning_epoch == -1);
  CHECK(csv(ce.records) == csv(d2l.records));
  CHECK(same_model(ce.model, d2l.model));
}

TEST_CASE("rollback restores the model of the turning epoch") {
  // noisy labels and a short window make the LID turn quickly
  SplitDataset data = gen_manifold_blobs_split(
      {.d_intrinsic = 8, .d_ambient = 16, .classes = 5, .n = 2000, .seed = 11, .separation = 1.0}, 400);
  data.train = inject_symmetric_noise(data.train, {0.4, 11});
  TrainConfig cfg = quick_config(StrategyKind::D2L, 30);
  cfg.window = 3;
  cfg.hidden = {64, 64};
  cfg.lid_k = 20;
  cfg.batch_size = 128;

  const Matrix probe = data.test.features.topRows(50);
  std::vector<Matrix> outputs;
  int rolled_at = -1;
  bool restored = false;
  const auto result = run_training(data.train, data.test, cfg, [&](const EpochRecord& r, const Network& m, const Sgd&) {
    outputs.push_back(m.predict(probe));
    if (r.rolled_back) {
      rolled_at = r.epoch;
      const int u = r.epoch - 1;
      restored = bitwise_equal(outputs.back(), outputs[static_cast<std::size_t>(u)]);
    }
  });
  REQUIRE(rolled_at >= 0);
  CHECK(restored);
  CHECK(result.trajectory.turning_epoch == rolled_at - 1);
  CHECK(result.trajectory.turning_epoch >= cfg.window - 1);

  int rollbacks = 0;
  for (const auto& r : result.records) {
    rollbacks += r.rolled_back;
    if (r.epoch < rolled_at) CHECK(r.alpha == 1.0);
    if (r.epoch >= rolled_at) {
      CHECK(r.alpha > 0.0);
      CHECK(r.alpha < 1.0);
    }
  }
  CHECK(rollbacks == 1);

  // the same run again is bitwise identical, rollback included
  const auto again = run_training(data.train, data.test, cfg);
  CHECK(csv(again.records) == csv(result.records));
  CHECK(same_model(again.model, result.model));

  // cross-entropy on the same data logs LIDs but never rolls back
  cfg.strategy = StrategyKind::CrossEntropy;
  const auto ce = run_training(data.train, data.test, cfg);
  for (const auto& r : ce.records) {
    CHECK_FALSE(r.rolled_back);
    CHECK(r.alpha == 1.0);
  }
  CHECK(ce.trajectory.turning_epoch == -1);
}

TEST_CASE("every strategy trains and logs one record per epoch") {
  auto data = small_blobs(3, 600, 2);
  data.train = inject_symmetric_noise(data.train, {0.2, 1});
  for (auto kind : {StrategyKind::CrossEntropy, StrategyKind::D2L, StrategyKind::BootSoft, StrategyKind::BootHard,
                    StrategyKind::Forward, StrategyKind::Backward}) {
    TrainConfig cfg = quick_config(kind, 4);
    cfg.noise_rate = 0.2;
    const auto r = run_training(data.train, data.test, cfg);
    CAPTURE(to_string(kind));
    CHECK(r.records.size() == 4);
    for (int e = 0; e < 4; ++e) CHECK(r.records[static_cast<std::size_t>(e)].epoch == e);
    CHECK(r.records.back().test_acc > 0.5);
  }
}

TEST_CASE("patience stops early") {
  const auto data = small_blobs(2, 600, 3);
  TrainConfig cfg = quick_config(StrategyKind::CrossEntropy, 30);
  cfg.patience = 2;
  const auto r = run_training(data.train, data.test, cfg);
  CHECK(r.records.size() < 30);
  CHECK(r.records.back().test_acc <= 1.0);
}

TEST_CASE("LID can be scored on the held-out set") {
  const auto data = small_blobs(2, 600, 3);
  TrainConfig cfg = quick_config(StrategyKind::CrossEntropy, 2);
  const auto on_train = run_training(data.train, data.test, cfg);
  cfg.lid_on_test = true;
  const auto on_test = run_training(data.train, data.test, cfg);
  CHECK(on_train.records[1].lid != on_test.records[1].lid);
  CHECK(on_train.records[1].train_loss == on_test.records[1].train_loss);
}

TEST_CASE("divergence aborts with NonFiniteLoss") {
  const auto data = small_blobs(3, 600, 4);
  TrainConfig cfg = quick_config(StrategyKind::CrossEntropy, 5);
  cfg.optimizer.learning_rate = 1e200;
  try {
    run_training(data.train, data.test, cfg);
    FAIL("expected an abort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("configuration checks") {
  const auto data = small_blobs(2, 200, 1);
  auto expect_invalid = [&](TrainConfig cfg) {
    try {
      run_training(data.train, data.test, cfg);
      FAIL("expected InvalidConfig");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidConfig);
    }
  };
  TrainConfig cfg = quick_config(StrategyKind::D2L, 10);
  cfg.window = 10;
  expect_invalid(cfg);
  cfg.window = 0;
  expect_invalid(cfg);
  cfg = quick_config(StrategyKind::D2L, 10);
  cfg.lid_k = 1;
  expect_invalid(cfg);
  cfg = quick_config(StrategyKind::D2L, 10);
  cfg.lid_batches = 0;
  expect_invalid(cfg);
}

TEST_CASE("clean-label LID trends downward after the first 10% of epochs") {
  // Scores carry sampling noise from the m random batches, so the check is on
  // the trend: least-squares slope <= 0 over epochs >= 10% of T, and the mean
  // of the last 20% of epochs no higher than the 20% right after the 10% mark.
  int downward = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = gen_manifold_blobs_split(
        {.d_intrinsic = 8, .d_ambient = 16, .classes = 5, .n = 3000, .seed = seed, .separation = 1.0}, 500);
    TrainConfig cfg = quick_config(StrategyKind::CrossEntropy, 30);
    cfg.hidden = {64, 64};
    cfg.lid_batches = 10;
    cfg.lid_k = 20;
    cfg.batch_size = 128;
    cfg.seed = seed;
    const auto& s = run_training(data.train, data.test, cfg).trajectory.scores;
    const std::size_t from = s.size() / 10, span = s.size() / 5;
    double mx = 0, my = 0;
    for (std::size_t i = from; i < s.size(); ++i) {
      mx += static_cast<double>(i);
      my += s[i];
    }
    const double count = static_cast<double>(s.size() - from);
    mx /= count;
    my /= count;
    double sxy = 0, sxx = 0;
    for (std::size_t i = from; i < s.size(); ++i) {
      sxy += (static_cast<double>(i) - mx) * (s[i] - my);
      sxx += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
    }
    double early = 0, late = 0;
    for (std::size_t i = 0; i < span; ++i) {
      early += s[from + i];
      late += s[s.size() - 1 - i];
    }
    CAPTURE(seed);
    CAPTURE(sxy / sxx);
    downward += sxy / sxx <= 0.0 && late <= early;
  }
  CHECK(downward >= 4);
}

#pragma once

// Dimensionality-driven training loop: per epoch, train, score the LID of the
// penultimate representation over m sampled batches, watch for the turn from
// dimensionality compression to expansion, roll back once when it happens,
// and from then on train on LID-weighted interpolated labels.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "d2l/data.hpp"
#include "d2l/network.hpp"
#include "d2l/strategies.hpp"

namespace d2l {

enum class StdKind { Population, Sample };

struct LidTrajectory {
  std::vector<double> scores;  // append-only, one per epoch
  int window = 1;
  int turning_epoch = -1;      // set at most once
  StdKind std_kind = StdKind::Population;
};

// True iff scores[epoch] - mean(W) > 2 * std(W), W = scores[epoch-w .. epoch-1].
// On true sets turning_epoch = epoch - 1. Never fires once turning_epoch is
// set or while epoch < window.
bool detect_turning_point(LidTrajectory& traj, int epoch);

struct TrainConfig {
  int epochs = 120;          // T
  int window = 12;           // w
  int lid_batches = 10;      // m
  int lid_k = 20;            // k
  int batch_size = 128;
  StrategyKind strategy = StrategyKind::D2L;
  OptimizerConfig optimizer;
  std::vector<std::size_t> hidden{128, 128};
  std::uint64_t seed = 0;
  double beta_soft = 0.95;
  double beta_hard = 0.8;
  double noise_rate = 0.0;   // ground-truth rate for the forward/backward transition matrix
  StdKind std_kind = StdKind::Population;
  int patience = 0;          // early stopping on test accuracy; 0 disables
  bool lid_on_test = false;  // score LID on the held-out set instead of training batches

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double lid = 0.0;
  double alpha = 1.0;
  bool rolled_back = false;
};

struct TrainTiming {
  double total_seconds = 0.0;
  double lid_seconds = 0.0;

  double lid_fraction() const { return total_seconds > 0.0 ? lid_seconds / total_seconds : 0.0; }
};

struct TrainResult {
  Network model;
  ParamSet momentum;
  std::vector<EpochRecord> records;
  LidTrajectory trajectory;
  TrainTiming timing;
};

// Averages batch_lid_mean of the penultimate representations over m batches
// of batch_size rows sampled without replacement from ds. The sample depends
// only on (seed, epoch).
double epoch_lid_score(const Network& model, const Dataset& ds, int m, int k, int batch_size,
                       std::uint64_t seed, int epoch = 0);

// Called after each epoch with the record, the live model and its optimizer.
using EpochCallback = std::function<void(const EpochRecord&, const Network&, const Sgd&)>;

TrainResult run_training(const Dataset& train, const Dataset& test, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});

}  // namespace d2l

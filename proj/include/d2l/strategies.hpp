#pragma once

// Training-target construction for D2L and the baseline noisy-label
// strategies (bootstrapping, forward and backward loss correction).

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2l/matrix.hpp"

namespace d2l {

enum class StrategyKind { CrossEntropy, D2L, BootSoft, BootHard, Forward, Backward };

std::string_view to_string(StrategyKind kind);
// Accepts the CLI spellings: ce, d2l, boot-soft, boot-hard, forward, backward.
std::optional<StrategyKind> parse_strategy(std::string_view name);

// LID-driven interpolation weight between raw and predicted labels.
//   u == -1            -> 1
//   otherwise          -> exp(-(epoch/total) * lids[epoch] / min(lids[0..epoch-1]))
// Throws EmptyHistory unless lids has entries 0..epoch and epoch >= 1 when u >= 0.
double alpha_update(std::span<const double> lids, int epoch, int total_epochs, int turning_epoch);

// Row-wise argmax, ties to the lowest index.
std::vector<int> argmax_rows(const Matrix& probs);

// alpha * y + (1 - alpha) * onehot(argmax p).
Matrix d2l_targets(const Matrix& raw, const Matrix& probs, double alpha);

// beta * y + (1 - beta) * (hard ? onehot(argmax p) : p).
Matrix bootstrap_targets(const Matrix& raw, const Matrix& probs, double beta, bool hard);

// c x c row-stochastic: T(i, j) = P(observed j | true i).
using TransitionMatrix = Matrix;

TransitionMatrix symmetric_transition(int classes, double eta);

// Mean over samples of -sum_j y_j ln (T^T p)_j.
double forward_loss(const Matrix& probs, const Matrix& raw, const TransitionMatrix& t);
// dL/dlogits of forward_loss (already divided by the batch size).
Matrix forward_loss_dlogits(const Matrix& probs, const Matrix& raw, const TransitionMatrix& t);

// Mean over samples of sum_i y_i (T^-1 l)_i with l_j = -ln p_j. May be
// negative; it is not clamped. Throws SingularMatrix when T is not invertible.
double backward_loss(const Matrix& probs, const Matrix& raw, const TransitionMatrix& t);
Matrix backward_loss_dlogits(const Matrix& probs, const Matrix& raw, const TransitionMatrix& t);

// T^-1 via full-pivot LU; throws SingularMatrix.
Matrix invert_transition(const TransitionMatrix& t);

}  // namespace d2l

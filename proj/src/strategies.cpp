#include "d2l/strategies.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "d2l/error.hpp"
#include "d2l/network.hpp"

namespace d2l {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::CrossEntropy: return "ce";
    case StrategyKind::D2L: return "d2l";
    case StrategyKind::BootSoft: return "boot-soft";
    case StrategyKind::BootHard: return "boot-hard";
    case StrategyKind::Forward: return "forward";
    case StrategyKind::Backward: return "backward";
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
  for (auto kind : {StrategyKind::CrossEntropy, StrategyKind::D2L, StrategyKind::BootSoft, StrategyKind::BootHard,
                    StrategyKind::Forward, StrategyKind::Backward})
    if (name == to_string(kind)) return kind;
  return std::nullopt;
}

double alpha_update(std::span<const double> lids, int epoch, int total_epochs, int turning_epoch) {
  if (turning_epoch < 0) return 1.0;
  if (epoch < 1 || lids.size() < static_cast<std::size_t>(epoch) + 1)
    throw Error(ErrorCode::EmptyHistory, "alpha needs LID scores for epochs 0.." + std::to_string(epoch));
  if (total_epochs < 1) throw Error(ErrorCode::InvalidConfig, "total epochs must be positive");
  const auto first = lids.begin();
  const double history_min = *std::min_element(first, first + epoch);
  const double lambda = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return std::exp(-lambda * lids[static_cast<std::size_t>(epoch)] / history_min);
}

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < probs.cols(); ++j)
      if (probs(r, j) > probs(r, best)) best = j;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::ShapeMismatch, "label and prediction matrices differ in shape");
}

Matrix predicted_one_hots(const Matrix& probs) {
  Matrix out = Matrix::Zero(probs.rows(), probs.cols());
  const auto top = argmax_rows(probs);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) out(r, top[static_cast<std::size_t>(r)]) = 1.0;
  return out;
}

}  // namespace

Matrix d2l_targets(const Matrix& raw, const Matrix& probs, double alpha) {
  check_same_shape(raw, probs);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidConfig, "alpha must lie in [0,1]");
  if (alpha == 1.0) return raw;
  return alpha * raw + (1.0 - alpha) * predicted_one_hots(probs);
}

Matrix bootstrap_targets(const Matrix& raw, const Matrix& probs, double beta, bool hard) {
  check_same_shape(raw, probs);
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidConfig, "beta must lie in [0,1]");
  if (beta == 1.0) return raw;
  return beta * raw + (1.0 - beta) * (hard ? predicted_one_hots(probs) : probs);
}

TransitionMatrix symmetric_transition(int classes, double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidRate, "noise rate must lie in [0,1)");
  if (classes < 1) throw Error(ErrorCode::InvalidDims, "need at least one class");
  if (classes == 1) return TransitionMatrix::Identity(1, 1);
  TransitionMatrix t = TransitionMatrix::Constant(classes, classes, eta / (classes - 1));
  t.diagonal().setConstant(1.0 - eta);
  return t;
}

Matrix invert_transition(const TransitionMatrix& t) {
  if (t.rows() != t.cols()) throw Error(ErrorCode::ShapeMismatch, "transition matrix must be square");
  Eigen::FullPivLU<Matrix> lu(t);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularMatrix, "transition matrix is singular");
  return lu.inverse();
}

double forward_loss(const Matrix& probs, const Matrix& raw, const TransitionMatrix& t) {
  check_same_shape(raw, probs);
  const Matrix corrected = probs * t;  // row n holds (T^T p_n)^T
  return soft_cross_entropy(corrected, raw);
}

Matrix forward_loss_dlogits(const Matrix& probs, const Matrix& raw, const TransitionMatrix& t) {
  check_same_shape(raw, probs);
  const Matrix corrected = (probs * t).cwiseMax(kProbClamp);
  // dL/dp_i = -sum_j y_j T_ij / q_j
  const Matrix dprobs = -(raw.cwiseQuotient(corrected)) * t.transpose();
  // Softmax Jacobian: dL/dz_k = p_k (g_k - sum_i p_i g_i)
  const Eigen::VectorXd inner = probs.cwiseProduct(dprobs).rowwise().sum();
  Matrix dlogits = probs.cwiseProduct(dprobs.colwise() - inner);
  return dlogits / static_cast<double>(probs.rows());
}

double backward_loss(const Matrix& probs, const Matrix& raw, const TransitionMatrix& t) {
  check_same_shape(raw, probs);
  const Matrix weights = raw * invert_transition(t);
  const Matrix neg_log = -(probs.cwiseMax(kProbClamp).array().log()).matrix();
  const double loss = weights.cwiseProduct(neg_log).sum() / static_cast<double>(probs.rows());
  if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "backward-corrected loss is not finite");
  return loss;
}

Matrix backward_loss_dlogits(const Matrix& probs, const Matrix& raw, const TransitionMatrix& t) {
  check_same_shape(raw, probs);
  const Matrix weights = raw * invert_transition(t);
  // L = -sum_j w_j ln p_j  =>  dL/dz = p * sum(w) - w
  Matrix dlogits = probs.array().colwise() * weights.rowwise().sum().array();
  dlogits -= weights;
  return dlogits / static_cast<double>(probs.rows());
}

}  // namespace d2l

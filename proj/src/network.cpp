#include "d2l/network.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "binary_io.hpp"
#include "d2l/error.hpp"

namespace d2l {

namespace {

constexpr std::string_view kCheckpointMagic = "D2LCKPT1";

void check_widths(std::span<const std::size_t> widths) {
  if (widths.size() < 3)
    throw Error(ErrorCode::InvalidConfig, "network needs input, at least one hidden and an output width");
  for (std::size_t w : widths)
    if (w == 0) throw Error(ErrorCode::InvalidConfig, "layer width must be positive");
}

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

ParamSet ParamSet::zeros_like(const std::vector<DenseLayer>& layers) {
  ParamSet p;
  for (const auto& l : layers) {
    p.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    p.biases.push_back(RowVector::Zero(l.bias.size()));
  }
  return p;
}

bool ParamSet::same_shape(const std::vector<DenseLayer>& layers) const {
  if (weights.size() != layers.size() || biases.size() != layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (weights[i].rows() != layers[i].weights.rows() || weights[i].cols() != layers[i].weights.cols() ||
        biases[i].size() != layers[i].bias.size())
      return false;
  }
  return true;
}

Network::Network(std::span<const std::size_t> widths, std::uint64_t seed) {
  check_widths(widths);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    DenseLayer layer{Matrix(idx(fan_in), idx(fan_out)), RowVector::Zero(idx(fan_out))};
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = normal(rng);
    layers_.push_back(std::move(layer));
  }
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.size() < 2) throw Error(ErrorCode::InvalidConfig, "network needs at least two layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weights.cols())
      throw Error(ErrorCode::ShapeMismatch, "bias width differs from layer width");
    if (l > 0 && layers_[l].weights.rows() != layers_[l - 1].weights.cols())
      throw Error(ErrorCode::ShapeMismatch, "consecutive layer shapes do not compose");
  }
}

Network Network::zeros(std::span<const std::size_t> widths) {
  check_widths(widths);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    layers.push_back({Matrix::Zero(idx(widths[l]), idx(widths[l + 1])), RowVector::Zero(idx(widths[l + 1]))});
  return Network(std::move(layers));
}

std::vector<std::size_t> Network::widths() const {
  std::vector<std::size_t> w{input_width()};
  for (const auto& l : layers_) w.push_back(static_cast<std::size_t>(l.weights.cols()));
  return w;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - top).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

ForwardPass Network::forward(const Matrix& batch) const {
  if (static_cast<std::size_t>(batch.cols()) != input_width())
    throw Error(ErrorCode::ShapeMismatch, "batch has " + std::to_string(batch.cols()) +
                                              " columns, network expects " + std::to_string(input_width()));
  ForwardPass pass;
  pass.activations.reserve(layers_.size());
  pass.activations.push_back(batch);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Matrix z = pass.activations.back() * layers_[l].weights;
    z.rowwise() += layers_[l].bias;
    pass.activations.push_back(z.cwiseMax(0.0));
  }
  Matrix logits = pass.activations.back() * layers_.back().weights;
  logits.rowwise() += layers_.back().bias;
  pass.probs = softmax(logits);
  return pass;
}

ParamSet backprop(const Network& model, const ForwardPass& pass, const Matrix& dlogits,
                  double weight_decay) {
  const auto& layers = model.layers();
  if (dlogits.rows() != pass.probs.rows() || dlogits.cols() != pass.probs.cols())
    throw Error(ErrorCode::ShapeMismatch, "dlogits shape differs from the output shape");

  ParamSet grads;
  grads.weights.resize(layers.size());
  grads.biases.resize(layers.size());
  Matrix delta = dlogits;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& input = pass.activations[l];
    grads.weights[l] = input.transpose() * delta;
    if (weight_decay != 0.0) grads.weights[l] += weight_decay * layers[l].weights;
    grads.biases[l] = delta.colwise().sum();
    if (l > 0) {
      Matrix back = delta * layers[l].weights.transpose();
      delta = (input.array() > 0.0).select(back, 0.0);
    }
  }
  return grads;
}

double soft_cross_entropy(const Matrix& probs, const Matrix& targets) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols())
    throw Error(ErrorCode::ShapeMismatch, "targets shape differs from predictions");
  double total = 0.0;
  for (Eigen::Index n = 0; n < probs.rows(); ++n) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double t = targets(n, j);
      if (t != 0.0) row -= t * std::log(std::max(probs(n, j), kProbClamp));
    }
    total += row;
  }
  const double loss = total / static_cast<double>(probs.rows());
  if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "cross-entropy is not finite");
  return loss;
}

Matrix soft_cross_entropy_dlogits(const Matrix& probs, const Matrix& targets) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols())
    throw Error(ErrorCode::ShapeMismatch, "targets shape differs from predictions");
  // d/dz of -sum_j t_j ln softmax(z)_j is p * sum(t) - t.
  Matrix dlogits = probs.array().colwise() * targets.rowwise().sum().array();
  dlogits -= targets;
  return dlogits / static_cast<double>(probs.rows());
}

LossAndGrad loss_and_grad(const Network& model, const Matrix& batch, const Matrix& targets,
                          double weight_decay) {
  if (targets.rows() != batch.rows())
    throw Error(ErrorCode::ShapeMismatch, "one target distribution per sample is required");
  const ForwardPass pass = model.forward(batch);
  LossAndGrad out;
  out.loss = soft_cross_entropy(pass.probs, targets);
  out.grads = backprop(model, pass, soft_cross_entropy_dlogits(pass.probs, targets), weight_decay);
  return out;
}

double OptimizerConfig::lr_at(int epoch) const {
  double lr = learning_rate;
  for (const auto& drop : lr_drops)
    if (epoch >= drop.epoch) lr /= drop.divisor;
  return lr;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::InvalidConfig, "momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::InvalidConfig, "weight decay must be nonnegative");
  for (std::size_t i = 0; i < lr_drops.size(); ++i) {
    if (!(lr_drops[i].divisor > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr divisor must be positive");
    if (i > 0 && lr_drops[i].epoch <= lr_drops[i - 1].epoch)
      throw Error(ErrorCode::InvalidConfig, "lr drop epochs must be strictly increasing");
  }
}

void Sgd::step(Network& model, const ParamSet& grads, const OptimizerConfig& opt, int epoch) {
  auto& layers = model.layers();
  if (!grads.same_shape(layers) || !velocity_.same_shape(layers))
    throw Error(ErrorCode::ShapeMismatch, "gradient shapes differ from the parameters");
  const double lr = opt.lr_at(epoch);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    velocity_.weights[l] = opt.momentum * velocity_.weights[l] + grads.weights[l];
    velocity_.biases[l] = opt.momentum * velocity_.biases[l] + grads.biases[l];
    layers[l].weights -= lr * velocity_.weights[l];
    layers[l].bias -= lr * velocity_.biases[l];
  }
}

Checkpoint snapshot(const Network& model, const Sgd& opt, int epoch) {
  return Checkpoint{model.layers(), opt.velocity(), epoch};
}

void restore(Network& model, Sgd& opt, const Checkpoint& ckpt) {
  const auto& layers = model.layers();
  bool ok = ckpt.layers.size() == layers.size() && ckpt.momentum.same_shape(layers);
  for (std::size_t l = 0; ok && l < layers.size(); ++l)
    ok = ckpt.layers[l].weights.rows() == layers[l].weights.rows() &&
         ckpt.layers[l].weights.cols() == layers[l].weights.cols() &&
         ckpt.layers[l].bias.size() == layers[l].bias.size();
  if (!ok) throw Error(ErrorCode::IncompatibleArchitecture, "checkpoint layer shapes differ from the model");
  model.layers() = ckpt.layers;
  opt = Sgd(ckpt.momentum);
}

namespace {

void write_params(std::ostream& out, const std::vector<Matrix>& weights, const std::vector<RowVector>& biases) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index i = 0; i < weights[l].size(); ++i) detail::write_f64(out, weights[l].data()[i]);
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) detail::write_f64(out, biases[l][i]);
  }
}

void read_params(std::istream& in, std::vector<Matrix>& weights, std::vector<RowVector>& biases) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index i = 0; i < weights[l].size(); ++i) weights[l].data()[i] = detail::read_f64(in);
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l][i] = detail::read_f64(in);
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  detail::write_magic(out, kCheckpointMagic);
  detail::write_u32(out, static_cast<std::uint32_t>(ckpt.layers.size()));
  for (const auto& l : ckpt.layers) {
    detail::write_u32(out, static_cast<std::uint32_t>(l.weights.rows()));
    detail::write_u32(out, static_cast<std::uint32_t>(l.weights.cols()));
  }
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
  for (const auto& l : ckpt.layers) {
    weights.push_back(l.weights);
    biases.push_back(l.bias);
  }
  write_params(out, weights, biases);
  write_params(out, ckpt.momentum.weights, ckpt.momentum.biases);
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  detail::expect_magic(in, kCheckpointMagic);
  const std::uint32_t count = detail::read_u32(in);
  if (count == 0 || count > 1024) throw Error(ErrorCode::InvalidDims, "implausible layer count");
  Checkpoint ckpt;
  for (std::uint32_t l = 0; l < count; ++l) {
    const auto rows = detail::read_u32(in);
    const auto cols = detail::read_u32(in);
    if (rows == 0 || cols == 0) throw Error(ErrorCode::InvalidDims, "zero-sized layer");
    ckpt.layers.push_back({Matrix(rows, cols), RowVector(cols)});
  }
  ckpt.momentum = ParamSet::zeros_like(ckpt.layers);
  std::vector<Matrix> weights(count);
  std::vector<RowVector> biases(count);
  for (std::uint32_t l = 0; l < count; ++l) {
    weights[l] = ckpt.layers[l].weights;
    biases[l] = ckpt.layers[l].bias;
  }
  read_params(in, weights, biases);
  for (std::uint32_t l = 0; l < count; ++l) {
    ckpt.layers[l].weights = std::move(weights[l]);
    ckpt.layers[l].bias = std::move(biases[l]);
  }
  read_params(in, ckpt.momentum.weights, ckpt.momentum.biases);
  Network validate(ckpt.layers);
  return ckpt;
}

}  // namespace d2l

#pragma once

// Fully connected classifier: rectifier hidden layers, softmax output. The
// last hidden activation is the penultimate representation g(x) in which
// LID is measured.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "d2l/matrix.hpp"

namespace d2l {

inline constexpr double kProbClamp = 1e-12;

struct DenseLayer {
  Matrix weights;  // fan_in x fan_out
  RowVector bias;  // fan_out
};

// Parameter-shaped container, used for gradients and momentum buffers.
struct ParamSet {
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;

  static ParamSet zeros_like(const std::vector<DenseLayer>& layers);
  bool same_shape(const std::vector<DenseLayer>& layers) const;
};

struct ForwardPass {
  std::vector<Matrix> activations;  // activations[0] = input, back() = last hidden
  Matrix probs;

  const Matrix& penultimate() const { return activations.back(); }
};

class Network {
 public:
  // widths = {input, hidden..., classes}; needs at least one hidden layer.
  // He-normal weights (variance 2/fan_in), zero biases.
  Network(std::span<const std::size_t> widths, std::uint64_t seed);
  explicit Network(std::vector<DenseLayer> layers);

  static Network zeros(std::span<const std::size_t> widths);

  std::size_t input_width() const { return static_cast<std::size_t>(layers_.front().weights.rows()); }
  std::size_t class_count() const { return static_cast<std::size_t>(layers_.back().weights.cols()); }
  std::vector<std::size_t> widths() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  ForwardPass forward(const Matrix& batch) const;
  Matrix predict(const Matrix& batch) const { return forward(batch).probs; }

 private:
  std::vector<DenseLayer> layers_;
};

// Row-wise numerically stable softmax.
Matrix softmax(const Matrix& logits);

// Back-propagates dL/dlogits through the cached forward pass. Adds
// weight_decay * W to every weight gradient (biases are not decayed).
ParamSet backprop(const Network& model, const ForwardPass& pass, const Matrix& dlogits,
                  double weight_decay);

struct LossAndGrad {
  double loss = 0.0;
  ParamSet grads;
};

// Soft-target cross-entropy  -(1/N) sum_n sum_j t_nj ln p_nj  (probabilities
// clamped to kProbClamp inside the log). The reported loss excludes weight
// decay; the gradient includes it.
double soft_cross_entropy(const Matrix& probs, const Matrix& targets);
// Batch-averaged dL/dlogits of soft_cross_entropy: (p * sum_j t_j - t) / N.
Matrix soft_cross_entropy_dlogits(const Matrix& probs, const Matrix& targets);
LossAndGrad loss_and_grad(const Network& model, const Matrix& batch, const Matrix& targets,
                          double weight_decay = 0.0);

struct LrDrop {
  int epoch = 0;
  double divisor = 10.0;
};

struct OptimizerConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::vector<LrDrop> lr_drops{{40, 10.0}, {80, 10.0}};

  double lr_at(int epoch) const;
  void validate() const;
};

// SGD with heavy-ball momentum:  v <- mu v + g;  w <- w - lr(epoch) v.
class Sgd {
 public:
  explicit Sgd(const Network& model) : velocity_(ParamSet::zeros_like(model.layers())) {}
  explicit Sgd(ParamSet velocity) : velocity_(std::move(velocity)) {}

  void step(Network& model, const ParamSet& grads, const OptimizerConfig& opt, int epoch);

  const ParamSet& velocity() const { return velocity_; }

 private:
  ParamSet velocity_;
};

struct Checkpoint {
  std::vector<DenseLayer> layers;
  ParamSet momentum;
  int epoch = -1;
};

Checkpoint snapshot(const Network& model, const Sgd& opt, int epoch);
// Throws IncompatibleArchitecture when layer shapes differ.
void restore(Network& model, Sgd& opt, const Checkpoint& ckpt);

// Binary layout: "D2LCKPT1", u32 layer count, per layer u32 rows and u32
// cols of the weight matrix, then per layer the weights (row-major) followed
// by the bias, as little-endian f64; then the momentum buffers in the same
// layout. The epoch index is not part of the file.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace d2l

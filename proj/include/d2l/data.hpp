#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "d2l/matrix.hpp"

namespace d2l {

enum class Split : std::uint32_t { Train = 0, Test = 1 };

struct Dataset {
  Matrix features;                   // n x d
  std::vector<int> true_labels;      // evaluation only, never fed to a training loss
  std::vector<int> observed_labels;  // possibly noisy
  int class_count = 0;
  Split split = Split::Train;

  std::size_t size() const { return true_labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  // Throws InvalidDims / CountMismatch / NonFiniteInput on a malformed dataset.
  void validate() const;
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct NoiseSpec {
  double rate = 0.0;
  std::uint64_t seed = 0;
};

// Flips exactly round(rate * n) labels, chosen uniformly without replacement,
// each to one of the other c-1 classes with equal probability.
Dataset inject_symmetric_noise(Dataset ds, const NoiseSpec& spec);

// Big-endian IDX: images magic 0x00000803 (n, rows, cols), labels magic
// 0x00000801 (n). Pixels are scaled to [0,1] by /255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 Split split = Split::Train, int class_count = 10);
// Writes pixels as round(255 * x) with the given image geometry
// (rows * cols must equal the feature dimension).
void write_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels,
               std::uint32_t rows, std::uint32_t cols);

struct BlobSpec {
  std::size_t d_intrinsic = 2;
  std::size_t d_ambient = 2;
  int classes = 1;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double radius = 1.0;      // radius of each class ball
  double separation = 4.0;  // scale of the random class offsets
  double jitter = 0.0;      // isotropic ambient Gaussian noise added after embedding
};

// Per class: points uniform in a d_intrinsic-ball, embedded into d_ambient by
// a class-specific random orthonormal map and shifted by a random offset.
// Classes are assigned round-robin so the counts differ by at most one.
Dataset gen_manifold_blobs(const BlobSpec& spec);

// Same generator, split into a train and a test part drawn from the same
// class geometry.
struct SplitDataset {
  Dataset train;
  Dataset test;
};
SplitDataset gen_manifold_blobs_split(const BlobSpec& spec, std::size_t n_test);

// Seeded per-epoch shuffle of [0, n) partitioned into slices of batch_size;
// the last slice may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                              std::uint64_t epoch);

// Dataset cache: "D2LDATA1", little-endian u32 split, n, d, class_count, then
// n*d f64 features row-major, then n u32 true labels, then n u32 observed labels.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

Matrix one_hot(const std::vector<int>& labels, int class_count);

}  // namespace d2l

#pragma once

// Nearest-neighbour distance profiles and the maximum-likelihood (Hill-type)
// estimator of local intrinsic dimensionality (LID).
//
//   LID(x) = -( (1/k) * sum_{i=1..k} ln(r_i(x) / r_max(x)) )^-1
//
// where r_i is the distance to the i-th nearest neighbour and r_max = r_k.

#include <cstddef>
#include <span>
#include <vector>

#include "d2l/matrix.hpp"

namespace d2l {

// Distances below kDistanceFloor * r_max are clamped before taking the log.
inline constexpr double kDistanceFloor = 1e-12;

struct NeighborProfile {
  std::vector<double> distances;  // ascending, size k

  std::size_t k() const { return distances.size(); }
  double r_max() const { return distances.empty() ? 0.0 : distances.back(); }
};

struct LidEstimate {
  double value = 0.0;
  std::size_t k = 0;
  bool valid = false;
};

// k smallest Euclidean distances from `query` to the rows of `refs`, ascending.
// With `exclude_self`, the first reference at distance exactly 0 is dropped.
// Ties are broken by reference row index.
// Throws InsufficientPoints if fewer than k references remain, NonFiniteInput
// on NaN/inf coordinates.
NeighborProfile knn_profile(std::span<const double> query, const PointSet& refs, std::size_t k,
                            bool exclude_self);

// Returns valid=false when r_max == 0 or every distance equals r_max after
// flooring (the log-sum is zero and the estimate would be infinite).
LidEstimate lid_mle(const NeighborProfile& profile);

// Per-point estimates for every row of `reps`, each scored against the other
// rows of the same set.
std::vector<LidEstimate> batch_lid_estimates(const PointSet& reps, std::size_t k);

// Mean of the valid per-point estimates over the batch. Throws AllDegenerate
// if none is valid and InsufficientPoints unless reps.rows() > k.
double batch_lid_mean(const PointSet& reps, std::size_t k);

}  // namespace d2l

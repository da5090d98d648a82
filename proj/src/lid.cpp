#include "d2l/lid.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "d2l/error.hpp"
#include "d2l/parallel.hpp"

namespace d2l {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// acc[j - begin] += (q_t - r_jt)^2 in coordinate order for references
// j in [begin, n): the same arithmetic as a plain per-pair loop. refs_t is the
// transposed reference set (d x n, row-major) so the inner loop is contiguous.
void squared_distances(std::span<const double> query, const Matrix& refs_t, std::size_t begin, double* acc) {
  const std::size_t n = static_cast<std::size_t>(refs_t.cols());
  std::fill(acc, acc + (n - begin), 0.0);
  for (Eigen::Index t = 0; t < refs_t.rows(); ++t) {
    const double q = query[static_cast<std::size_t>(t)];
    const double* row = refs_t.row(t).data() + begin;
    for (std::size_t j = 0; j < n - begin; ++j) {
      const double diff = q - row[j];
      acc[j] += diff * diff;
    }
  }
}

// k smallest distances from a row of squared distances. sqrt is monotone, so
// selection happens on squared values. Which of several tied references is
// kept does not change the returned values.
NeighborProfile select_profile(std::vector<double>& sq, std::size_t k, bool exclude_self) {
  if (exclude_self) {
    const auto self = std::find(sq.begin(), sq.end(), 0.0);
    if (self != sq.end()) sq.erase(self);
  }
  if (sq.size() < k)
    throw Error(ErrorCode::InsufficientPoints,
                "need " + std::to_string(k) + " references, have " + std::to_string(sq.size()));
  const auto kth = sq.begin() + static_cast<std::ptrdiff_t>(k);
  std::nth_element(sq.begin(), kth - 1, sq.end());
  std::sort(sq.begin(), kth);
  NeighborProfile profile;
  profile.distances.reserve(k);
  for (auto it = sq.begin(); it != kth; ++it) profile.distances.push_back(std::sqrt(*it));
  return profile;
}

}  // namespace

NeighborProfile knn_profile(std::span<const double> query, const PointSet& refs, std::size_t k,
                            bool exclude_self) {
  if (k < 2) throw Error(ErrorCode::InsufficientPoints, "k must be at least 2");
  if (query.size() != static_cast<std::size_t>(refs.cols()))
    throw Error(ErrorCode::ShapeMismatch, "query dimension differs from reference dimension");
  if (!all_finite(query) || !refs.allFinite())
    throw Error(ErrorCode::NonFiniteInput, "non-finite coordinate in kNN input");
  const Matrix refs_t = refs.transpose();
  std::vector<double> sq(static_cast<std::size_t>(refs.rows()));
  squared_distances(query, refs_t, 0, sq.data());
  return select_profile(sq, k, exclude_self);
}

LidEstimate lid_mle(const NeighborProfile& profile) {
  LidEstimate est;
  est.k = profile.k();
  const double r_max = profile.r_max();
  if (est.k == 0 || !(r_max > 0.0) || !std::isfinite(r_max)) return est;

  const double floor = kDistanceFloor * r_max;
  double sum = 0.0;
  for (double r : profile.distances) sum += std::log(std::max(r, floor) / r_max);
  if (sum == 0.0) return est;

  est.value = -1.0 / (sum / static_cast<double>(est.k));
  est.valid = std::isfinite(est.value) && est.value > 0.0;
  return est;
}

std::vector<LidEstimate> batch_lid_estimates(const PointSet& reps, std::size_t k) {
  const std::size_t n = static_cast<std::size_t>(reps.rows());
  if (n <= k)
    throw Error(ErrorCode::InsufficientPoints,
                "batch of " + std::to_string(n) + " points cannot supply k=" + std::to_string(k) +
                    " neighbours");
  if (!reps.allFinite()) throw Error(ErrorCode::NonFiniteInput, "non-finite representation");
  if (k < 2) throw Error(ErrorCode::InsufficientPoints, "k must be at least 2");

  // Upper triangle only; (a - b)^2 == (b - a)^2 exactly, so mirroring gives
  // the same values knn_profile would compute.
  const Matrix reps_t = reps.transpose();
  Matrix sq = Matrix::Zero(reps.rows(), reps.rows());
  parallel_for(n, [&](std::size_t i) {
    const auto row = reps.row(static_cast<Eigen::Index>(i));
    const std::span<const double> query(row.data(), static_cast<std::size_t>(reps.cols()));
    if (i + 1 < n) squared_distances(query, reps_t, i + 1, sq.row(static_cast<Eigen::Index>(i)).data() + i + 1);
  });
  for (Eigen::Index i = 0; i < sq.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) sq(i, j) = sq(j, i);

  std::vector<LidEstimate> out(n);
  parallel_for(n, [&](std::size_t i) {
    const auto row = sq.row(static_cast<Eigen::Index>(i));
    std::vector<double> dists(row.data(), row.data() + n);
    // Drop the query itself by position rather than by the first zero.
    dists.erase(dists.begin() + static_cast<std::ptrdiff_t>(i));
    out[i] = lid_mle(select_profile(dists, k, /*exclude_self=*/false));
  });
  return out;
}

double batch_lid_mean(const PointSet& reps, std::size_t k) {
  const auto estimates = batch_lid_estimates(reps, k);
  double sum = 0.0;
  std::size_t valid = 0;
  for (const auto& e : estimates) {
    if (!e.valid) continue;
    sum += e.value;
    ++valid;
  }
  if (valid == 0) throw Error(ErrorCode::AllDegenerate, "no point in the batch has a valid LID");
  return sum / static_cast<double>(valid);
}

}  // namespace d2l

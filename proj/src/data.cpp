#include "d2l/data.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "d2l/error.hpp"
#include "rng.hpp"

namespace d2l {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::string_view kDataMagic = "D2LDATA1";

}  // namespace

void Dataset::validate() const {
  if (class_count < 1) throw Error(ErrorCode::InvalidDims, "class count must be positive");
  if (observed_labels.size() != true_labels.size() ||
      static_cast<std::size_t>(features.rows()) != true_labels.size())
    throw Error(ErrorCode::CountMismatch, "features and label vectors differ in length");
  auto in_range = [&](int y) { return y >= 0 && y < class_count; };
  if (!std::all_of(true_labels.begin(), true_labels.end(), in_range) ||
      !std::all_of(observed_labels.begin(), observed_labels.end(), in_range))
    throw Error(ErrorCode::InvalidDims, "label outside [0, class_count)");
  if (!features.allFinite()) throw Error(ErrorCode::NonFiniteInput, "non-finite feature");
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.class_count = class_count;
  out.split = split;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.true_labels.push_back(true_labels[rows[i]]);
    out.observed_labels.push_back(observed_labels[rows[i]]);
  }
  return out;
}

Dataset inject_symmetric_noise(Dataset ds, const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate < 1.0))
    throw Error(ErrorCode::InvalidRate, "noise rate must lie in [0,1)");
  if (ds.split != Split::Train) throw Error(ErrorCode::InvalidConfig, "noise is injected into the train split only");
  const std::size_t n = ds.size();
  ds.observed_labels = ds.true_labels;
  const auto flips = static_cast<std::size_t>(std::llround(spec.rate * static_cast<double>(n)));
  if (flips == 0) return ds;
  if (ds.class_count < 2) throw Error(ErrorCode::InvalidRate, "cannot flip labels with a single class");

  auto rng = detail::make_rng(spec.seed, {detail::kNoiseStream});
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `flips` entries form a uniform sample
  // without replacement.
  for (std::size_t i = 0; i < flips; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::uniform_int_distribution<int> other(0, ds.class_count - 2);
  for (std::size_t i = 0; i < flips; ++i) {
    const std::size_t s = order[i];
    const int draw = other(rng);
    ds.observed_labels[s] = draw >= ds.true_labels[s] ? draw + 1 : draw;
  }
  return ds;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, Split split,
                 int class_count) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw Error(ErrorCode::Io, "cannot open " + images.string());
  std::ifstream lab(labels, std::ios::binary);
  if (!lab) throw Error(ErrorCode::Io, "cannot open " + labels.string());

  if (detail::read_u32_be(img) != kIdxImagesMagic)
    throw Error(ErrorCode::BadMagic, images.string() + " is not an IDX image file");
  if (detail::read_u32_be(lab) != kIdxLabelsMagic)
    throw Error(ErrorCode::BadMagic, labels.string() + " is not an IDX label file");

  const std::uint32_t n = detail::read_u32_be(img);
  const std::uint32_t rows = detail::read_u32_be(img);
  const std::uint32_t cols = detail::read_u32_be(img);
  const std::uint32_t n_labels = detail::read_u32_be(lab);
  if (n != n_labels)
    throw Error(ErrorCode::CountMismatch,
                std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");

  const std::size_t d = std::size_t{rows} * cols;
  std::vector<unsigned char> pixels(std::size_t{n} * d);
  detail::read_exact(img, pixels.data(), pixels.size());
  std::vector<unsigned char> raw_labels(n);
  detail::read_exact(lab, raw_labels.data(), raw_labels.size());

  Dataset ds;
  ds.split = split;
  ds.class_count = class_count;
  ds.features.resize(n, static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < pixels.size(); ++i) ds.features.data()[i] = pixels[i] / 255.0;
  ds.true_labels.assign(raw_labels.begin(), raw_labels.end());
  ds.observed_labels = ds.true_labels;
  ds.validate();
  return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels,
               std::uint32_t rows, std::uint32_t cols) {
  if (std::size_t{rows} * cols != ds.dim())
    throw Error(ErrorCode::InvalidDims, "image geometry does not match the feature dimension");
  std::ofstream img(images, std::ios::binary | std::ios::trunc);
  std::ofstream lab(labels, std::ios::binary | std::ios::trunc);
  if (!img || !lab) throw Error(ErrorCode::Io, "cannot open IDX output files");
  const auto n = static_cast<std::uint32_t>(ds.size());
  detail::write_u32_be(img, kIdxImagesMagic);
  detail::write_u32_be(img, n);
  detail::write_u32_be(img, rows);
  detail::write_u32_be(img, cols);
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) {
    const double v = std::clamp(ds.features.data()[i], 0.0, 1.0);
    img.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  detail::write_u32_be(lab, kIdxLabelsMagic);
  detail::write_u32_be(lab, n);
  for (int y : ds.observed_labels) lab.put(static_cast<char>(static_cast<unsigned char>(y)));
  if (!img || !lab) throw Error(ErrorCode::Io, "failed writing IDX files");
}

namespace {

struct BlobGeometry {
  std::vector<Matrix> maps;        // d_ambient x d_intrinsic, orthonormal columns
  std::vector<RowVector> offsets;  // d_ambient
};

BlobGeometry make_geometry(const BlobSpec& spec) {
  auto rng = detail::make_rng(spec.seed, {detail::kBlobGeometry});
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto da = static_cast<Eigen::Index>(spec.d_ambient);
  const auto di = static_cast<Eigen::Index>(spec.d_intrinsic);
  BlobGeometry g;
  for (int c = 0; c < spec.classes; ++c) {
    Matrix gauss(da, da);
    for (Eigen::Index i = 0; i < gauss.size(); ++i) gauss.data()[i] = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(gauss);
    Matrix q = qr.householderQ();
    g.maps.push_back(q.leftCols(di));
    RowVector offset(da);
    for (Eigen::Index i = 0; i < da; ++i) offset[i] = normal(rng);
    g.offsets.push_back(offset * (spec.separation / std::sqrt(static_cast<double>(da))));
  }
  // A single class sits at the origin so that the identity case is a plain ball.
  if (spec.classes == 1) g.offsets[0].setZero();
  return g;
}

void check_blob_spec(const BlobSpec& spec) {
  if (spec.d_intrinsic == 0 || spec.d_ambient == 0 || spec.d_intrinsic > spec.d_ambient)
    throw Error(ErrorCode::InvalidDims, "need 1 <= d_intrinsic <= d_ambient");
  if (spec.classes < 1) throw Error(ErrorCode::InvalidDims, "need at least one class");
  if (!(spec.radius > 0.0) || !(spec.separation >= 0.0) || !(spec.jitter >= 0.0))
    throw Error(ErrorCode::InvalidDims, "radius must be positive; separation and jitter nonnegative");
}

Dataset sample_blobs(const BlobSpec& spec, const BlobGeometry& g, std::size_t n, std::uint64_t stream) {
  auto rng = detail::make_rng(spec.seed, {detail::kBlobSamples, stream});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto di = static_cast<Eigen::Index>(spec.d_intrinsic);
  const auto da = static_cast<Eigen::Index>(spec.d_ambient);

  Dataset ds;
  ds.class_count = spec.classes;
  ds.features.resize(static_cast<Eigen::Index>(n), da);
  RowVector local(di);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
    for (Eigen::Index j = 0; j < di; ++j) local[j] = normal(rng);
    const double radius = spec.radius * std::pow(unit(rng), 1.0 / static_cast<double>(di));
    local *= radius / local.norm();
    RowVector x = local * g.maps[static_cast<std::size_t>(c)].transpose() + g.offsets[static_cast<std::size_t>(c)];
    if (spec.jitter > 0.0)
      for (Eigen::Index j = 0; j < da; ++j) x[j] += spec.jitter * normal(rng);
    ds.features.row(static_cast<Eigen::Index>(i)) = x;
    ds.true_labels.push_back(c);
  }
  ds.observed_labels = ds.true_labels;
  return ds;
}

}  // namespace

Dataset gen_manifold_blobs(const BlobSpec& spec) {
  check_blob_spec(spec);
  return sample_blobs(spec, make_geometry(spec), spec.n, 0);
}

SplitDataset gen_manifold_blobs_split(const BlobSpec& spec, std::size_t n_test) {
  check_blob_spec(spec);
  const BlobGeometry g = make_geometry(spec);
  SplitDataset out{sample_blobs(spec, g, spec.n, 0), sample_blobs(spec, g, n_test, 1)};
  out.test.split = Split::Test;
  return out;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                              std::uint64_t epoch) {
  if (batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = detail::make_rng(seed, {detail::kBatchStream, epoch});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  detail::write_magic(out, kDataMagic);
  detail::write_u32(out, static_cast<std::uint32_t>(ds.split));
  detail::write_u32(out, static_cast<std::uint32_t>(ds.size()));
  detail::write_u32(out, static_cast<std::uint32_t>(ds.dim()));
  detail::write_u32(out, static_cast<std::uint32_t>(ds.class_count));
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) detail::write_f64(out, ds.features.data()[i]);
  for (int y : ds.true_labels) detail::write_u32(out, static_cast<std::uint32_t>(y));
  for (int y : ds.observed_labels) detail::write_u32(out, static_cast<std::uint32_t>(y));
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  detail::expect_magic(in, kDataMagic);
  Dataset ds;
  const auto split = detail::read_u32(in);
  if (split > 1) throw Error(ErrorCode::InvalidDims, "unknown split tag");
  ds.split = static_cast<Split>(split);
  const auto n = detail::read_u32(in);
  const auto d = detail::read_u32(in);
  ds.class_count = static_cast<int>(detail::read_u32(in));
  ds.features.resize(n, d);
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = detail::read_f64(in);
  ds.true_labels.resize(n);
  ds.observed_labels.resize(n);
  for (auto& y : ds.true_labels) y = static_cast<int>(detail::read_u32(in));
  for (auto& y : ds.observed_labels) y = static_cast<int>(detail::read_u32(in));
  ds.validate();
  return ds;
}

Matrix one_hot(const std::vector<int>& labels, int class_count) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return out;
}

}  // namespace d2l

#include "momap/compress.hpp"

#include <Eigen/SVD>

#include <cmath>

#include "momap/error.hpp"

namespace momap {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void canonicalize_sign(Eigen::Ref<Eigen::RowVectorXd> row) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (std::abs(row(i)) > best) {
      best = std::abs(row(i));
      arg = i;
    }
  }
  if (row(arg) < 0.0) row = -row;
}

}  // namespace

CompressedMoMap compress(const MoMap& m, std::size_t channels) {
  const std::size_t cols = m.frames() * 3;
  if (channels < 1 || channels > cols) {
    throw ValidationError("channels must lie in [1, " + std::to_string(cols) + "], got " +
                          std::to_string(channels));
  }
  std::vector<std::size_t> rows;
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    if (!m.covered(p)) continue;
    if (!m.fully_valid(p)) {
      throw ValidationError("compress needs fully valid trajectories; pixel (" +
                            std::to_string(p / m.width()) + "," +
                            std::to_string(p % m.width()) + ") has invalid entries");
    }
    rows.push_back(p);
  }

  CompressedMoMap c;
  c.height = m.height();
  c.width = m.width();
  c.frames = m.frames();
  c.channels = channels;
  c.time_step = m.time_step();
  c.mean.assign(cols, 0.0);
  c.basis.assign(channels * cols, 0.0);
  c.coefficients.assign(m.pixels() * channels, 0.0);
  c.valid_t0.assign(m.pixels(), 0);

  const auto pos = m.positions();
  RowMatrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.valid_t0[rows[i]] = 1;
    for (std::size_t j = 0; j < cols; ++j) x(i, j) = pos[rows[i] * cols + j];
  }
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(cols));
  if (!rows.empty()) {
    // Fixed-order column sums keep the result independent of Eigen's
    // internal reduction order.
    for (Eigen::Index i = 0; i < x.rows(); ++i) mean += x.row(i);
    mean /= static_cast<double>(rows.size());
    x.rowwise() -= mean;
  }

  RowMatrix basis(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(cols));
  if (x.rows() > 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullV);
    const Eigen::MatrixXd& v = svd.matrixV();
    for (std::size_t k = 0; k < channels; ++k) {
      basis.row(static_cast<Eigen::Index>(k)) = v.col(static_cast<Eigen::Index>(k)).transpose();
    }
  } else {
    basis = RowMatrix::Identity(static_cast<Eigen::Index>(channels),
                                static_cast<Eigen::Index>(cols));
  }
  for (Eigen::Index k = 0; k < basis.rows(); ++k) canonicalize_sign(basis.row(k));

  const RowMatrix coeff = x * basis.transpose();
  for (std::size_t j = 0; j < cols; ++j) c.mean[j] = mean(static_cast<Eigen::Index>(j));
  for (std::size_t k = 0; k < channels; ++k) {
    for (std::size_t j = 0; j < cols; ++j) {
      c.basis[k * cols + j] = basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < channels; ++k) {
      c.coefficients[rows[i] * channels + k] =
          coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
  }
  return c;
}

MoMap decompress(const CompressedMoMap& c, std::size_t frames) {
  const std::size_t cols = frames * 3;
  if (cols != c.row_length() || c.mean.size() != cols ||
      c.basis.size() != c.channels * cols ||
      c.coefficients.size() != c.height * c.width * c.channels ||
      c.valid_t0.size() != c.height * c.width) {
    throw ShapeError("compressed MoMap does not match " + std::to_string(frames) + " frames");
  }
  MoMap m(c.height, c.width, frames, c.time_step);
  auto pos = m.positions();
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    if (!c.valid_t0[p]) continue;
    const double* coeff = &c.coefficients[p * c.channels];
    for (std::size_t j = 0; j < cols; ++j) {
      double v = c.mean[j];
      for (std::size_t k = 0; k < c.channels; ++k) v += coeff[k] * c.basis[k * cols + j];
      pos[p * cols + j] = v;
    }
    for (std::size_t t = 0; t < frames; ++t) m.set_valid(p, t, true);
  }
  return m;
}

double reconstruction_rmse(const MoMap& m, const CompressedMoMap& c) {
  if (m.height() != c.height || m.width() != c.width || m.frames() != c.frames) {
    throw ShapeError("MoMap and compressed code have different dimensions");
  }
  const MoMap r = decompress(c, m.frames());
  const std::size_t cols = m.frames() * 3;
  const auto a = m.positions();
  const auto b = r.positions();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < m.pixels(); ++p) {
    if (m.covered(p) != static_cast<bool>(c.valid_t0[p])) {
      throw ShapeError("MoMap coverage differs from the compressed code");
    }
    if (!m.covered(p)) continue;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = a[p * cols + j] - b[p * cols + j];
      sum += d * d;
    }
    n += cols;
  }
  return n == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(n));
}

CompressionStats compression_stats(const CompressedMoMap& c) {
  CompressionStats s;
  const std::uint64_t hw = c.height * c.width;
  s.raw_values = hw * c.row_length();
  s.coefficient_values = hw * c.channels;
  s.basis_values = c.channels * c.row_length() + c.row_length();
  s.coefficient_ratio = static_cast<double>(s.raw_values) /
                        static_cast<double>(s.coefficient_values);
  s.total_ratio = static_cast<double>(s.raw_values) /
                  static_cast<double>(s.coefficient_values + s.basis_values);
  return s;
}

}  // namespace momap

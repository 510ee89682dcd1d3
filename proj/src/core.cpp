#include "marcf/core.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>

namespace marcf {

MatrixSeries::MatrixSeries(std::vector<Matrix> data,
                           std::vector<std::string> row_labels,
                           std::vector<std::string> col_labels)
    : data_(std::move(data)),
      row_labels_(std::move(row_labels)),
      col_labels_(std::move(col_labels)) {
  if (data_.empty()) throw ShapeError("MatrixSeries: no observations");
  p1_ = data_.front().rows();
  p2_ = data_.front().cols();
  if (p1_ <= 0 || p2_ <= 0) throw ShapeError("MatrixSeries: empty matrices");
  for (std::size_t t = 0; t < data_.size(); ++t) {
    if (data_[t].rows() != p1_ || data_[t].cols() != p2_)
      throw ShapeError("MatrixSeries: observation " + std::to_string(t) +
                       " has a different shape");
    if (!data_[t].allFinite())
      throw ShapeError("MatrixSeries: observation " + std::to_string(t) +
                       " has non-finite entries");
  }
  if (!row_labels_.empty() && static_cast<Eigen::Index>(row_labels_.size()) != p1_)
    throw ShapeError("MatrixSeries: row label count differs from p1");
  if (!col_labels_.empty() && static_cast<Eigen::Index>(col_labels_.size()) != p2_)
    throw ShapeError("MatrixSeries: column label count differs from p2");
}

MatrixSeries MatrixSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > data_.size() || count == 0)
    throw ShapeError("MatrixSeries::slice out of range");
  std::vector<Matrix> part(data_.begin() + static_cast<std::ptrdiff_t>(first),
                           data_.begin() + static_cast<std::ptrdiff_t>(first + count));
  return MatrixSeries(std::move(part), row_labels_, col_labels_);
}

MatrixSeries MatrixSeries::scaled(double c) const {
  std::vector<Matrix> out;
  out.reserve(data_.size());
  for (const auto& y : data_) out.push_back(c * y);
  return MatrixSeries(std::move(out), row_labels_, col_labels_);
}

TransitionSample::TransitionSample(const MatrixSeries& series) {
  if (series.length() < 1) throw ShapeError("series needs at least two observations");
  predictors.assign(series.data().begin(), series.data().end() - 1);
  responses.assign(series.data().begin() + 1, series.data().end());
}

TransitionSample::TransitionSample(std::vector<Matrix> x, std::vector<Matrix> y)
    : predictors(std::move(x)), responses(std::move(y)) {
  if (predictors.size() != responses.size() || responses.empty())
    throw ShapeError("TransitionSample: predictor/response counts differ or are zero");
  const auto p1 = responses.front().rows();
  const auto p2 = responses.front().cols();
  for (std::size_t t = 0; t < responses.size(); ++t) {
    if (responses[t].rows() != p1 || responses[t].cols() != p2 ||
        predictors[t].rows() != p1 || predictors[t].cols() != p2)
      throw ShapeError("TransitionSample: inconsistent shapes");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

Rng Rng::derive(std::uint64_t master, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(master) ^ (index + 0x632be59bd9b4e019ULL)));
}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

Matrix Rng::gaussian(Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  // Filled column by column so draws follow the vec order.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix mat(const Vector& v, Eigen::Index p, Eigen::Index q) {
  if (v.size() != p * q)
    throw ShapeError("mat: vector length " + std::to_string(v.size()) +
                     " is not " + std::to_string(p) + "x" + std::to_string(q));
  return Eigen::Map<const Matrix>(v.data(), p, q);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {

void check_kron_square(const Matrix& a, Eigen::Index p1, Eigen::Index p2, const char* who) {
  if (p1 <= 0 || p2 <= 0 || a.rows() != p1 * p2 || a.cols() != p1 * p2)
    throw ShapeError(std::string(who) + ": expected a square matrix of order p1*p2");
}

}  // namespace

// Entry (i2*p1 + i1, j2*p1 + j1) of A2 (x) A1 equals A2(i2, j2) * A1(i1, j1);
// it lands at row vec-index of (i2, j2) and column vec-index of (i1, j1).
Matrix rearrange(const Matrix& a, Eigen::Index p1, Eigen::Index p2) {
  check_kron_square(a, p1, p2, "rearrange");
  Matrix out(p2 * p2, p1 * p1);
  for (Eigen::Index j2 = 0; j2 < p2; ++j2)
    for (Eigen::Index i2 = 0; i2 < p2; ++i2) {
      const auto row = i2 + j2 * p2;
      for (Eigen::Index j1 = 0; j1 < p1; ++j1)
        for (Eigen::Index i1 = 0; i1 < p1; ++i1)
          out(row, i1 + j1 * p1) = a(i2 * p1 + i1, j2 * p1 + j1);
    }
  return out;
}

Matrix inverse_rearrange(const Matrix& r, Eigen::Index p1, Eigen::Index p2) {
  if (p1 <= 0 || p2 <= 0 || r.rows() != p2 * p2 || r.cols() != p1 * p1)
    throw ShapeError("inverse_rearrange: expected a p2^2 x p1^2 matrix");
  Matrix out(p1 * p2, p1 * p2);
  for (Eigen::Index j2 = 0; j2 < p2; ++j2)
    for (Eigen::Index i2 = 0; i2 < p2; ++i2) {
      const auto row = i2 + j2 * p2;
      for (Eigen::Index j1 = 0; j1 < p1; ++j1)
        for (Eigen::Index i1 = 0; i1 < p1; ++i1)
          out(i2 * p1 + i1, j2 * p1 + j1) = r(row, i1 + j1 * p1);
    }
  return out;
}

bool has_orthonormal_columns(const Matrix& m, double tol) {
  if (m.cols() == 0) return true;
  if (m.cols() > m.rows()) return false;
  const Matrix gram = m.transpose() * m;
  return (gram - Matrix::Identity(m.cols(), m.cols())).norm() <= tol;
}

Matrix projector(const Matrix& m) {
  if (!has_orthonormal_columns(m))
    throw ShapeError("projector: columns are not orthonormal");
  return m * m.transpose();
}

Matrix complement_projector(const Matrix& m) {
  return Matrix::Identity(m.rows(), m.rows()) - projector(m);
}

std::optional<double> sin_theta_max(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("sin_theta_max: bases must have the same shape");
  if (a.cols() == 0) return std::nullopt;
  if (!has_orthonormal_columns(a) || !has_orthonormal_columns(b))
    throw ShapeError("sin_theta_max: bases must be orthonormal");
  Eigen::JacobiSVD<Matrix> svd(a.transpose() * b);
  const double s1 = std::min(1.0, svd.singularValues()(0));
  return std::sqrt(std::max(0.0, 1.0 - s1 * s1));
}

ThinQr thin_qr(const Matrix& m) {
  const auto k = m.cols();
  if (k == 0) return {Matrix(m.rows(), 0), Matrix(0, 0)};
  if (k > m.rows()) throw ShapeError("thin_qr: more columns than rows");
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0) {
      q.col(j) *= -1.0;
      r.row(j) *= -1.0;
    }
  }
  return {std::move(q), std::move(r)};
}

Matrix random_orthonormal(Rng& rng, Eigen::Index p, Eigen::Index k) {
  if (k > p) throw ShapeError("random_orthonormal: k exceeds p");
  if (k < 0) throw ShapeError("random_orthonormal: negative k");
  return thin_qr(rng.gaussian(p, k)).q;
}

void fix_column_signs(Matrix& m, double tol) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > tol) {
        if (m(i, j) < 0) m.col(j) *= -1.0;
        break;
      }
    }
  }
}

Matrix polar_factor(const Matrix& m) {
  if (m.size() == 0) return Matrix(m.rows(), m.cols());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Matrix leading_left_singular_vectors(const Matrix& m, Eigen::Index k) {
  if (k > m.rows()) throw ShapeError("leading_left_singular_vectors: k too large");
  if (k == 0) return Matrix(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
  Matrix u = svd.matrixU().leftCols(k);
  fix_column_signs(u);
  return u;
}

Matrix leading_eigenvectors(const Matrix& symmetric, Eigen::Index k) {
  if (k > symmetric.rows()) throw ShapeError("leading_eigenvectors: k too large");
  if (k == 0) return Matrix(symmetric.rows(), 0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  // Ascending order from Eigen; take the tail reversed.
  Matrix v(symmetric.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) v.col(j) = eig.eigenvectors().col(symmetric.rows() - 1 - j);
  fix_column_signs(v);
  return v;
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("hcat: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

std::function<void(const std::string&)>& sink() {
  static std::function<void(const std::string&)> s = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return s;
}

}  // namespace

void set_warning_sink(std::function<void(const std::string&)> s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink() = std::move(s);
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace marcf

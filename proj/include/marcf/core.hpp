#ifndef MARCF_CORE_HPP
#define MARCF_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace marcf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs with inconsistent shapes or out-of-range structural dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Numerical failures: divergence, rank deficiency, failed eigensolves.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Tolerance used to accept a matrix as having orthonormal columns.
inline constexpr double kOrthonormalTol = 1e-10;

/**
 * An ordered sequence Y_0, ..., Y_T of p1 x p2 real matrices.
 *
 * `length()` is T, the number of transitions; `size()` is T + 1.
 * Optional row and column labels are carried through to file output.
 */
class MatrixSeries {
 public:
  MatrixSeries() = default;
  explicit MatrixSeries(std::vector<Matrix> data,
                        std::vector<std::string> row_labels = {},
                        std::vector<std::string> col_labels = {});

  Eigen::Index rows() const { return p1_; }
  Eigen::Index cols() const { return p2_; }
  std::size_t size() const { return data_.size(); }
  std::size_t length() const { return data_.empty() ? 0 : data_.size() - 1; }

  const Matrix& operator[](std::size_t t) const { return data_[t]; }
  const std::vector<Matrix>& data() const { return data_; }
  const std::vector<std::string>& row_labels() const { return row_labels_; }
  const std::vector<std::string>& col_labels() const { return col_labels_; }

  /// Observations [first, first + count) as a new series (labels kept).
  MatrixSeries slice(std::size_t first, std::size_t count) const;

  /// Every entry multiplied by `c`.
  MatrixSeries scaled(double c) const;

 private:
  std::vector<Matrix> data_;
  Eigen::Index p1_ = 0;
  Eigen::Index p2_ = 0;
  std::vector<std::string> row_labels_;
  std::vector<std::string> col_labels_;
};

/**
 * Pairs (X_t, Y_t) entering the least-squares loss, X_t being the predictor
 * of Y_t.  Built from a MatrixSeries as X_t = Y_{t-1}; it can also hold
 * independent pairs, which is how exact-response (noise-free) regression
 * problems are posed.
 */
struct TransitionSample {
  std::vector<Matrix> predictors;
  std::vector<Matrix> responses;

  TransitionSample() = default;
  TransitionSample(const MatrixSeries& series);  // NOLINT: implicit on purpose
  TransitionSample(std::vector<Matrix> predictors, std::vector<Matrix> responses);

  std::size_t size() const { return responses.size(); }
  Eigen::Index rows() const { return responses.empty() ? 0 : responses.front().rows(); }
  Eigen::Index cols() const { return responses.empty() ? 0 : responses.front().cols(); }
};

/**
 * Seeded random stream.  Backed by std::mt19937_64; identical seeds give
 * identical draws within one build.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent handle for replication `index` of a run seeded with `master`.
  static Rng derive(std::uint64_t master, std::uint64_t index);

  std::uint64_t seed() const { return seed_; }
  double normal();
  double uniform(double lo, double hi);
  Matrix gaussian(Eigen::Index rows, Eigen::Index cols);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Column-major vectorization.
Vector vec(const Matrix& m);

/// Inverse of vec: reshape a length p*q vector into p x q, column-major.
Matrix mat(const Vector& v, Eigen::Index p, Eigen::Index q);

Matrix kron(const Matrix& a, const Matrix& b);

/**
 * Kronecker rearrangement.  For A = A2 (x) A1 with A1 p1 x p1 and A2 p2 x p2
 * the result is vec(A2) vec(A1)^T, a p2^2 x p1^2 matrix.  The map permutes
 * entries, so it is linear and preserves the Frobenius norm.
 */
Matrix rearrange(const Matrix& a, Eigen::Index p1, Eigen::Index p2);

/// Exact inverse of rearrange.
Matrix inverse_rearrange(const Matrix& r, Eigen::Index p1, Eigen::Index p2);

bool has_orthonormal_columns(const Matrix& m, double tol = kOrthonormalTol);

/// M M^T for M with orthonormal columns; throws ShapeError otherwise.
Matrix projector(const Matrix& m);

/// I - M M^T.
Matrix complement_projector(const Matrix& m);

/**
 * Sine of the smallest canonical angle between span(a) and span(b), i.e.
 * sqrt(1 - s_1^2) with s_1 the largest singular value of a^T b.  Returns
 * nullopt when the subspaces are zero-dimensional.
 */
std::optional<double> sin_theta_max(const Matrix& a, const Matrix& b);

/// Q factor of a Gaussian p x k draw, signs fixed so diag(R) >= 0.
Matrix random_orthonormal(Rng& rng, Eigen::Index p, Eigen::Index k);

/// Thin QR with the sign convention diag(R) >= 0.  Handles zero columns.
struct ThinQr {
  Matrix q;
  Matrix r;
};
ThinQr thin_qr(const Matrix& m);

/// Flip column signs so each column's first entry with |x| > tol is positive.
void fix_column_signs(Matrix& m, double tol = 1e-12);

/// Orthogonal U V^T maximizing <Q, m> over the orthogonal group.
Matrix polar_factor(const Matrix& m);

/// Leading k left singular vectors, signs fixed.
Matrix leading_left_singular_vectors(const Matrix& m, Eigen::Index k);

/// Leading k eigenvectors of a symmetric matrix, signs fixed.
Matrix leading_eigenvectors(const Matrix& symmetric, Eigen::Index k);

/// Route non-fatal diagnostics; the default sink writes to stderr.
void set_warning_sink(std::function<void(const std::string&)> sink);
void warn(const std::string& message);

/// Horizontal concatenation [a b]; either side may have zero columns.
Matrix hcat(const Matrix& a, const Matrix& b);

}  // namespace marcf

#endif  // MARCF_CORE_HPP

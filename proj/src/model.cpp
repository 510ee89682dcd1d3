#include "marcf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace marcf {

void StructuralDims::validate() const {
  const char* names[2] = {"1", "2"};
  for (int m = 0; m < 2; ++m) {
    const std::string i = names[m];
    if (p(m) < 1) throw ShapeError("p" + i + " must be positive");
    if (d(m) < 0) throw ShapeError("d" + i + " must be nonnegative");
    if (r(m) < 0) throw ShapeError("r" + i + " must be nonnegative");
    if (d(m) > r(m)) throw ShapeError("d" + i + " exceeds r" + i);
    if (r(m) > p(m)) throw ShapeError("r" + i + " exceeds p" + i);
  }
}

Matrix ModeBlocks::assemble() const {
  return response_basis() * D * predictor_basis().transpose();
}

ModeBlocks& ModeBlocks::operator+=(const ModeBlocks& o) {
  C += o.C;
  R += o.R;
  P += o.P;
  D += o.D;
  return *this;
}

ModeBlocks& ModeBlocks::operator*=(double s) {
  C *= s;
  R *= s;
  P *= s;
  D *= s;
  return *this;
}

double ModeBlocks::squared_norm() const {
  return C.squaredNorm() + R.squaredNorm() + P.squaredNorm() + D.squaredNorm();
}

StructuralDims MarcfParams::dims() const {
  const auto& m1 = modes[0];
  const auto& m2 = modes[1];
  return StructuralDims{static_cast<int>(m1.C.rows()), static_cast<int>(m2.C.rows()),
                        static_cast<int>(m1.D.rows()), static_cast<int>(m2.D.rows()),
                        static_cast<int>(m1.C.cols()), static_cast<int>(m2.C.cols())};
}

void MarcfParams::validate() const {
  for (int m = 0; m < 2; ++m) {
    const auto& blk = modes[m];
    const auto p = blk.C.rows();
    const auto d = blk.C.cols();
    const auto k = blk.R.cols();
    const std::string i = m == 0 ? "1" : "2";
    if (blk.R.rows() != p || blk.P.rows() != p)
      throw ShapeError("mode " + i + ": C, R, P must share the row count");
    if (blk.P.cols() != k) throw ShapeError("mode " + i + ": R and P widths differ");
    if (blk.D.rows() != d + k || blk.D.cols() != d + k)
      throw ShapeError("mode " + i + ": D must be r x r");
    if (d + k > p) throw ShapeError("mode " + i + ": rank exceeds dimension");
  }
  if (!(b > 0.0) || !std::isfinite(b)) throw ShapeError("balance scalar b must be positive");
}

CoefPair assemble(const MarcfParams& theta) {
  return CoefPair{theta.modes[0].assemble(), theta.modes[1].assemble()};
}

long df_count(const StructuralDims& dims) {
  dims.validate();
  const long p1 = dims.p1, p2 = dims.p2, r1 = dims.r1, r2 = dims.r2;
  return p1 * (2 * r1 - dims.d1) + p2 * (2 * r2 - dims.d2) + r1 * r1 + r2 * r2;
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("spectral_radius: matrix is not square");
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_radius: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius_product(const CoefPair& c) {
  return spectral_radius(c.A1) * spectral_radius(c.A2);
}

CoefPair equalize_norms(const CoefPair& c) {
  const double n1 = c.A1.norm();
  const double n2 = c.A2.norm();
  if (n1 == 0.0 || n2 == 0.0) return c;
  const double s = std::sqrt(n2 / n1);
  return CoefPair{s * c.A1, c.A2 / s};
}

namespace {

// Orthonormalize [C X] as [Qc Qx] T with T upper block triangular.
struct StackedBasis {
  Matrix q;  // [Qc Qx]
  Matrix t;  // r x r
};

StackedBasis orthonormalize_stack(const ThinQr& qc, const Matrix& x, double scale, const char* what) {
  const auto p = qc.q.rows();
  const auto d = qc.q.cols();
  const auto k = x.cols();
  const Matrix coupling = qc.q.transpose() * x;
  const Matrix residual = x - qc.q * coupling;
  const ThinQr qx = thin_qr(residual);
  const double tol = 1e-12 * std::max(scale, std::numeric_limits<double>::min());
  for (Eigen::Index j = 0; j < k; ++j)
    if (std::abs(qx.r(j, j)) <= tol)
      throw NumericalError(std::string("rebalance: rank-deficient [C ") + what + "]");
  StackedBasis out{Matrix(p, d + k), Matrix::Zero(d + k, d + k)};
  out.q.leftCols(d) = qc.q;
  out.q.rightCols(k) = qx.q;
  out.t.topLeftCorner(d, d) = qc.r;
  out.t.topRightCorner(d, k) = coupling;
  out.t.bottomRightCorner(k, k) = qx.r;
  return out;
}

}  // namespace

MarcfParams rebalance(const MarcfParams& theta, double b_target, bool equalize) {
  theta.validate();
  if (!(b_target > 0.0)) throw ShapeError("rebalance: b_target must be positive");
  MarcfParams out;
  out.b = b_target;
  for (int m = 0; m < 2; ++m) {
    const auto& in = theta.modes[m];
    const auto d = in.C.cols();
    const auto k = in.R.cols();
    const double scale = std::max({in.C.norm(), in.R.norm(), in.P.norm()});
    const ThinQr qc = thin_qr(in.C);
    for (Eigen::Index j = 0; j < d; ++j)
      if (std::abs(qc.r(j, j)) <= 1e-12 * std::max(scale, std::numeric_limits<double>::min()))
        throw NumericalError("rebalance: rank-deficient C");
    const StackedBasis u = orthonormalize_stack(qc, in.R, scale, "R");
    const StackedBasis v = orthonormalize_stack(qc, in.P, scale, "P");

    auto& blk = out.modes[m];
    blk.C = b_target * qc.q;
    blk.R = b_target * u.q.rightCols(k);
    blk.P = b_target * v.q.rightCols(k);
    blk.D = u.t * in.D * v.t.transpose() / (b_target * b_target);
  }
  if (equalize) {
    const double n1 = out.modes[0].assemble().norm();
    const double n2 = out.modes[1].assemble().norm();
    if (n1 > 0.0 && n2 > 0.0) {
      const double s = std::sqrt(n2 / n1);
      out.modes[0].D *= s;
      out.modes[1].D /= s;
    }
  }
  return out;
}

double signal_strength(const MarcfParams& theta) {
  const CoefPair c = assemble(theta);
  return std::sqrt(c.A1.norm() * c.A2.norm());
}

double identification_defect(const MarcfParams& theta) {
  double worst = 0.0;
  const double b2 = theta.b * theta.b;
  for (const auto& blk : theta.modes) {
    const Matrix u = blk.response_basis();
    const Matrix v = blk.predictor_basis();
    const auto r = u.cols();
    if (r == 0) continue;
    const Matrix eye = Matrix::Identity(r, r);
    worst = std::max(worst, (u.transpose() * u - b2 * eye).norm());
    worst = std::max(worst, (v.transpose() * v - b2 * eye).norm());
  }
  return worst;
}

ModeBlocks rotate_mode(const ModeBlocks& m, const Matrix& Q1, const Matrix& Q2, const Matrix& Q3) {
  const auto d = m.C.cols();
  const auto k = m.R.cols();
  Matrix left = Matrix::Zero(d + k, d + k);
  Matrix right = Matrix::Zero(d + k, d + k);
  left.topLeftCorner(d, d) = Q1;
  left.bottomRightCorner(k, k) = Q2;
  right.topLeftCorner(d, d) = Q1;
  right.bottomRightCorner(k, k) = Q3;
  return ModeBlocks{m.C * Q1, m.R * Q2, m.P * Q3, left.transpose() * m.D * right};
}

double aligned_squared_distance(const ModeBlocks& a, const ModeBlocks& b, const Matrix& Q1,
                                const Matrix& Q2, const Matrix& Q3) {
  const ModeBlocks rb = rotate_mode(b, Q1, Q2, Q3);
  return (a.C - rb.C).squaredNorm() + (a.R - rb.R).squaredNorm() +
         (a.P - rb.P).squaredNorm() + (a.D - rb.D).squaredNorm();
}

namespace {

// Block-coordinate descent on (Q1, Q2, Q3).  Q2 and Q3 enter linearly and are
// solved exactly by Procrustes.  Q1 enters the D11 block quadratically; its
// step maximizes a convexified linearization, which never increases the
// objective.
ModeAlignment descend(const ModeBlocks& a, const ModeBlocks& b, Matrix Q1, Matrix Q2, Matrix Q3) {
  const auto d = a.C.cols();
  const auto k = a.R.cols();
  const Matrix D11 = a.D.topLeftCorner(d, d), D12 = a.D.topRightCorner(d, k);
  const Matrix D21 = a.D.bottomLeftCorner(k, d), D22 = a.D.bottomRightCorner(k, k);
  const Matrix E11 = b.D.topLeftCorner(d, d), E12 = b.D.topRightCorner(d, k);
  const Matrix E21 = b.D.bottomLeftCorner(k, d), E22 = b.D.bottomRightCorner(k, k);
  const double convexify = D11.norm() * E11.norm();

  double current = aligned_squared_distance(a, b, Q1, Q2, Q3);
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double before = current;
    if (d > 0) {
      const Matrix g = b.C.transpose() * a.C + E12 * Q3 * D12.transpose() +
                       E21.transpose() * Q2 * D21 + E11 * Q1 * D11.transpose() +
                       E11.transpose() * Q1 * D11 + 2.0 * convexify * Q1;
      const Matrix cand = polar_factor(g);
      const double value = aligned_squared_distance(a, b, cand, Q2, Q3);
      if (value <= current) {
        Q1 = cand;
        current = value;
      }
    }
    if (k > 0) {
      Q2 = polar_factor(b.R.transpose() * a.R + E21 * Q1 * D21.transpose() +
                        E22 * Q3 * D22.transpose());
      Q3 = polar_factor(b.P.transpose() * a.P + E12.transpose() * Q1 * D12 +
                        E22.transpose() * Q2 * D22);
      current = aligned_squared_distance(a, b, Q1, Q2, Q3);
    }
    if (before - current < 1e-12) break;
  }
  return ModeAlignment{std::move(Q1), std::move(Q2), std::move(Q3), std::max(0.0, current)};
}

Matrix reflect_first(const Matrix& q) {
  Matrix out = q;
  if (out.cols() > 0) out.col(0) *= -1.0;
  return out;
}

}  // namespace

ModeAlignment align_mode(const ModeBlocks& a, const ModeBlocks& b) {
  if (a.C.rows() != b.C.rows() || a.C.cols() != b.C.cols() || a.R.cols() != b.R.cols())
    throw ShapeError("theta_distance: dimension mismatch");
  const Matrix Q1 = polar_factor(b.C.transpose() * a.C);
  const Matrix Q2 = polar_factor(b.R.transpose() * a.R);
  const Matrix Q3 = polar_factor(b.P.transpose() * a.P);
  // One start per connected component (sign of determinant) of each
  // orthogonal group; Procrustes steps do not cross between components.
  ModeAlignment best;
  best.squared_distance = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 8; ++mask) {
    if ((mask & 1) && Q1.cols() == 0) continue;
    if ((mask & 2) && Q2.cols() == 0) continue;
    if ((mask & 4) && Q3.cols() == 0) continue;
    ModeAlignment cand = descend(a, b, (mask & 1) ? reflect_first(Q1) : Q1,
                                 (mask & 2) ? reflect_first(Q2) : Q2,
                                 (mask & 4) ? reflect_first(Q3) : Q3);
    if (cand.squared_distance < best.squared_distance) best = std::move(cand);
  }
  return best;
}

double theta_distance(const MarcfParams& a, const MarcfParams& b) {
  if (!(a.dims() == b.dims())) throw ShapeError("theta_distance: dimension mismatch");
  double total = 0.0;
  for (int m = 0; m < 2; ++m) total += align_mode(a.modes[m], b.modes[m]).squared_distance;
  return std::sqrt(total);
}

MarcfParams zero_params(const StructuralDims& dims, double b) {
  dims.validate();
  MarcfParams out;
  out.b = b;
  for (int m = 0; m < 2; ++m) {
    const int p = dims.p(m), r = dims.r(m), d = dims.d(m);
    out.modes[m] = ModeBlocks{Matrix::Zero(p, d), Matrix::Zero(p, r - d), Matrix::Zero(p, r - d),
                              Matrix::Zero(r, r)};
  }
  return out;
}

}  // namespace marcf

#include "marcf/init.hpp"

#include <cmath>
#include <sstream>

namespace marcf {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kTieGap = 1e-6;

Matrix truncate_rank(const Matrix& a, int r) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

void warn_on_tie(const Vector& s, Eigen::Index k, int mode, const char* what) {
  if (k <= 0 || k >= s.size()) return;
  const double gap = s(k - 1) - s(k);
  if (gap < kTieGap * std::max(s(k - 1), 1e-300)) {
    std::ostringstream msg;
    msg << "spectral_split: near tie in the " << what << " spectrum of mode " << mode + 1
        << " at index " << k << " (" << s(k - 1) << " vs " << s(k) << ")";
    warn(msg.str());
  }
}

// Orthonormal basis of span((I - C C^T) m), keeping column order.
Matrix orthonormalize_against(const Matrix& c, const Matrix& m) {
  if (m.cols() == 0) return m;
  const Matrix projected = c.cols() == 0 ? m : Matrix(m - c * (c.transpose() * m));
  ThinQr qr = thin_qr(projected);
  for (Eigen::Index j = 0; j < qr.r.cols(); ++j)
    if (qr.r(j, j) < 1e-8) throw NumericalError("spectral_split: specific basis collapses onto the common space");
  return qr.q;
}

ModeBlocks split_mode(const Matrix& a, int r, int d, int mode, double b) {
  const Eigen::Index p = a.rows();
  const int k = r - d;
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  // With no common part the SVD bases are used as is, so a rank-deficient
  // A (e.g. an over-sized reduced-rank seed) is harmless.
  const bool deficient = sv(r - 1) <= kRankTol;
  if (deficient && d > 0) {
    std::ostringstream msg;
    msg << "spectral_split: A" << mode + 1 << " has numerical rank below " << r
        << " (sigma_" << r << " = " << sv(r - 1) << ")";
    throw NumericalError(msg.str());
  }
  if (!deficient) warn_on_tie(sv, r, mode, "singular value");
  Matrix u = svd.matrixU().leftCols(r);
  Matrix v = svd.matrixV().leftCols(r);

  Matrix c_t(p, 0), r_t, p_t;
  if (d == 0) {
    fix_column_signs(u);
    fix_column_signs(v);
    r_t = u;
    p_t = v;
  } else {
    const Matrix pu = u * u.transpose();
    const Matrix pv = v * v.transpose();
    const Matrix eye = Matrix::Identity(p, p);
    if (k == 0) {
      r_t = Matrix(p, 0);
      p_t = Matrix(p, 0);
      const Matrix sum = pu + pv;
      c_t = leading_eigenvectors(0.5 * (sum + sum.transpose()), d);
    } else {
      const Matrix mr = pu * (eye - pv);
      const Matrix mp = pv * (eye - pu);
      Eigen::JacobiSVD<Matrix> sr(mr, Eigen::ComputeFullU);
      Eigen::JacobiSVD<Matrix> sp(mp, Eigen::ComputeFullU);
      warn_on_tie(sr.singularValues(), k, mode, "response-specific");
      warn_on_tie(sp.singularValues(), k, mode, "predictor-specific");
      r_t = sr.matrixU().leftCols(k);
      p_t = sp.matrixU().leftCols(k);
      fix_column_signs(r_t);
      fix_column_signs(p_t);
      const Matrix n = (eye - r_t * r_t.transpose()) * (eye - p_t * p_t.transpose());
      const Matrix m = n * (pu + pv) * n.transpose();
      c_t = leading_eigenvectors(0.5 * (m + m.transpose()), d);
      r_t = orthonormalize_against(c_t, r_t);
      p_t = orthonormalize_against(c_t, p_t);
      fix_column_signs(r_t);
      fix_column_signs(p_t);
    }
  }
  ModeBlocks out;
  const Matrix uu = hcat(c_t, r_t);
  const Matrix vv = hcat(c_t, p_t);
  out.C = b * c_t;
  out.R = b * r_t;
  out.P = b * p_t;
  out.D = uu.transpose() * a * vv / (b * b);
  return out;
}

}  // namespace

CoefPair nkp_seed(const LaggedMoments& moments, int r1, int r2, double ridge) {
  if (!(ridge >= 0.0)) throw ShapeError("nkp_seed: ridge must be nonnegative");
  const auto p1 = moments.p1();
  const auto p2 = moments.p2();
  if (r1 < 1 || r1 > p1 || r2 < 1 || r2 > p2) throw ShapeError("nkp_seed: ranks out of range");
  const Eigen::Index n = p1 * p2;
  const Matrix& sxx = moments.sxx();
  const double lambda = ridge * sxx.trace() / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sxx);
  if (eig.info() != Eigen::Success) throw NumericalError("nkp_seed: eigendecomposition failed");
  const Vector ev = eig.eigenvalues().array() + lambda;
  const double top = std::max(ev.maxCoeff(), 0.0);
  if (!(ev.minCoeff() > 1e-12 * top) || top == 0.0)
    throw NumericalError("nkp_seed: normal matrix is singular; use a positive ridge");
  const Matrix& q = eig.eigenvectors();
  // A = Syx (Sxx + lambda I)^{-1}
  const Matrix a_ls = (moments.syx() * q) * ev.cwiseInverse().asDiagonal() * q.transpose();

  const Matrix re = rearrange(a_ls, p1, p2);
  Eigen::BDCSVD<Matrix> svd(re, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma = svd.singularValues()(0);
  if (!(sigma > 0.0)) throw NumericalError("nkp_seed: least-squares coefficient is zero");
  Vector u = svd.matrixU().col(0);
  Vector v = svd.matrixV().col(0);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) {
        v = -v;
        u = -u;
      }
      break;
    }
  CoefPair out;
  out.A1 = truncate_rank(std::sqrt(sigma) * mat(v, p1, p1), r1);
  out.A2 = truncate_rank(std::sqrt(sigma) * mat(u, p2, p2), r2);
  return equalize_norms(out);
}

CoefPair nkp_seed(const TransitionSample& sample, int r1, int r2, double ridge) {
  return nkp_seed(LaggedMoments(sample), r1, r2, ridge);
}

MarcfParams spectral_split(const CoefPair& c, const StructuralDims& dims, double b) {
  dims.validate();
  if (!(b > 0.0)) throw ShapeError("spectral_split: b must be positive");
  if (c.A1.rows() != dims.p1 || c.A1.cols() != dims.p1 || c.A2.rows() != dims.p2 ||
      c.A2.cols() != dims.p2)
    throw ShapeError("spectral_split: coefficient shapes do not match dims");
  MarcfParams out;
  out.b = b;
  out.modes[0] = split_mode(c.A1, dims.r1, dims.d1, 0, b);
  out.modes[1] = split_mode(c.A2, dims.r2, dims.d2, 1, b);
  return out;
}

MarcfParams initialize(const LaggedMoments& moments, const StructuralDims& dims,
                       const FitConfig& cfg) {
  dims.validate();
  const CoefPair rr = fit_rrmar(moments, dims.r1, dims.r2, cfg);
  return spectral_split(rr, dims, cfg.hp.b);
}

MarcfParams initialize(const TransitionSample& sample, const StructuralDims& dims,
                       const FitConfig& cfg) {
  return initialize(LaggedMoments(sample), dims, cfg);
}

}  // namespace marcf

// Reference computations for tests, written without the library's fast paths.
#ifndef MARCF_TESTS_ORACLES_HPP
#define MARCF_TESTS_ORACLES_HPP

#include "marcf/objective.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using marcf::Matrix;
using marcf::MarcfParams;
using marcf::ModeBlocks;
using marcf::StructuralDims;
using marcf::Vector;

inline Vector vec(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) v(j * m.rows() + i) = m(i, j);
  return v;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

inline Matrix concat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) out.col(j) = a.col(j);
  for (Eigen::Index j = 0; j < b.cols(); ++j) out.col(a.cols() + j) = b.col(j);
  return out;
}

inline Matrix assemble_mode(const ModeBlocks& m) {
  return concat(m.C, m.R) * m.D * concat(m.C, m.P).transpose();
}

inline double kron_error(const marcf::CoefPair& est, const marcf::CoefPair& truth) {
  const Matrix k = kron(truth.A2, truth.A1);
  return (kron(est.A2, est.A1) - k).norm() / k.norm();
}

inline int uniform_int(marcf::Rng& rng, int lo, int hi) {
  return std::min(hi, lo + static_cast<int>(rng.uniform(0.0, hi - lo + 1)));
}

inline StructuralDims random_dims(marcf::Rng& rng, int pmin, int pmax, int rmin, int rmax) {
  StructuralDims d;
  d.p1 = uniform_int(rng, pmin, pmax);
  d.p2 = uniform_int(rng, pmin, pmax);
  d.r1 = uniform_int(rng, rmin, std::min(rmax, d.p1));
  d.r2 = uniform_int(rng, rmin, std::min(rmax, d.p2));
  d.d1 = uniform_int(rng, 0, d.r1);
  d.d2 = uniform_int(rng, 0, d.r2);
  return d;
}

// First k columns of the Q factor of a Gaussian p x p draw.
inline Matrix orthonormal(marcf::Rng& rng, Eigen::Index p, Eigen::Index k) {
  const Matrix g = rng.gaussian(p, p);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ() * Matrix::Identity(p, p);
  return q.leftCols(k);
}

/**
 * Identified parameters with b = 1 (C, R orthonormal and mutually
 * orthogonal, likewise C, P), D Gaussian / sqrt(r); then every block gets
 * i.i.d. N(0, eps^2) noise.
 */
inline MarcfParams perturbed_params(marcf::Rng& rng, const StructuralDims& dims, double eps) {
  MarcfParams theta;
  theta.b = 1.0;
  for (int m = 0; m < 2; ++m) {
    const int p = dims.p(m), r = dims.r(m), d = dims.d(m);
    const Matrix basis = orthonormal(rng, p, p);
    ModeBlocks& blk = theta.modes[m];
    blk.C = basis.leftCols(d);
    blk.R = basis.middleCols(d, r - d);
    // P: orthonormal inside the complement of C, drawn independently of R.
    const Matrix rest = basis.rightCols(p - d);
    blk.P = rest * orthonormal(rng, p - d, r - d);
    blk.D = rng.gaussian(r, r) / std::sqrt(static_cast<double>(r));
    if (eps > 0.0) {
      blk.C += eps * rng.gaussian(p, d);
      blk.R += eps * rng.gaussian(p, r - d);
      blk.P += eps * rng.gaussian(p, r - d);
      blk.D += eps * rng.gaussian(r, r);
    }
  }
  return theta;
}

inline marcf::TransitionSample random_sample(marcf::Rng& rng, Eigen::Index p1, Eigen::Index p2,
                                             int T) {
  std::vector<Matrix> ys;
  for (int t = 0; t <= T; ++t) ys.push_back(rng.gaussian(p1, p2));
  return marcf::TransitionSample(marcf::MatrixSeries(std::move(ys)));
}

// Objective through the explicit Kronecker product of the vectorized model.
inline double objective(const MarcfParams& theta, const marcf::TransitionSample& sample,
                        const marcf::Hyperparams& hp) {
  const Matrix a1 = assemble_mode(theta.modes[0]);
  const Matrix a2 = assemble_mode(theta.modes[1]);
  const Matrix k = kron(a2, a1);
  double loss = 0.0;
  for (std::size_t t = 0; t < sample.size(); ++t)
    loss += (vec(sample.responses[t]) - k * vec(sample.predictors[t])).squaredNorm();
  loss /= 2.0 * static_cast<double>(sample.size());
  const double imbalance = a1.squaredNorm() - a2.squaredNorm();
  double r2 = 0.0;
  for (const auto& blk : theta.modes) {
    const Matrix u = concat(blk.C, blk.R), v = concat(blk.C, blk.P);
    const Matrix eye = Matrix::Identity(u.cols(), u.cols());
    r2 += (u.transpose() * u - hp.b * hp.b * eye).squaredNorm();
    r2 += (v.transpose() * v - hp.b * hp.b * eye).squaredNorm();
  }
  return loss + hp.lambda1 / 4.0 * imbalance * imbalance + hp.lambda2 / 2.0 * r2;
}

inline marcf::GradientSet central_differences(const std::function<double(const MarcfParams&)>& f,
                                              const MarcfParams& theta, double h) {
  marcf::GradientSet out;
  MarcfParams work = theta;
  for (int m = 0; m < 2; ++m) {
    Matrix* blocks[4] = {&work.modes[m].C, &work.modes[m].R, &work.modes[m].P, &work.modes[m].D};
    Matrix* targets[4] = {&out.modes[m].C, &out.modes[m].R, &out.modes[m].P, &out.modes[m].D};
    for (int b = 0; b < 4; ++b) {
      Matrix& x = *blocks[b];
      Matrix g(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double saved = x.data()[i];
        x.data()[i] = saved + h;
        const double up = f(work);
        x.data()[i] = saved - h;
        const double down = f(work);
        x.data()[i] = saved;
        g.data()[i] = (up - down) / (2.0 * h);
      }
      *targets[b] = g;
    }
  }
  return out;
}

inline double max_relative_error(const marcf::GradientSet& g, const marcf::GradientSet& ref,
                                 double floor = 1e-8) {
  double worst = 0.0;
  for (int m = 0; m < 2; ++m) {
    const Matrix* a[4] = {&g.modes[m].C, &g.modes[m].R, &g.modes[m].P, &g.modes[m].D};
    const Matrix* b[4] = {&ref.modes[m].C, &ref.modes[m].R, &ref.modes[m].P, &ref.modes[m].D};
    for (int k = 0; k < 4; ++k) {
      if (b[k]->size() == 0) continue;
      worst = std::max(worst, (*a[k] - *b[k]).norm() / std::max(b[k]->norm(), floor));
    }
  }
  return worst;
}

struct RrmarEval {
  double value;
  marcf::GradientSet grad;
};

// d1 = d2 = 0: A_i = R_i D_i P_i^T, gradients written out for that case only.
inline RrmarEval rrmar_objective_and_gradient(const MarcfParams& theta,
                                              const marcf::TransitionSample& sample,
                                              const marcf::Hyperparams& hp) {
  const auto& m1 = theta.modes[0];
  const auto& m2 = theta.modes[1];
  const Matrix a1 = m1.R * m1.D * m1.P.transpose();
  const Matrix a2 = m2.R * m2.D * m2.P.transpose();
  const double t = static_cast<double>(sample.size());
  Matrix g1 = Matrix::Zero(a1.rows(), a1.cols());
  Matrix g2 = Matrix::Zero(a2.rows(), a2.cols());
  double loss = 0.0;
  for (std::size_t s = 0; s < sample.size(); ++s) {
    const Matrix& x = sample.predictors[s];
    const Matrix e = sample.responses[s] - a1 * x * a2.transpose();
    loss += e.squaredNorm();
    g1 -= e * a2 * x.transpose();
    g2 -= e.transpose() * a1 * x;
  }
  loss /= 2.0 * t;
  g1 /= t;
  g2 /= t;
  const double imbalance = a1.squaredNorm() - a2.squaredNorm();
  g1 += hp.lambda1 * imbalance * a1;
  g2 -= hp.lambda1 * imbalance * a2;
  const double b2 = hp.b * hp.b;
  RrmarEval out;
  double r2 = 0.0;
  const Matrix* gs[2] = {&g1, &g2};
  for (int m = 0; m < 2; ++m) {
    const auto& blk = theta.modes[m];
    const Matrix& g = *gs[m];
    const Matrix eye = Matrix::Identity(blk.R.cols(), blk.R.cols());
    const Matrix er = blk.R.transpose() * blk.R - b2 * eye;
    const Matrix ep = blk.P.transpose() * blk.P - b2 * eye;
    r2 += er.squaredNorm() + ep.squaredNorm();
    out.grad.modes[m].C = Matrix(blk.R.rows(), 0);
    out.grad.modes[m].R = g * blk.P * blk.D.transpose() + 2.0 * hp.lambda2 * blk.R * er;
    out.grad.modes[m].P = g.transpose() * blk.R * blk.D + 2.0 * hp.lambda2 * blk.P * ep;
    out.grad.modes[m].D = blk.R.transpose() * g * blk.P;
  }
  out.value = loss + hp.lambda1 / 4.0 * imbalance * imbalance + hp.lambda2 / 2.0 * r2;
  return out;
}

// Exhaustive minimum over Q blocks in O(1) = {+1, -1}; needs every
// rotation block to be at most one-dimensional.
inline double sign_brute_force_distance(const MarcfParams& a, const MarcfParams& b) {
  double total = 0.0;
  for (int m = 0; m < 2; ++m) {
    const ModeBlocks& x = a.modes[m];
    const ModeBlocks& y = b.modes[m];
    const Eigen::Index d = x.C.cols(), k = x.R.cols();
    double best = std::numeric_limits<double>::infinity();
    for (int s1 : {1, -1})
      for (int s2 : {1, -1})
        for (int s3 : {1, -1}) {
          Vector left(d + k), right(d + k);
          for (Eigen::Index i = 0; i < d; ++i) left(i) = right(i) = s1;
          for (Eigen::Index i = 0; i < k; ++i) {
            left(d + i) = s2;
            right(d + i) = s3;
          }
          const double v = (x.C - s1 * y.C).squaredNorm() + (x.R - s2 * y.R).squaredNorm() +
                           (x.P - s3 * y.P).squaredNorm() +
                           (x.D - left.asDiagonal() * y.D * right.asDiagonal()).squaredNorm();
          best = std::min(best, v);
        }
    total += best;
  }
  return std::sqrt(total);
}

inline double one_step_sse(const marcf::CoefPair& c, const Matrix& last, const Matrix& target) {
  const Matrix forecast = c.A1 * last * c.A2.transpose();
  const Matrix residual = target - forecast;
  return residual.squaredNorm();
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle

#endif  // MARCF_TESTS_ORACLES_HPP

#include "marcf/objective.hpp"

#include <algorithm>
#include <cmath>

namespace marcf {

double GradientSet::norm() const {
  return std::sqrt(modes[0].squared_norm() + modes[1].squared_norm());
}

namespace {

void check_shapes(const CoefPair& c, const TransitionSample& sample) {
  if (sample.size() == 0) throw ShapeError("transition sample is empty");
  if (c.A1.rows() != sample.rows() || c.A1.cols() != sample.rows() ||
      c.A2.rows() != sample.cols() || c.A2.cols() != sample.cols())
    throw ShapeError("coefficient shapes do not match the series (" +
                     std::to_string(sample.rows()) + "x" + std::to_string(sample.cols()) + ")");
}

// Columns vec(M_t), t = 1..T.
Matrix stack_vec(const std::vector<Matrix>& ms) {
  Matrix out(ms.front().size(), static_cast<Eigen::Index>(ms.size()));
  for (std::size_t t = 0; t < ms.size(); ++t) out.col(static_cast<Eigen::Index>(t)) = vec(ms[t]);
  return out;
}

}  // namespace

LaggedMoments::LaggedMoments(const TransitionSample& sample)
    : p1_(sample.rows()), p2_(sample.cols()), count_(sample.size()) {
  if (count_ == 0) throw ShapeError("LaggedMoments: empty sample");
  const Matrix x = stack_vec(sample.predictors);
  const Matrix y = stack_vec(sample.responses);
  sxx_ = x * x.transpose();
  syx_ = y * x.transpose();
  syy_ = y.squaredNorm();
}

Matrix LaggedMoments::contract_columns(const Matrix& s, const Matrix& m) const {
  Matrix out = Matrix::Zero(p1_, p1_);
  for (Eigen::Index l = 0; l < p2_; ++l)
    for (Eigen::Index j = 0; j < p2_; ++j) out.noalias() += m(j, l) * s.block(j * p1_, l * p1_, p1_, p1_);
  return out;
}

Matrix LaggedMoments::contract_rows(const Matrix& s, const Matrix& n) const {
  Matrix out(p2_, p2_);
  for (Eigen::Index l = 0; l < p2_; ++l)
    for (Eigen::Index j = 0; j < p2_; ++j)
      out(j, l) = s.block(j * p1_, l * p1_, p1_, p1_).cwiseProduct(n).sum();
  return out;
}

LaggedMoments::Evaluation LaggedMoments::evaluate(const CoefPair& c) const {
  if (c.A1.rows() != p1_ || c.A1.cols() != p1_ || c.A2.rows() != p2_ || c.A2.cols() != p2_)
    throw ShapeError("LaggedMoments: coefficient shapes do not match");
  const double t = static_cast<double>(count_);
  const Matrix cross1 = contract_columns(syx_, c.A2);                           // sum Y A2 X^T
  const Matrix gram1 = contract_columns(sxx_, c.A2.transpose() * c.A2);        // sum X A2'A2 X^T
  const Matrix cross2 = contract_rows(syx_, c.A1);                              // sum Y^T A1 X
  const Matrix gram2 = contract_rows(sxx_, c.A1.transpose() * c.A1);           // sum X^T A1'A1 X
  Evaluation ev;
  ev.grad_A1 = -(cross1 - c.A1 * gram1) / t;
  ev.grad_A2 = -(cross2 - c.A2 * gram2) / t;
  const double fitted = (c.A2.transpose() * c.A2).cwiseProduct(gram2).sum();
  const double loss = (syy_ - 2.0 * c.A1.cwiseProduct(cross1).sum() + fitted) / (2.0 * t);
  ev.loss = std::max(0.0, loss);
  return ev;
}

double LaggedMoments::loss(const CoefPair& c) const { return evaluate(c).loss; }

double ls_loss(const CoefPair& c, const TransitionSample& sample) {
  check_shapes(c, sample);
  double total = 0.0;
  const Matrix a2t = c.A2.transpose();
  for (std::size_t t = 0; t < sample.size(); ++t)
    total += (sample.responses[t] - c.A1 * sample.predictors[t] * a2t).squaredNorm();
  return total / (2.0 * static_cast<double>(sample.size()));
}

double ls_loss(const MarcfParams& theta, const TransitionSample& sample) {
  return ls_loss(assemble(theta), sample);
}

double reg1(const MarcfParams& theta) {
  const CoefPair c = assemble(theta);
  const double diff = c.A1.squaredNorm() - c.A2.squaredNorm();
  return diff * diff;
}

double reg2(const MarcfParams& theta, double b) {
  double total = 0.0;
  const double b2 = b * b;
  for (const auto& blk : theta.modes) {
    const Matrix u = blk.response_basis();
    const Matrix v = blk.predictor_basis();
    const Matrix eye = Matrix::Identity(u.cols(), u.cols());
    total += (u.transpose() * u - b2 * eye).squaredNorm();
    total += (v.transpose() * v - b2 * eye).squaredNorm();
  }
  return total;
}

double objective(const MarcfParams& theta, const TransitionSample& sample, const Hyperparams& hp) {
  return ls_loss(theta, sample) + hp.lambda1 / 4.0 * reg1(theta) +
         hp.lambda2 / 2.0 * reg2(theta, hp.b);
}

double objective(const MarcfParams& theta, const LaggedMoments& moments, const Hyperparams& hp) {
  return moments.loss(assemble(theta)) + hp.lambda1 / 4.0 * reg1(theta) +
         hp.lambda2 / 2.0 * reg2(theta, hp.b);
}

Matrix grad_wrt_A(const CoefPair& c, const TransitionSample& sample) {
  check_shapes(c, sample);
  const Matrix x = stack_vec(sample.predictors);
  const Matrix y = stack_vec(sample.responses);
  const Matrix a = c.kron();
  return -(y - a * x) * x.transpose() / static_cast<double>(sample.size());
}

std::pair<Matrix, Matrix> grad_wrt_A1_A2(const CoefPair& c, const TransitionSample& sample,
                                         GradientRoute route) {
  check_shapes(c, sample);
  const auto p1 = c.A1.rows();
  const auto p2 = c.A2.rows();
  if (route == GradientRoute::rearrangement) {
    const Matrix pg = rearrange(grad_wrt_A(c, sample), p1, p2);
    return {mat(pg.transpose() * vec(c.A2), p1, p1), mat(pg * vec(c.A1), p2, p2)};
  }
  Matrix g1 = Matrix::Zero(p1, p1);
  Matrix g2 = Matrix::Zero(p2, p2);
  const Matrix a2t = c.A2.transpose();
  for (std::size_t t = 0; t < sample.size(); ++t) {
    const Matrix& x = sample.predictors[t];
    const Matrix e = sample.responses[t] - c.A1 * x * a2t;
    g1.noalias() += e * c.A2 * x.transpose();
    g2.noalias() += e.transpose() * c.A1 * x;
  }
  const double t = static_cast<double>(sample.size());
  return {-g1 / t, -g2 / t};
}

GradientSet chain_gradients(const MarcfParams& theta, const Matrix& grad_A1, const Matrix& grad_A2,
                            const Hyperparams& hp) {
  const CoefPair c = assemble(theta);
  const double imbalance = c.A1.squaredNorm() - c.A2.squaredNorm();
  const double b2 = hp.b * hp.b;
  GradientSet out;
  for (int m = 0; m < 2; ++m) {
    const auto& blk = theta.modes[m];
    const auto d = blk.C.cols();
    const auto k = blk.R.cols();
    const Matrix& a = m == 0 ? c.A1 : c.A2;
    // dL/dA_i plus the R1 term; the sign flips for A2.
    const Matrix g = (m == 0 ? grad_A1 : grad_A2) + (m == 0 ? 1.0 : -1.0) * hp.lambda1 * imbalance * a;
    const Matrix u = blk.response_basis();
    const Matrix v = blk.predictor_basis();
    Matrix grad_u = g * v * blk.D.transpose();
    Matrix grad_v = g.transpose() * u * blk.D;
    if (hp.lambda2 != 0.0) {
      const Matrix eye = Matrix::Identity(u.cols(), u.cols());
      grad_u.noalias() += 2.0 * hp.lambda2 * u * (u.transpose() * u - b2 * eye);
      grad_v.noalias() += 2.0 * hp.lambda2 * v * (v.transpose() * v - b2 * eye);
    }
    auto& out_blk = out.modes[m];
    out_blk.C = grad_u.leftCols(d) + grad_v.leftCols(d);
    out_blk.R = grad_u.rightCols(k);
    out_blk.P = grad_v.rightCols(k);
    out_blk.D = u.transpose() * g * v;
  }
  return out;
}

GradientSet full_gradient(const MarcfParams& theta, const TransitionSample& sample,
                          const Hyperparams& hp, GradientRoute route) {
  const auto [g1, g2] = grad_wrt_A1_A2(assemble(theta), sample, route);
  return chain_gradients(theta, g1, g2, hp);
}

GradientSet full_gradient(const MarcfParams& theta, const LaggedMoments& moments,
                          const Hyperparams& hp) {
  const auto ev = moments.evaluate(assemble(theta));
  return chain_gradients(theta, ev.grad_A1, ev.grad_A2, hp);
}

namespace {

Matrix fd_block(const std::function<double(const MarcfParams&)>& f, MarcfParams& work,
                Matrix ModeBlocks::*member, int mode, double h) {
  Matrix& target = work.modes[mode].*member;
  Matrix out(target.rows(), target.cols());
  for (Eigen::Index j = 0; j < target.cols(); ++j)
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
      const double saved = target(i, j);
      target(i, j) = saved + h;
      const double up = f(work);
      target(i, j) = saved - h;
      const double down = f(work);
      target(i, j) = saved;
      out(i, j) = (up - down) / (2.0 * h);
    }
  return out;
}

}  // namespace

GradientSet fd_gradient(const std::function<double(const MarcfParams&)>& f,
                        const MarcfParams& theta, double h) {
  if (!(h > 0.0)) throw ShapeError("fd_gradient: step must be positive");
  MarcfParams work = theta;
  GradientSet out;
  for (int m = 0; m < 2; ++m) {
    out.modes[m].C = fd_block(f, work, &ModeBlocks::C, m, h);
    out.modes[m].R = fd_block(f, work, &ModeBlocks::R, m, h);
    out.modes[m].P = fd_block(f, work, &ModeBlocks::P, m, h);
    out.modes[m].D = fd_block(f, work, &ModeBlocks::D, m, h);
  }
  return out;
}

GradientSet fd_gradient(const MarcfParams& theta, const TransitionSample& sample,
                        const Hyperparams& hp, double h) {
  return fd_gradient([&](const MarcfParams& th) { return objective(th, sample, hp); }, theta, h);
}

double max_block_relative_error(const GradientSet& g, const GradientSet& ref, double floor) {
  double worst = 0.0;
  auto compare = [&](const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ShapeError("gradient block shapes differ");
    if (a.size() == 0) return;
    worst = std::max(worst, (a - b).norm() / std::max(b.norm(), floor));
  };
  for (int m = 0; m < 2; ++m) {
    compare(g.modes[m].C, ref.modes[m].C);
    compare(g.modes[m].R, ref.modes[m].R);
    compare(g.modes[m].P, ref.modes[m].P);
    compare(g.modes[m].D, ref.modes[m].D);
  }
  return worst;
}

GradcheckResult gradient_check(std::uint64_t seed, int trials, double h) {
  if (trials < 1) throw ShapeError("gradient_check: trials must be positive");
  GradcheckResult out;
  out.trials = trials;
  for (int k = 0; k < trials; ++k) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(k));
    StructuralDims dims;
    auto pick = [&](int lo, int hi) {
      return std::min(hi, lo + static_cast<int>(rng.uniform(0.0, hi - lo + 1)));
    };
    dims.p1 = pick(3, 6);
    dims.p2 = pick(3, 6);
    dims.r1 = pick(1, 3);
    dims.r2 = pick(1, 3);
    dims.d1 = pick(0, dims.r1);
    dims.d2 = pick(0, dims.r2);
    MarcfParams theta;
    for (int m = 0; m < 2; ++m) {
      const int p = dims.p(m), r = dims.r(m), d = dims.d(m);
      theta.modes[m].C = rng.gaussian(p, d);
      theta.modes[m].R = rng.gaussian(p, r - d);
      theta.modes[m].P = rng.gaussian(p, r - d);
      theta.modes[m].D = rng.gaussian(r, r);
    }
    theta = rebalance(theta, 1.0);
    // Move off the identified manifold so R2 contributes a gradient.
    for (int m = 0; m < 2; ++m) {
      auto& blk = theta.modes[m];
      blk.C += 0.1 * rng.gaussian(blk.C.rows(), blk.C.cols());
      blk.R += 0.1 * rng.gaussian(blk.R.rows(), blk.R.cols());
      blk.P += 0.1 * rng.gaussian(blk.P.rows(), blk.P.cols());
      blk.D += 0.1 * rng.gaussian(blk.D.rows(), blk.D.cols());
    }
    const int T = 30;
    std::vector<Matrix> ys;
    for (int t = 0; t <= T; ++t) ys.push_back(rng.gaussian(dims.p1, dims.p2));
    const TransitionSample sample(MatrixSeries(std::move(ys)));
    Hyperparams hp;
    hp.lambda1 = rng.uniform(0.5, 2.0);
    hp.lambda2 = rng.uniform(0.5, 2.0);
    const GradientSet analytic = full_gradient(theta, sample, hp);
    const GradientSet numeric = fd_gradient(theta, sample, hp, h);
    const double err = max_block_relative_error(analytic, numeric);
    out.per_trial.push_back(err);
    out.max_rel_error = std::max(out.max_rel_error, err);
  }
  return out;
}

}  // namespace marcf

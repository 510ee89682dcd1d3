#include "marcf/simulate.hpp"

#include <cmath>

namespace marcf {

void DgpSpec::validate() const {
  dims.validate();
  if (T < 1) throw ShapeError("T must be at least 1");
  if (!(sin_theta_min >= 0.0 && sin_theta_min <= 1.0))
    throw ShapeError("sin_theta_min must lie in [0, 1]");
  if (max_rejects < 0) throw ShapeError("max_rejects must be nonnegative");
  if (burn_in < 0) throw ShapeError("burn_in must be nonnegative");
  if (kind == DgpKind::dynamic_mfm && (dims.d1 != dims.r1 || dims.d2 != dims.r2))
    throw ShapeError("dynamic-mfm truth requires d_i = r_i");
}

Matrix random_core(Rng& rng, int r, bool full_overlap) {
  const Matrix o1 = random_orthonormal(rng, r, r);
  const Matrix o2 = random_orthonormal(rng, r, r);
  Vector s(r);
  for (int j = 0; j < r; ++j) s(j) = full_overlap ? rng.uniform(0.8, 1.0) : rng.uniform(0.9, 1.1);
  return o1.transpose() * s.asDiagonal() * o2;
}

namespace {

ModeBlocks draw_mode(Rng& rng, int p, int r, int d) {
  ModeBlocks m;
  m.C = random_orthonormal(rng, p, d);
  const Matrix comp = complement_projector(m.C);
  m.R = thin_qr(comp * rng.gaussian(p, r - d)).q;
  m.P = thin_qr(comp * rng.gaussian(p, r - d)).q;
  m.D = random_core(rng, r, r == d);
  return m;
}

void rejection_limit(const DgpSpec& spec, int rejects) {
  if (rejects > spec.max_rejects)
    throw NumericalError("simulate: more than " + std::to_string(spec.max_rejects) +
                         " rejected draws");
}

}  // namespace

MarcfParams draw_marcf_params(const DgpSpec& spec, Rng& rng, int* rejects) {
  spec.validate();
  const auto& dims = spec.dims;
  int count = 0;
  for (;;) {
    MarcfParams theta;
    theta.b = 1.0;
    bool ok = true;
    for (int m = 0; m < 2; ++m) {
      theta.modes[m] = draw_mode(rng, dims.p(m), dims.r(m), dims.d(m));
      const auto s = sin_theta_max(theta.modes[m].R, theta.modes[m].P);
      if (s && *s < spec.sin_theta_min) ok = false;
    }
    if (ok && spectral_radius_product(assemble(theta)) < 1.0) {
      if (rejects) *rejects = count;
      return theta;
    }
    rejection_limit(spec, ++count);
  }
}

MatrixSeries burn_in_recursion(const Matrix& A1, const Matrix& A2, int T, int burn, Rng& rng,
                               double noise_sd) {
  if (A1.rows() != A1.cols() || A2.rows() != A2.cols())
    throw ShapeError("burn_in_recursion: coefficients must be square");
  if (T < 0 || burn < 0) throw ShapeError("burn_in_recursion: negative length");
  const auto p1 = A1.rows();
  const auto p2 = A2.rows();
  const Matrix a2t = A2.transpose();
  Matrix y = Matrix::Zero(p1, p2);
  auto advance = [&] {
    Matrix e = rng.gaussian(p1, p2);
    y = A1 * y * a2t + noise_sd * e;
  };
  for (int s = 0; s < burn; ++s) advance();
  std::vector<Matrix> out;
  out.reserve(T + 1);
  out.push_back(y);
  for (int t = 0; t < T; ++t) {
    advance();
    out.push_back(y);
  }
  return MatrixSeries(std::move(out));
}

MarcfTruth gen_marcf_truth(const DgpSpec& spec, Rng& rng) {
  if (spec.kind != DgpKind::marcf) throw ShapeError("gen_marcf_truth: generator kind is not marcf");
  MarcfTruth out;
  out.theta = draw_marcf_params(spec, rng, &out.rejects);
  const CoefPair c = assemble(out.theta);
  out.series = burn_in_recursion(c.A1, c.A2, spec.T, spec.burn_in, rng);
  return out;
}

MarcfParams DmfmTruth::as_params() const {
  MarcfParams theta;
  theta.b = 1.0;
  const Matrix* l[2] = {&L1, &L2};
  const Matrix* bm[2] = {&B1, &B2};
  for (int m = 0; m < 2; ++m) {
    theta.modes[m].C = *l[m];
    theta.modes[m].R = Matrix(l[m]->rows(), 0);
    theta.modes[m].P = Matrix(l[m]->rows(), 0);
    theta.modes[m].D = *bm[m];
  }
  return theta;
}

DmfmTruth gen_dmfm_truth(const DgpSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.kind != DgpKind::dynamic_mfm)
    throw ShapeError("gen_dmfm_truth: generator kind is not dynamic-mfm");
  const auto& dims = spec.dims;
  DmfmTruth out;
  out.L1 = random_orthonormal(rng, dims.p1, dims.r1);
  out.L2 = random_orthonormal(rng, dims.p2, dims.r2);
  for (;;) {
    out.B1 = random_core(rng, dims.r1, true);
    out.B2 = random_core(rng, dims.r2, true);
    if (spectral_radius(out.B1) * spectral_radius(out.B2) < 1.0) break;
    rejection_limit(spec, ++out.rejects);
  }
  const Matrix b2t = out.B2.transpose();
  const Matrix proj1 = out.L1 * out.L1.transpose();
  const Matrix proj2 = out.L2 * out.L2.transpose();
  Matrix f = Matrix::Zero(dims.r1, dims.r2);
  for (int s = 0; s < spec.burn_in; ++s) f = out.B1 * f * b2t + rng.gaussian(dims.r1, dims.r2);
  std::vector<Matrix> ys;
  ys.reserve(spec.T + 1);
  for (int t = 0; t <= spec.T; ++t) {
    if (t > 0) f = out.B1 * f * b2t + rng.gaussian(dims.r1, dims.r2);
    const Matrix e = rng.gaussian(dims.p1, dims.p2);
    const Matrix w = e - proj1 * e * proj2;
    out.factors.push_back(f);
    ys.push_back(out.L1 * f * out.L2.transpose() + w);
  }
  out.series = MatrixSeries(std::move(ys));
  return out;
}

TransitionSample exact_transitions(const CoefPair& c, int T, Rng& rng) {
  if (T < 1) throw ShapeError("exact_transitions: T must be positive");
  std::vector<Matrix> xs, ys;
  const Matrix a2t = c.A2.transpose();
  for (int t = 0; t < T; ++t) {
    xs.push_back(rng.gaussian(c.A1.rows(), c.A2.rows()));
    ys.push_back(c.A1 * xs.back() * a2t);
  }
  return TransitionSample(std::move(xs), std::move(ys));
}

}  // namespace marcf

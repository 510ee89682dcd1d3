#include "marcf/optimizer.hpp"

#include "marcf/init.hpp"

#include <algorithm>
#include <cmath>

namespace marcf {

void FitConfig::validate() const {
  if (!(eta > 0.0)) throw ShapeError("eta must be positive");
  if (max_iter < 1) throw ShapeError("max_iter must be positive");
  if (!(rel_tol >= 0.0)) throw ShapeError("rel_tol must be nonnegative");
  if (!(backoff_factor > 0.0 && backoff_factor < 1.0))
    throw ShapeError("backoff_factor must lie in (0, 1)");
  if (max_backoffs < 0) throw ShapeError("max_backoffs must be nonnegative");
  if (hp.lambda1 < 0.0 || hp.lambda2 < 0.0) throw ShapeError("lambdas must be nonnegative");
  if (!(hp.b > 0.0)) throw ShapeError("b must be positive");
  if (!(init_ridge >= 0.0)) throw ShapeError("init_ridge must be nonnegative");
}

namespace {

struct Point {
  double value;
  GradientSet grad;
};

Point evaluate(const MarcfParams& theta, const LaggedMoments& moments, const Hyperparams& hp) {
  const CoefPair c = assemble(theta);
  const auto ev = moments.evaluate(c);
  const double imbalance = c.A1.squaredNorm() - c.A2.squaredNorm();
  const double value = ev.loss + hp.lambda1 / 4.0 * imbalance * imbalance +
                       hp.lambda2 / 2.0 * reg2(theta, hp.b);
  return Point{value, chain_gradients(theta, ev.grad_A1, ev.grad_A2, hp)};
}

void step(MarcfParams& theta, const GradientSet& g, double eta) {
  for (int m = 0; m < 2; ++m) {
    auto& blk = theta.modes[m];
    const auto& gb = g.modes[m];
    blk.C -= eta * gb.C;
    blk.R -= eta * gb.R;
    blk.P -= eta * gb.P;
    blk.D -= eta * gb.D;
  }
}

}  // namespace

FitReport fit(const MarcfParams& theta0, const LaggedMoments& moments, const FitConfig& cfg) {
  cfg.validate();
  theta0.validate();
  if (theta0.modes[0].C.rows() != moments.p1() || theta0.modes[1].C.rows() != moments.p2())
    throw ShapeError("fit: parameter shapes do not match the series");

  double eta = cfg.eta;
  for (int attempt = 0; attempt <= cfg.max_backoffs; ++attempt, eta *= cfg.backoff_factor) {
    FitReport rep;
    rep.backoffs_used = attempt;
    rep.eta_used = eta;
    rep.theta_hat = theta0;
    rep.theta_hat.b = cfg.hp.b;

    Point pt = evaluate(rep.theta_hat, moments, cfg.hp);
    if (!std::isfinite(pt.value)) throw NumericalError("fit: objective is not finite at theta0");
    const double f0 = pt.value;
    const double ceiling = cfg.divergence_ratio * std::max(f0, 1e-8);
    rep.objective_trace.push_back(f0);

    bool diverged = false;
    for (int j = 0; j < cfg.max_iter; ++j) {
      if (pt.grad.norm() <= cfg.grad_tol) {
        rep.converged = true;
        break;
      }
      step(rep.theta_hat, pt.grad, eta);
      const double previous = pt.value;
      pt = evaluate(rep.theta_hat, moments, cfg.hp);
      if (!std::isfinite(pt.value) || pt.value > ceiling) {
        diverged = true;
        break;
      }
      rep.objective_trace.push_back(pt.value);
      rep.iterations_run = j + 1;
      if (std::abs(pt.value - previous) <= cfg.rel_tol * std::max(1.0, std::abs(previous))) {
        rep.converged = true;
        break;
      }
    }
    if (diverged) continue;
    rep.final_gradient_norm = pt.grad.norm();
    return rep;
  }
  throw NumericalError("fit: gradient descent diverged after " +
                       std::to_string(cfg.max_backoffs) + " step-size reductions");
}

FitReport fit(const MarcfParams& theta0, const TransitionSample& sample, const FitConfig& cfg) {
  return fit(theta0, LaggedMoments(sample), cfg);
}

CoefPair fit_rrmar(const LaggedMoments& moments, int r1, int r2, const FitConfig& cfg,
                   FitReport* report) {
  const StructuralDims dims{static_cast<int>(moments.p1()), static_cast<int>(moments.p2()), r1, r2, 0, 0};
  dims.validate();
  const CoefPair seed = nkp_seed(moments, r1, r2, cfg.init_ridge);
  const MarcfParams theta0 = spectral_split(seed, dims, cfg.hp.b);
  FitReport rep = fit(theta0, moments, cfg);
  CoefPair out = equalize_norms(assemble(rep.theta_hat));
  if (report) *report = std::move(rep);
  return out;
}

CoefPair fit_rrmar(const TransitionSample& sample, int r1, int r2, const FitConfig& cfg) {
  return fit_rrmar(LaggedMoments(sample), r1, r2, cfg);
}

}  // namespace marcf

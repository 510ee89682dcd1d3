#ifndef MARCF_OPTIMIZER_HPP
#define MARCF_OPTIMIZER_HPP

#include "marcf/model.hpp"
#include "marcf/objective.hpp"

#include <vector>

namespace marcf {

struct FitConfig {
  Hyperparams hp;
  double eta = 1e-3;
  int max_iter = 1000;
  /// Stop once |f_j - f_{j-1}| <= rel_tol * max(1, |f_{j-1}|).
  double rel_tol = 1e-8;
  /// Stop once the full gradient norm is at or below this value.
  double grad_tol = 1e-10;
  /// On divergence restart from theta0 with eta *= backoff_factor.
  double backoff_factor = 0.1;
  int max_backoffs = 2;
  /// A run diverges when the objective is non-finite or exceeds this
  /// multiple of its starting value.
  double divergence_ratio = 10.0;
  /// Relative ridge of the least-squares seed used to start RRMAR fits.
  double init_ridge = 1e-4;

  void validate() const;
};

struct FitReport {
  MarcfParams theta_hat;
  std::vector<double> objective_trace;  // size iterations_run + 1
  int iterations_run = 0;
  bool converged = false;
  int backoffs_used = 0;
  double eta_used = 0.0;
  double final_gradient_norm = 0.0;
};

/**
 * Fixed-step gradient descent on the regularized objective.  Every block
 * gradient is evaluated at the current iterate before any block moves.
 * Throws NumericalError when the run still diverges after max_backoffs
 * restarts.
 */
FitReport fit(const MarcfParams& theta0, const LaggedMoments& moments, const FitConfig& cfg);
FitReport fit(const MarcfParams& theta0, const TransitionSample& sample, const FitConfig& cfg);

/// Reduced-rank fit (d1 = d2 = 0) started from the least-squares Kronecker
/// seed.  The returned pair has equal Frobenius norms.
CoefPair fit_rrmar(const TransitionSample& sample, int r1, int r2, const FitConfig& cfg);
CoefPair fit_rrmar(const LaggedMoments& moments, int r1, int r2, const FitConfig& cfg,
                   FitReport* report = nullptr);

}  // namespace marcf

#endif  // MARCF_OPTIMIZER_HPP

#ifndef MARCF_OBJECTIVE_HPP
#define MARCF_OBJECTIVE_HPP

#include "marcf/core.hpp"
#include "marcf/model.hpp"

#include <array>
#include <functional>
#include <utility>
#include <vector>

namespace marcf {

/// Weights of the regularized objective L + (lambda1/4) R1 + (lambda2/2) R2.
struct Hyperparams {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double b = 1.0;
};

/// Block gradients, shaped like the MarcfParams they were computed from.
struct GradientSet {
  std::array<ModeBlocks, 2> modes;

  double norm() const;
};

/// How dL/dA1 and dL/dA2 are obtained.
enum class GradientRoute {
  /// Form dL/dA = -(Y - A X) X^T / T once, then contract through the
  /// Kronecker rearrangement.
  rearrangement,
  /// Accumulate -sum_t E_t A2 X_t^T / T and -sum_t E_t^T A1 X_t / T from
  /// per-transition residuals E_t.
  residual,
};

/**
 * Second moments of the transition sample,
 *   Sxx = sum_t x_t x_t^T,  Syx = sum_t y_t x_t^T,  syy = sum_t |y_t|^2
 * with x_t = vec(X_t), y_t = vec(Y_t).  Once built, the loss and the
 * (A1, A2) gradients cost O((p1 p2)^2) per evaluation, independent of T.
 */
class LaggedMoments {
 public:
  explicit LaggedMoments(const TransitionSample& sample);

  Eigen::Index p1() const { return p1_; }
  Eigen::Index p2() const { return p2_; }
  std::size_t count() const { return count_; }
  const Matrix& sxx() const { return sxx_; }
  const Matrix& syx() const { return syx_; }
  double syy() const { return syy_; }

  struct Evaluation {
    double loss;
    Matrix grad_A1;
    Matrix grad_A2;
  };
  /// Least-squares loss (1/2T) sum |Y_t - A1 X_t A2^T|^2 and its (A1, A2) gradients.
  Evaluation evaluate(const CoefPair& c) const;
  double loss(const CoefPair& c) const;

 private:
  // out(i, k) = sum_{j,l} S[(i,j),(k,l)] M(j,l), a p1 x p1 result.
  Matrix contract_columns(const Matrix& s, const Matrix& m) const;
  // out(j, l) = sum_{i,k} S[(i,j),(k,l)] N(i,k), a p2 x p2 result.
  Matrix contract_rows(const Matrix& s, const Matrix& n) const;

  Eigen::Index p1_, p2_;
  std::size_t count_;
  Matrix sxx_, syx_;
  double syy_;
};

/// (1/2T) sum_t |Y_t - A1 X_t A2^T|_F^2, evaluated from residuals.
double ls_loss(const MarcfParams& theta, const TransitionSample& sample);
double ls_loss(const CoefPair& c, const TransitionSample& sample);

/// (|A1|_F^2 - |A2|_F^2)^2.
double reg1(const MarcfParams& theta);

/// sum_i |[C R]^T[C R] - b^2 I|^2 + |[C P]^T[C P] - b^2 I|^2.
double reg2(const MarcfParams& theta, double b);

double objective(const MarcfParams& theta, const TransitionSample& sample, const Hyperparams& hp);
double objective(const MarcfParams& theta, const LaggedMoments& moments, const Hyperparams& hp);

/// -(Y - A X) X^T / T with A = A2 (x) A1; a (p1 p2) x (p1 p2) matrix.
Matrix grad_wrt_A(const CoefPair& c, const TransitionSample& sample);

/// (dL/dA1, dL/dA2).
std::pair<Matrix, Matrix> grad_wrt_A1_A2(const CoefPair& c, const TransitionSample& sample,
                                         GradientRoute route = GradientRoute::rearrangement);

/**
 * Chain rule from (dL/dA1, dL/dA2) to all eight blocks, adding the exact
 * derivatives of (lambda1/4) R1 and (lambda2/2) R2.
 */
GradientSet chain_gradients(const MarcfParams& theta, const Matrix& grad_A1,
                            const Matrix& grad_A2, const Hyperparams& hp);

GradientSet full_gradient(const MarcfParams& theta, const TransitionSample& sample,
                          const Hyperparams& hp,
                          GradientRoute route = GradientRoute::rearrangement);
GradientSet full_gradient(const MarcfParams& theta, const LaggedMoments& moments,
                          const Hyperparams& hp);

/// Central differences (f(x+h) - f(x-h)) / 2h over every scalar parameter.
GradientSet fd_gradient(const std::function<double(const MarcfParams&)>& f,
                        const MarcfParams& theta, double h);
GradientSet fd_gradient(const MarcfParams& theta, const TransitionSample& sample,
                        const Hyperparams& hp, double h);

/// Largest per-block relative error |g - g_ref|_F / |g_ref|_F (blocks with
/// |g_ref|_F below `floor` are compared with denominator `floor`).
double max_block_relative_error(const GradientSet& g, const GradientSet& ref,
                                double floor = 1e-8);

struct GradcheckResult {
  int trials = 0;
  double max_rel_error = 0.0;
  std::vector<double> per_trial;
};

/**
 * Analytic versus central-difference gradients on `trials` random
 * instances: p_i in 3..6, r_i in 1..3, d_i in 0..r_i, rebalanced parameters
 * with unit-order entries and a short random series.
 */
GradcheckResult gradient_check(std::uint64_t seed, int trials, double h = 1e-5);

}  // namespace marcf

#endif  // MARCF_OBJECTIVE_HPP

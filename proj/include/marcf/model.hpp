#ifndef MARCF_MODEL_HPP
#define MARCF_MODEL_HPP

#include "marcf/core.hpp"

#include <array>

namespace marcf {

/// (p1, p2, r1, r2, d1, d2) with 0 <= d_i <= r_i <= p_i.
struct StructuralDims {
  int p1 = 0, p2 = 0;
  int r1 = 0, r2 = 0;
  int d1 = 0, d2 = 0;

  /// Mode accessors, mode in {0, 1} (row mode, column mode).
  int p(int mode) const { return mode == 0 ? p1 : p2; }
  int r(int mode) const { return mode == 0 ? r1 : r2; }
  int d(int mode) const { return mode == 0 ? d1 : d2; }

  /// Throws ShapeError naming the first violated inequality.
  void validate() const;

  bool operator==(const StructuralDims&) const = default;
};

/**
 * Components of one mode: A = [C R] D [C P]^T with C p x d (common),
 * R p x (r-d) (response-specific), P p x (r-d) (predictor-specific) and
 * D r x r.  Zero-column C, R, P are legal.  The same container carries
 * gradients block by block.
 */
struct ModeBlocks {
  Matrix C, R, P, D;

  Matrix response_basis() const { return hcat(C, R); }
  Matrix predictor_basis() const { return hcat(C, P); }
  Matrix assemble() const;

  ModeBlocks& operator+=(const ModeBlocks& o);
  ModeBlocks& operator*=(double s);
  double squared_norm() const;
};

/// Parameter set {C_i, R_i, P_i, D_i}_{i=1,2} and the balance scalar b.
/// modes[0] builds A1 (rows), modes[1] builds A2 (columns).
struct MarcfParams {
  std::array<ModeBlocks, 2> modes;
  double b = 1.0;

  StructuralDims dims() const;
  /// Throws ShapeError if the blocks are not mutually consistent.
  void validate() const;
};

/// Coefficient pair (A1, A2) of Y_t = A1 Y_{t-1} A2^T + E_t.
struct CoefPair {
  Matrix A1, A2;

  /// A2 (x) A1, the transition matrix of vec(Y_t).
  Matrix kron() const { return marcf::kron(A2, A1); }
};

CoefPair assemble(const MarcfParams& theta);

/// Free parameter count p1(2r1 - d1) + p2(2r2 - d2) + r1^2 + r2^2.
long df_count(const StructuralDims& dims);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& a);

/// rho(A1) * rho(A2); the bilinear recursion is stationary when < 1.
double spectral_radius_product(const CoefPair& c);

/// (c A1, A2 / c) with c chosen so both Frobenius norms equal sqrt(|A1| |A2|).
CoefPair equalize_norms(const CoefPair& c);

/**
 * Equivalent parameters satisfying the identification constraints
 *   C^T C = b^2 I, R^T R = P^T P = b^2 I, C^T R = C^T P = 0
 * with b = b_target.  Per mode, C is orthonormalized, R and P are projected
 * off span(C) and orthonormalized, and the change-of-basis factors are
 * absorbed into D, so each assembled A_i is unchanged.  When `equalize` is
 * set, D1 and D2 are then rescaled by (c, 1/c) so |A1|_F = |A2|_F; the
 * Kronecker product A2 (x) A1 is unchanged either way.
 *
 * Throws NumericalError when [C R] or [C P] is rank deficient.
 */
MarcfParams rebalance(const MarcfParams& theta, double b_target, bool equalize = true);

/// sqrt(|A1|_F |A2|_F) = |A2 (x) A1|_F^{1/2}.
double signal_strength(const MarcfParams& theta);

/// Largest deviation of [C R]^T[C R] and [C P]^T[C P] from b^2 I (Frobenius).
double identification_defect(const MarcfParams& theta);

/**
 * Rotation-invariant distance between two identified parameter sets: the
 * square root of the sum over modes of
 *   min_{Q1, Q2, Q3 orthogonal} |C - C'Q1|^2 + |R - R'Q2|^2 + |P - P'Q3|^2
 *       + |D - diag(Q1,Q2)^T D' diag(Q1,Q3)|^2.
 */
double theta_distance(const MarcfParams& a, const MarcfParams& b);

/// Rotations attaining the per-mode minimum in theta_distance.
struct ModeAlignment {
  Matrix Q1, Q2, Q3;
  double squared_distance = 0.0;
};
ModeAlignment align_mode(const ModeBlocks& a, const ModeBlocks& b);

/// Squared four-block objective of theta_distance at fixed rotations.
double aligned_squared_distance(const ModeBlocks& a, const ModeBlocks& b,
                                const Matrix& Q1, const Matrix& Q2, const Matrix& Q3);

/// (C Q1, R Q2, P Q3, diag(Q1,Q2)^T D diag(Q1,Q3)); leaves A unchanged.
ModeBlocks rotate_mode(const ModeBlocks& m, const Matrix& Q1, const Matrix& Q2,
                       const Matrix& Q3);

/// Zero parameters of the given shape.
MarcfParams zero_params(const StructuralDims& dims, double b = 1.0);

}  // namespace marcf

#endif  // MARCF_MODEL_HPP

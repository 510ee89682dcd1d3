#ifndef MARCF_INIT_HPP
#define MARCF_INIT_HPP

#include "marcf/model.hpp"
#include "marcf/objective.hpp"
#include "marcf/optimizer.hpp"

namespace marcf {

/**
 * Nearest-Kronecker seed for reduced-rank fits.
 *
 * Solves the ridge-regularized least squares A = Syx (Sxx + lambda I)^{-1}
 * on the vectorized data with lambda = ridge * trace(Sxx) / (p1 p2), takes
 * the leading singular pair of rearrange(A), truncates each factor to rank
 * r_i and equalizes the factor norms.  With ridge = 0 a singular Sxx raises
 * NumericalError.
 */
CoefPair nkp_seed(const LaggedMoments& moments, int r1, int r2, double ridge);
CoefPair nkp_seed(const TransitionSample& sample, int r1, int r2, double ridge);

/**
 * Split the row/column spaces of a reduced-rank pair into common, response-
 * specific and predictor-specific bases.  With U, V the leading r singular
 * vectors of A_i:
 *   R = top (r-d) left singular vectors of P_U (I - P_V),
 *   P = top (r-d) left singular vectors of P_V (I - P_U),
 *   C = top d eigenvectors of N (P_U + P_V) N^T, N = (I - P_R)(I - P_P),
 * after which R and P are re-orthonormalized against C and
 * D = [C R]^T A [C P].  The result is scaled to balance b (bases times b,
 * D divided by b^2), so it satisfies the identification constraints.
 * NumericalError when d_i > 0 and A_i has numerical rank below r_i.
 */
MarcfParams spectral_split(const CoefPair& c, const StructuralDims& dims, double b);

/// Reduced-rank fit followed by spectral_split.
MarcfParams initialize(const TransitionSample& sample, const StructuralDims& dims,
                       const FitConfig& cfg);
MarcfParams initialize(const LaggedMoments& moments, const StructuralDims& dims,
                       const FitConfig& cfg);

}  // namespace marcf

#endif  // MARCF_INIT_HPP

#ifndef MARCF_SIMULATE_HPP
#define MARCF_SIMULATE_HPP

#include "marcf/model.hpp"

#include <cstdint>
#include <vector>

namespace marcf {

enum class DgpKind { marcf, dynamic_mfm };
enum class NoiseKind { gaussian_identity };

struct DgpSpec {
  StructuralDims dims;
  int T = 500;
  NoiseKind noise = NoiseKind::gaussian_identity;
  /// Draws with sin_theta_max(R_i, P_i) below this are rejected (both modes).
  double sin_theta_min = 0.8;
  int max_rejects = 1000;
  std::uint64_t seed = 0;
  DgpKind kind = DgpKind::marcf;
  int burn_in = 200;

  void validate() const;
};

struct MarcfTruth {
  MarcfParams theta;
  MatrixSeries series;
  int rejects = 0;
};

struct DmfmTruth {
  Matrix L1, L2;  // orthonormal loadings, p_i x r_i
  Matrix B1, B2;  // factor dynamics, r_i x r_i
  std::vector<Matrix> factors;  // F_0..F_T
  MatrixSeries series;
  int rejects = 0;

  /// The implied MARCF parameters: C_i = L_i, D_i = B_i, no specific parts.
  MarcfParams as_params() const;
};

/**
 * r x r core O1^T S O2 with Haar-random orthogonal O1, O2 and diagonal S,
 * entries of S from U(0.8, 1) if `full_overlap` and U(0.9, 1.1) otherwise.
 */
Matrix random_core(Rng& rng, int r, bool full_overlap);

/// Identified MARCF parameters with b = 1 passing the sin-theta and
/// stationarity rejection tests; `rejects` receives the number of discarded draws.
MarcfParams draw_marcf_params(const DgpSpec& spec, Rng& rng, int* rejects = nullptr);

MarcfTruth gen_marcf_truth(const DgpSpec& spec, Rng& rng);
DmfmTruth gen_dmfm_truth(const DgpSpec& spec, Rng& rng);

/// Y_0 .. Y_T of Y_t = A1 Y_{t-1} A2^T + E_t, started at zero and run for
/// `burn` discarded steps first.  With burn = 0 the first matrix is zero.
MatrixSeries burn_in_recursion(const Matrix& A1, const Matrix& A2, int T, int burn, Rng& rng,
                               double noise_sd = 1.0);

/// T independent pairs (X_t, A1 X_t A2^T) with standard normal X_t.
TransitionSample exact_transitions(const CoefPair& c, int T, Rng& rng);

}  // namespace marcf

#endif  // MARCF_SIMULATE_HPP

#ifndef MARCF_SELECTION_HPP
#define MARCF_SELECTION_HPP

#include "marcf/model.hpp"
#include "marcf/objective.hpp"
#include "marcf/optimizer.hpp"

#include <array>
#include <limits>
#include <vector>

namespace marcf {

/// sqrt((p1 + p2) log(T) / (20 T)).
double penalty_s(int p1, int p2, long T);

/// Ratio rule on one descending spectrum: ratios[j] = (s_{j+1} + s) / (s_j + s)
/// for j = 1..rbar-1 and the (1-based) argmin, ties to the smallest j.
struct RatioRule {
  std::vector<double> ratios;
  int r_hat = 1;
};
RatioRule ratio_rank(const std::vector<double>& singular_values, double s);

struct RankSelection {
  int rbar1 = 0, rbar2 = 0;
  double s = 0.0;
  std::array<std::vector<double>, 2> singular_values;
  std::array<std::vector<double>, 2> ratios;
  int r1 = 1, r2 = 1;
};

/// Fits RRMAR(rbar1, rbar2) and applies the ratio rule to each factor.
RankSelection select_ranks(const LaggedMoments& moments, int rbar1, int rbar2,
                           const FitConfig& cfg);
RankSelection select_ranks(const TransitionSample& sample, int rbar1, int rbar2,
                           const FitConfig& cfg);

/// T p1 p2 log(RSS) + df log T; -infinity when RSS is exactly zero.
double bic(const TransitionSample& sample, const MarcfParams& theta_hat, const StructuralDims& dims);
double bic(const LaggedMoments& moments, const MarcfParams& theta_hat, const StructuralDims& dims);

struct CommonDimSelection {
  int d1 = 0, d2 = 0;
  /// (r1 + 1) x (r2 + 1); entry (d1, d2). Failed cells hold +infinity.
  Matrix bic_surface;
  /// Cell fits in row-major (d1, d2) order; empty theta for failed cells.
  std::vector<FitReport> cells;
  std::vector<bool> cell_ok;

  const FitReport& cell(int d1, int d2) const { return cells[d1 * (bic_surface.cols()) + d2]; }
};

/// Grid search over d1 in 0..r1, d2 in 0..r2; ties go to larger d1 + d2,
/// then to smaller (d1, d2).  `jobs` > 1 evaluates cells concurrently.
CommonDimSelection select_common_dims(const LaggedMoments& moments, int r1, int r2,
                                      const FitConfig& cfg, int jobs = 1);
CommonDimSelection select_common_dims(const TransitionSample& sample, int r1, int r2,
                                      const FitConfig& cfg, int jobs = 1);

/// Argmin of a BIC surface under the tie rule above.
std::pair<int, int> bic_argmin(const Matrix& surface);

struct SelectionReport {
  int rbar1 = 0, rbar2 = 0;
  double s = 0.0;
  std::array<std::vector<double>, 2> singular_values;
  std::array<std::vector<double>, 2> ratios;
  int r1 = 0, r2 = 0;
  Matrix bic_surface;
  int d1 = 0, d2 = 0;

  StructuralDims dims(int p1, int p2) const { return {p1, p2, r1, r2, d1, d2}; }
};

struct PipelineResult {
  SelectionReport selection;
  FitReport fit;
};

/// Rank selection, then common-dimension selection, then the fit at the
/// selected dimensions (which is the winning grid cell's fit).
PipelineResult run_pipeline(const TransitionSample& sample, int rbar1, int rbar2,
                            const FitConfig& cfg, int jobs = 1);

/// min(p, 8).
inline int default_rbar(int p) { return p < 8 ? p : 8; }

}  // namespace marcf

#endif  // MARCF_SELECTION_HPP

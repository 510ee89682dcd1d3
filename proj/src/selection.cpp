#include "marcf/selection.hpp"

#include "marcf/init.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace marcf {

double penalty_s(int p1, int p2, long T) {
  if (T < 2) throw ShapeError("penalty_s: T must be at least 2");
  if (p1 < 1 || p2 < 1) throw ShapeError("penalty_s: dimensions must be positive");
  const double t = static_cast<double>(T);
  return std::sqrt((p1 + p2) * std::log(t) / (20.0 * t));
}

RatioRule ratio_rank(const std::vector<double>& sv, double s) {
  if (sv.size() < 2) throw ShapeError("ratio_rank: need at least two singular values");
  RatioRule out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < sv.size(); ++j) {
    const double ratio = (sv[j + 1] + s) / (sv[j] + s);
    out.ratios.push_back(ratio);
    if (ratio < best) {
      best = ratio;
      out.r_hat = static_cast<int>(j) + 1;
    }
  }
  return out;
}

RankSelection select_ranks(const LaggedMoments& moments, int rbar1, int rbar2,
                           const FitConfig& cfg) {
  if (rbar1 < 2 || rbar2 < 2) throw ShapeError("select_ranks: rbar must be at least 2");
  if (rbar1 > moments.p1() || rbar2 > moments.p2())
    throw ShapeError("select_ranks: rbar exceeds the matrix dimension");
  RankSelection out;
  out.rbar1 = rbar1;
  out.rbar2 = rbar2;
  out.s = penalty_s(static_cast<int>(moments.p1()), static_cast<int>(moments.p2()),
                    static_cast<long>(moments.count()));
  const CoefPair rr = fit_rrmar(moments, rbar1, rbar2, cfg);
  const int rbar[2] = {rbar1, rbar2};
  for (int m = 0; m < 2; ++m) {
    const Matrix& a = m == 0 ? rr.A1 : rr.A2;
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& sv = svd.singularValues();
    out.singular_values[m].assign(sv.data(), sv.data() + rbar[m]);
    const RatioRule rule = ratio_rank(out.singular_values[m], out.s);
    out.ratios[m] = rule.ratios;
    (m == 0 ? out.r1 : out.r2) = rule.r_hat;
  }
  return out;
}

RankSelection select_ranks(const TransitionSample& sample, int rbar1, int rbar2,
                           const FitConfig& cfg) {
  return select_ranks(LaggedMoments(sample), rbar1, rbar2, cfg);
}

namespace {

double bic_from_rss(double rss, std::size_t count, const StructuralDims& dims) {
  const double t = static_cast<double>(count);
  const double penalty = static_cast<double>(df_count(dims)) * std::log(t);
  if (rss <= 0.0) return -std::numeric_limits<double>::infinity();
  return t * dims.p1 * dims.p2 * std::log(rss) + penalty;
}

void check_theta(const MarcfParams& theta, const StructuralDims& dims) {
  theta.validate();
  if (!(theta.dims() == dims)) throw ShapeError("bic: parameters do not match dims");
}

CommonDimSelection grid_search(const LaggedMoments& moments, const TransitionSample* sample,
                               int r1, int r2, const FitConfig& cfg, int jobs) {
  const int p1 = static_cast<int>(moments.p1());
  const int p2 = static_cast<int>(moments.p2());
  StructuralDims{p1, p2, r1, r2, 0, 0}.validate();
  cfg.validate();

  // The RRMAR pre-fit does not depend on (d1, d2); run it once.
  const CoefPair rr = fit_rrmar(moments, r1, r2, cfg);

  CommonDimSelection out;
  out.bic_surface = Matrix::Constant(r1 + 1, r2 + 1, std::numeric_limits<double>::infinity());
  const int n_cells = (r1 + 1) * (r2 + 1);
  out.cells.assign(n_cells, FitReport{});
  out.cell_ok.assign(n_cells, false);
  std::vector<double> values(n_cells, std::numeric_limits<double>::infinity());
  std::vector<char> ok(n_cells, 0);

  auto run_cell = [&](int idx) {
    const StructuralDims dims{p1, p2, r1, r2, idx / (r2 + 1), idx % (r2 + 1)};
    try {
      const MarcfParams theta0 = spectral_split(rr, dims, cfg.hp.b);
      FitReport rep = fit(theta0, moments, cfg);
      values[idx] = sample ? bic(*sample, rep.theta_hat, dims) : bic(moments, rep.theta_hat, dims);
      out.cells[idx] = std::move(rep);
      ok[idx] = 1;
    } catch (const Error& e) {
      warn("common-dimension cell (" + std::to_string(dims.d1) + ", " + std::to_string(dims.d2) +
           ") failed: " + e.what());
    }
  };

  const int workers = std::max(1, std::min(jobs, n_cells));
  if (workers == 1) {
    for (int idx = 0; idx < n_cells; ++idx) run_cell(idx);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int idx = next++; idx < n_cells; idx = next++) run_cell(idx);
      });
    for (auto& th : pool) th.join();
  }
  for (int idx = 0; idx < n_cells; ++idx) {
    out.bic_surface(idx / (r2 + 1), idx % (r2 + 1)) = values[idx];
    out.cell_ok[idx] = ok[idx] != 0;
  }
  const auto [d1, d2] = bic_argmin(out.bic_surface);
  out.d1 = d1;
  out.d2 = d2;
  return out;
}

}  // namespace

double bic(const TransitionSample& sample, const MarcfParams& theta_hat, const StructuralDims& dims) {
  check_theta(theta_hat, dims);
  const CoefPair c = assemble(theta_hat);
  const double rss = 2.0 * static_cast<double>(sample.size()) * ls_loss(c, sample);
  return bic_from_rss(rss, sample.size(), dims);
}

double bic(const LaggedMoments& moments, const MarcfParams& theta_hat, const StructuralDims& dims) {
  check_theta(theta_hat, dims);
  const double rss = 2.0 * static_cast<double>(moments.count()) * moments.loss(assemble(theta_hat));
  return bic_from_rss(rss, moments.count(), dims);
}

std::pair<int, int> bic_argmin(const Matrix& surface) {
  int best1 = -1, best2 = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int d1 = 0; d1 < surface.rows(); ++d1)
    for (int d2 = 0; d2 < surface.cols(); ++d2) {
      const double v = surface(d1, d2);
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) continue;
      const bool better = best1 < 0 || v < best || (v == best && d1 + d2 > best1 + best2);
      if (better) {
        best = v;
        best1 = d1;
        best2 = d2;
      }
    }
  if (best1 < 0) throw NumericalError("every common-dimension cell failed");
  return {best1, best2};
}

CommonDimSelection select_common_dims(const LaggedMoments& moments, int r1, int r2,
                                      const FitConfig& cfg, int jobs) {
  return grid_search(moments, nullptr, r1, r2, cfg, jobs);
}

CommonDimSelection select_common_dims(const TransitionSample& sample, int r1, int r2,
                                      const FitConfig& cfg, int jobs) {
  return grid_search(LaggedMoments(sample), &sample, r1, r2, cfg, jobs);
}

PipelineResult run_pipeline(const TransitionSample& sample, int rbar1, int rbar2,
                            const FitConfig& cfg, int jobs) {
  const LaggedMoments moments(sample);
  const RankSelection ranks = select_ranks(moments, rbar1, rbar2, cfg);
  CommonDimSelection dims = grid_search(moments, &sample, ranks.r1, ranks.r2, cfg, jobs);

  PipelineResult out;
  auto& rep = out.selection;
  rep.rbar1 = ranks.rbar1;
  rep.rbar2 = ranks.rbar2;
  rep.s = ranks.s;
  rep.singular_values = ranks.singular_values;
  rep.ratios = ranks.ratios;
  rep.r1 = ranks.r1;
  rep.r2 = ranks.r2;
  rep.bic_surface = dims.bic_surface;
  rep.d1 = dims.d1;
  rep.d2 = dims.d2;
  out.fit = std::move(dims.cells[dims.d1 * (ranks.r2 + 1) + dims.d2]);
  return out;
}

}  // namespace marcf

#include "marcf/forecast.hpp"

#include "marcf/init.hpp"
#include "marcf/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace marcf {

Matrix forecast_one(const CoefPair& c, const Matrix& y) {
  if (c.A1.rows() != c.A1.cols() || c.A2.rows() != c.A2.cols() || c.A1.cols() != y.rows() ||
      c.A2.cols() != y.cols())
    throw ShapeError("forecast_one: shape mismatch");
  return c.A1 * y * c.A2.transpose();
}

Matrix forecast_one(const MarcfParams& theta, const Matrix& y) {
  return forecast_one(assemble(theta), y);
}

WindowForecast MarcfForecaster::predict(const MatrixSeries& window) const {
  StructuralDims dims = dims_;
  dims.p1 = static_cast<int>(window.rows());
  dims.p2 = static_cast<int>(window.cols());
  const LaggedMoments moments(window);
  const MarcfParams theta0 = initialize(moments, dims, cfg_);
  const CoefPair c = assemble(fit(theta0, moments, cfg_).theta_hat);
  return {forecast_one(c, window[window.size() - 1]), c};
}

WindowForecast RrmarForecaster::predict(const MatrixSeries& window) const {
  const CoefPair c = fit_rrmar(TransitionSample(window), r1_, r2_, cfg_);
  return {forecast_one(c, window[window.size() - 1]), c};
}

WindowForecast PersistenceForecaster::predict(const MatrixSeries& window) const {
  return {window[window.size() - 1], std::nullopt};
}

double median(std::vector<double> v) {
  if (v.empty()) throw ShapeError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

EvalResult rolling_eval(const MatrixSeries& series, std::size_t window, std::size_t n_windows,
                        const Forecaster& model, int jobs) {
  if (window < 2) throw ShapeError("rolling_eval: window must hold at least two observations");
  if (n_windows < 1) throw ShapeError("rolling_eval: need at least one window");
  if (window + n_windows > series.size())
    throw ShapeError("rolling_eval: insufficient data (" + std::to_string(series.size()) +
                     " observations for window " + std::to_string(window) + " and " +
                     std::to_string(n_windows) + " windows)");
  EvalResult out;
  out.model = model.name();
  out.window = window;
  out.windows.resize(n_windows);
  std::vector<std::string> errors(n_windows);

  auto run = [&](std::size_t w) {
    try {
      const WindowForecast f = model.predict(series.slice(w, window));
      WindowResult& r = out.windows[w];
      r.index = w;
      r.forecast = f.forecast;
      r.target = series[w + window];
      r.sse = (r.target - r.forecast).squaredNorm();
      r.coef = f.coef;
    } catch (const std::exception& e) {
      errors[w] = e.what();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n_windows));
  if (workers == 1) {
    for (std::size_t w = 0; w < n_windows; ++w) run(w);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < workers; ++k)
      pool.emplace_back([&] {
        for (std::size_t w = next++; w < n_windows; w = next++) run(w);
      });
    for (auto& th : pool) th.join();
  }
  for (std::size_t w = 0; w < n_windows; ++w)
    if (!errors[w].empty())
      throw NumericalError("rolling_eval: window " + std::to_string(w) + ": " + errors[w]);

  std::vector<double> sse;
  for (const auto& r : out.windows) sse.push_back(r.sse);
  double total = 0.0;
  for (double s : sse) total += s;
  out.mean = total / static_cast<double>(sse.size());
  out.median = median(sse);
  return out;
}

std::unique_ptr<Forecaster> forecaster_from_first_window(const MatrixSeries& series,
                                                         std::size_t window, ModelKind kind,
                                                         int rbar1, int rbar2,
                                                         const FitConfig& cfg, int jobs) {
  if (kind == ModelKind::persistence) return std::make_unique<PersistenceForecaster>();
  if (window > series.size()) throw ShapeError("window longer than the series");
  const MatrixSeries first = series.slice(0, window);
  if (kind == ModelKind::rrmar) {
    const RankSelection ranks = select_ranks(TransitionSample(first), rbar1, rbar2, cfg);
    return std::make_unique<RrmarForecaster>(ranks.r1, ranks.r2, cfg);
  }
  const PipelineResult pipe = run_pipeline(first, rbar1, rbar2, cfg, jobs);
  return std::make_unique<MarcfForecaster>(
      pipe.selection.dims(static_cast<int>(series.rows()), static_cast<int>(series.cols())), cfg);
}

double kron_rel_error(const CoefPair& est, const CoefPair& truth) {
  const Matrix k_true = truth.kron();
  const double denom = k_true.norm();
  if (!(denom > 0.0)) throw ShapeError("kron_rel_error: truth is zero");
  const Matrix k_est = est.kron();
  if (k_est.rows() != k_true.rows() || k_est.cols() != k_true.cols())
    throw ShapeError("kron_rel_error: shape mismatch");
  return (k_est - k_true).norm() / denom;
}

double loading_space_log_error(const Matrix& l_hat, const Matrix& l_true) {
  if (l_hat.rows() != l_true.rows()) throw ShapeError("loading_space_log_error: row mismatch");
  Eigen::ColPivHouseholderQR<Matrix> qr(l_hat);
  qr.setThreshold(1e-10);
  if (qr.rank() < l_hat.cols())
    throw NumericalError("loading_space_log_error: estimated loading is rank deficient");
  const Matrix gram = l_hat.transpose() * l_hat;
  const Matrix p_hat = l_hat * gram.ldlt().solve(l_hat.transpose());
  const double dist = (p_hat - l_true * l_true.transpose()).norm();
  return std::log(std::max(dist, 1e-15));
}

}  // namespace marcf

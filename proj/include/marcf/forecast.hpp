#ifndef MARCF_FORECAST_HPP
#define MARCF_FORECAST_HPP

#include "marcf/model.hpp"
#include "marcf/optimizer.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace marcf {

/// A1 Y A2^T.
Matrix forecast_one(const CoefPair& c, const Matrix& y);
Matrix forecast_one(const MarcfParams& theta, const Matrix& y);

struct WindowForecast {
  Matrix forecast;
  /// Fitted coefficients, when the forecaster is a bilinear AR(1).
  std::optional<CoefPair> coef;
};

/// Something that can be fit on a window and forecast the next observation.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  virtual WindowForecast predict(const MatrixSeries& window) const = 0;
};

class MarcfForecaster : public Forecaster {
 public:
  /// p1, p2 in `dims` are ignored and taken from each window.
  MarcfForecaster(StructuralDims dims, FitConfig cfg) : dims_(dims), cfg_(cfg) {}
  std::string name() const override { return "marcf"; }
  WindowForecast predict(const MatrixSeries& window) const override;

 private:
  StructuralDims dims_;
  FitConfig cfg_;
};

class RrmarForecaster : public Forecaster {
 public:
  RrmarForecaster(int r1, int r2, FitConfig cfg) : r1_(r1), r2_(r2), cfg_(cfg) {}
  std::string name() const override { return "rrmar"; }
  WindowForecast predict(const MatrixSeries& window) const override;

 private:
  int r1_, r2_;
  FitConfig cfg_;
};

/// Y_hat = Y_last.
class PersistenceForecaster : public Forecaster {
 public:
  std::string name() const override { return "persistence"; }
  WindowForecast predict(const MatrixSeries& window) const override;
};

struct WindowResult {
  std::size_t index = 0;   // window w uses observations [w, w + width)
  Matrix forecast;
  Matrix target;           // observation w + width
  double sse = 0.0;
  std::optional<CoefPair> coef;
};

struct EvalResult {
  std::string model;
  std::size_t window = 0;
  std::vector<WindowResult> windows;
  double mean = 0.0;
  double median = 0.0;
};

/**
 * One-step rolling evaluation with stride 1.  Window w fits on observations
 * [w, w + window) and is scored by |Y_{w+window} - Y_hat|_F^2.  Requires
 * window >= 2 and window + n_windows <= series.size().  Results are keyed
 * by window index whatever the value of `jobs`.
 */
EvalResult rolling_eval(const MatrixSeries& series, std::size_t window, std::size_t n_windows,
                        const Forecaster& model, int jobs = 1);

enum class ModelKind { marcf, rrmar, persistence };

/// Chooses (r, d) once by run_pipeline on the first window (ranks only for
/// rrmar) and returns the forecaster refit on every window.
std::unique_ptr<Forecaster> forecaster_from_first_window(const MatrixSeries& series,
                                                         std::size_t window, ModelKind kind,
                                                         int rbar1, int rbar2,
                                                         const FitConfig& cfg, int jobs = 1);

double median(std::vector<double> values);

/// |A2 (x) A1 - A2* (x) A1*|_F / |A2* (x) A1*|_F.
double kron_rel_error(const CoefPair& est, const CoefPair& truth);

/// log |P(L_hat) - L_true L_true^T|_F with P the orthogonal projector onto
/// span(L_hat); values below 1e-15 are clamped.
double loading_space_log_error(const Matrix& l_hat, const Matrix& l_true);

}  // namespace marcf

#endif  // MARCF_FORECAST_HPP

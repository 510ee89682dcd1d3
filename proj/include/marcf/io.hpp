#ifndef MARCF_IO_HPP
#define MARCF_IO_HPP

#include "marcf/forecast.hpp"
#include "marcf/model.hpp"
#include "marcf/optimizer.hpp"
#include "marcf/selection.hpp"
#include "marcf/simulate.hpp"

#include <json.hpp>

#include <string>

namespace marcf::io {

using Json = nlohmann::json;

/// Shortest round-trip decimal ("%.17g" when needed).
std::string format_double(double x);

/// Non-finite values become the strings "inf", "-inf", "nan".
Json number(double x);
double to_double(const Json& j);

/// Row-major nested arrays.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, Eigen::Index rows = -1, Eigen::Index cols = -1);

/// {dims: {p1,p2,r1,r2,d1,d2}, b, C1, R1, P1, D1, C2, R2, P2, D2}.
Json params_to_json(const MarcfParams& theta);
MarcfParams params_from_json(const Json& j);

Json dims_to_json(const StructuralDims& d);
StructuralDims dims_from_json(const Json& j);

Json fit_report_to_json(const FitReport& rep);
Json selection_to_json(const SelectionReport& rep);
SelectionReport selection_from_json(const Json& j);
Json eval_summary_to_json(const EvalResult& res);
Json config_to_json(const FitConfig& cfg);
/// Overlays the keys present in `j` onto `cfg`.
void apply_config_json(const Json& j, FitConfig& cfg);

/// Header t,y_1_1,y_2_1,...,y_p1_p2 in column-major vec order, rows t = 0..T.
void write_series_csv(const std::string& path, const MatrixSeries& series);
MatrixSeries read_series_csv(const std::string& path);

/// Reads `dir/series.csv` and, if present, labels from `dir/meta.json`.
/// `path` may also name the CSV file directly.
MatrixSeries read_dataset(const std::string& path);
void write_dataset(const std::string& dir, const MatrixSeries& series);

/// BIC surface with rows d1 and columns d2.
void write_surface_csv(const std::string& path, const Matrix& surface);
/// window_index,model,sse.
void write_eval_csv(const std::string& path, const std::vector<EvalResult>& results);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

/// Per-entry zero mean and unit variance over time.
struct Standardization {
  Matrix mean;
  Matrix sd;

  static Standardization fit(const MatrixSeries& series);
  MatrixSeries apply(const MatrixSeries& series) const;
  Matrix invert(const Matrix& standardized) const;
  Json to_json() const;
  static Standardization from_json(const Json& j);
};

}  // namespace marcf::io

#endif  // MARCF_IO_HPP

#include "marcf/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace marcf::io {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double to_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ShapeError("expected a number, got " + j.dump());
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array()) throw ShapeError("matrix must be an array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  if (rows >= 0 && n != rows) throw ShapeError("matrix has the wrong number of rows");
  if (n == 0) return Matrix(rows < 0 ? 0 : rows, cols < 0 ? 0 : cols);
  const auto m = static_cast<Eigen::Index>(j[0].size());
  if (cols >= 0 && m != cols) throw ShapeError("matrix has the wrong number of columns");
  Matrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != m)
      throw ShapeError("ragged matrix");
    for (Eigen::Index k = 0; k < m; ++k) out(i, k) = to_double(j[i][k]);
  }
  return out;
}

Json dims_to_json(const StructuralDims& d) {
  return {{"p1", d.p1}, {"p2", d.p2}, {"r1", d.r1}, {"r2", d.r2}, {"d1", d.d1}, {"d2", d.d2}};
}

StructuralDims dims_from_json(const Json& j) {
  StructuralDims d{j.at("p1").get<int>(), j.at("p2").get<int>(), j.at("r1").get<int>(),
                   j.at("r2").get<int>(), j.at("d1").get<int>(), j.at("d2").get<int>()};
  d.validate();
  return d;
}

Json params_to_json(const MarcfParams& theta) {
  Json j;
  j["dims"] = dims_to_json(theta.dims());
  j["b"] = theta.b;
  for (int m = 0; m < 2; ++m) {
    const std::string k = std::to_string(m + 1);
    j["C" + k] = matrix_to_json(theta.modes[m].C);
    j["R" + k] = matrix_to_json(theta.modes[m].R);
    j["P" + k] = matrix_to_json(theta.modes[m].P);
    j["D" + k] = matrix_to_json(theta.modes[m].D);
  }
  return j;
}

MarcfParams params_from_json(const Json& j) {
  const StructuralDims d = dims_from_json(j.at("dims"));
  MarcfParams theta;
  theta.b = j.value("b", 1.0);
  for (int m = 0; m < 2; ++m) {
    const std::string k = std::to_string(m + 1);
    const int p = d.p(m), r = d.r(m), dd = d.d(m);
    theta.modes[m].C = matrix_from_json(j.at("C" + k), p, dd);
    theta.modes[m].R = matrix_from_json(j.at("R" + k), p, r - dd);
    theta.modes[m].P = matrix_from_json(j.at("P" + k), p, r - dd);
    theta.modes[m].D = matrix_from_json(j.at("D" + k), r, r);
  }
  theta.validate();
  return theta;
}

Json fit_report_to_json(const FitReport& rep) {
  Json trace = Json::array();
  for (double f : rep.objective_trace) trace.push_back(number(f));
  return {{"iterations_run", rep.iterations_run},
          {"converged", rep.converged},
          {"backoffs_used", rep.backoffs_used},
          {"eta_used", rep.eta_used},
          {"final_gradient_norm", number(rep.final_gradient_norm)},
          {"final_objective", number(rep.objective_trace.empty() ? 0.0 : rep.objective_trace.back())},
          {"objective_trace", trace},
          {"theta_hat", params_to_json(rep.theta_hat)}};
}

namespace {

Json list(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::vector<double> list_from(const Json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(to_double(x));
  return out;
}

}  // namespace

Json selection_to_json(const SelectionReport& rep) {
  return {{"rbar1", rep.rbar1},
          {"rbar2", rep.rbar2},
          {"s", rep.s},
          {"singular_values", {list(rep.singular_values[0]), list(rep.singular_values[1])}},
          {"ratios", {list(rep.ratios[0]), list(rep.ratios[1])}},
          {"r_hat", {rep.r1, rep.r2}},
          {"bic_surface", matrix_to_json(rep.bic_surface)},
          {"d_hat", {rep.d1, rep.d2}}};
}

SelectionReport selection_from_json(const Json& j) {
  SelectionReport rep;
  rep.rbar1 = j.value("rbar1", 0);
  rep.rbar2 = j.value("rbar2", 0);
  rep.s = j.contains("s") ? to_double(j["s"]) : 0.0;
  if (j.contains("singular_values"))
    for (int m = 0; m < 2; ++m) rep.singular_values[m] = list_from(j["singular_values"][m]);
  if (j.contains("ratios"))
    for (int m = 0; m < 2; ++m) rep.ratios[m] = list_from(j["ratios"][m]);
  rep.r1 = j.at("r_hat").at(0).get<int>();
  rep.r2 = j.at("r_hat").at(1).get<int>();
  rep.d1 = j.at("d_hat").at(0).get<int>();
  rep.d2 = j.at("d_hat").at(1).get<int>();
  if (j.contains("bic_surface")) rep.bic_surface = matrix_from_json(j["bic_surface"]);
  return rep;
}

Json eval_summary_to_json(const EvalResult& res) {
  Json sse = Json::array();
  for (const auto& w : res.windows) sse.push_back(number(w.sse));
  return {{"model", res.model},
          {"window", res.window},
          {"n_windows", res.windows.size()},
          {"sse", sse},
          {"mean", number(res.mean)},
          {"median", number(res.median)}};
}

Json config_to_json(const FitConfig& cfg) {
  return {{"lambda1", cfg.hp.lambda1},       {"lambda2", cfg.hp.lambda2},
          {"b", cfg.hp.b},                   {"eta", cfg.eta},
          {"max_iter", cfg.max_iter},        {"rel_tol", cfg.rel_tol},
          {"grad_tol", cfg.grad_tol},        {"backoff_factor", cfg.backoff_factor},
          {"max_backoffs", cfg.max_backoffs}, {"divergence_ratio", cfg.divergence_ratio},
          {"init_ridge", cfg.init_ridge}};
}

void apply_config_json(const Json& j, FitConfig& cfg) {
  if (!j.is_object()) throw ShapeError("config must be a JSON object");
  auto get = [&](const char* key, auto& target) {
    if (j.contains(key)) target = j[key].get<std::decay_t<decltype(target)>>();
    if (j.contains("hp") && j["hp"].contains(key))
      target = j["hp"][key].get<std::decay_t<decltype(target)>>();
  };
  get("lambda1", cfg.hp.lambda1);
  get("lambda2", cfg.hp.lambda2);
  get("b", cfg.hp.b);
  get("eta", cfg.eta);
  get("max_iter", cfg.max_iter);
  get("rel_tol", cfg.rel_tol);
  get("grad_tol", cfg.grad_tol);
  get("backoff_factor", cfg.backoff_factor);
  get("max_backoffs", cfg.max_backoffs);
  get("divergence_ratio", cfg.divergence_ratio);
  get("init_ridge", cfg.init_ridge);
  cfg.validate();
}

void write_series_csv(const std::string& path, const MatrixSeries& series) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << 't';
  for (Eigen::Index j = 0; j < series.cols(); ++j)
    for (Eigen::Index i = 0; i < series.rows(); ++i) out << ",y_" << i + 1 << '_' << j + 1;
  out << '\n';
  for (std::size_t t = 0; t < series.size(); ++t) {
    out << t;
    const Matrix& y = series[t];
    for (Eigen::Index j = 0; j < y.cols(); ++j)
      for (Eigen::Index i = 0; i < y.rows(); ++i) out << ',' << format_double(y(i, j));
    out << '\n';
  }
}

MatrixSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw ShapeError(path + ": empty file");
  std::vector<std::pair<int, int>> cells;
  {
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    if (tok != "t") throw ShapeError(path + ": first column must be t");
    while (std::getline(ss, tok, ',')) {
      int i = 0, j = 0;
      if (std::sscanf(tok.c_str(), "y_%d_%d", &i, &j) != 2 || i < 1 || j < 1)
        throw ShapeError(path + ": bad column name " + tok);
      cells.emplace_back(i - 1, j - 1);
    }
  }
  int p1 = 0, p2 = 0;
  for (auto [i, j] : cells) {
    p1 = std::max(p1, i + 1);
    p2 = std::max(p2, j + 1);
  }
  if (static_cast<int>(cells.size()) != p1 * p2) throw ShapeError(path + ": incomplete header");
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto [i, j] = cells[k];
    if (static_cast<int>(k) != j * p1 + i)
      throw ShapeError(path + ": columns must follow column-major order");
  }
  std::vector<Matrix> data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    Matrix y(p1, p2);
    for (int k = 0; k < p1 * p2; ++k) {
      if (!std::getline(ss, tok, ',')) throw ShapeError(path + ": short row");
      char* end = nullptr;
      y(k % p1, k / p1) = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str()) throw ShapeError(path + ": bad number " + tok);
    }
    data.push_back(std::move(y));
  }
  if (data.empty()) throw ShapeError(path + ": no observations");
  return MatrixSeries(std::move(data));
}

MatrixSeries read_dataset(const std::string& path) {
  fs::path p(path);
  fs::path csv = fs::is_directory(p) ? p / "series.csv" : p;
  MatrixSeries s = read_series_csv(csv.string());
  const fs::path meta = csv.parent_path() / "meta.json";
  if (fs::exists(meta)) {
    const Json j = read_json(meta.string());
    if (j.value("p1", s.rows()) != s.rows() || j.value("p2", s.cols()) != s.cols())
      throw ShapeError("meta.json dimensions do not match series.csv");
    std::vector<std::string> rows = j.value("row_labels", std::vector<std::string>{});
    std::vector<std::string> cols = j.value("col_labels", std::vector<std::string>{});
    s = MatrixSeries(s.data(), rows, cols);
  }
  return s;
}

void write_dataset(const std::string& dir, const MatrixSeries& series) {
  fs::create_directories(dir);
  write_series_csv((fs::path(dir) / "series.csv").string(), series);
  Json meta = {{"p1", series.rows()}, {"p2", series.cols()}};
  meta["row_labels"] = series.row_labels();
  meta["col_labels"] = series.col_labels();
  write_json((fs::path(dir) / "meta.json").string(), meta);
}

void write_surface_csv(const std::string& path, const Matrix& surface) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "d1";
  for (Eigen::Index j = 0; j < surface.cols(); ++j) out << ",d2_" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < surface.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < surface.cols(); ++j) out << ',' << format_double(surface(i, j));
    out << '\n';
  }
}

void write_eval_csv(const std::string& path, const std::vector<EvalResult>& results) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "window_index,model,sse\n";
  for (const auto& res : results)
    for (const auto& w : res.windows) out << w.index << ',' << res.model << ',' << format_double(w.sse) << '\n';
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ShapeError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

Standardization Standardization::fit(const MatrixSeries& series) {
  if (series.size() < 2) throw ShapeError("standardization needs at least two observations");
  Standardization st;
  st.mean = Matrix::Zero(series.rows(), series.cols());
  for (const auto& y : series.data()) st.mean += y;
  st.mean /= static_cast<double>(series.size());
  Matrix ss = Matrix::Zero(series.rows(), series.cols());
  for (const auto& y : series.data()) ss += (y - st.mean).cwiseAbs2();
  st.sd = (ss / static_cast<double>(series.size() - 1)).cwiseSqrt();
  for (Eigen::Index k = 0; k < st.sd.size(); ++k)
    if (!(st.sd(k) > 0.0)) st.sd(k) = 1.0;  // constant entry: center only
  return st;
}

MatrixSeries Standardization::apply(const MatrixSeries& series) const {
  std::vector<Matrix> out;
  out.reserve(series.size());
  for (const auto& y : series.data()) out.push_back((y - mean).cwiseQuotient(sd));
  return MatrixSeries(std::move(out), series.row_labels(), series.col_labels());
}

Matrix Standardization::invert(const Matrix& z) const { return z.cwiseProduct(sd) + mean; }

Json Standardization::to_json() const {
  return {{"mean", matrix_to_json(mean)}, {"sd", matrix_to_json(sd)}};
}

Standardization Standardization::from_json(const Json& j) {
  Standardization st;
  st.mean = matrix_from_json(j.at("mean"));
  st.sd = matrix_from_json(j.at("sd"), st.mean.rows(), st.mean.cols());
  return st;
}

}  // namespace marcf::io

#include "kpp/data.hpp"

#include "kpp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace kpp {

void SimSpec::validate() const {
  if (n < 1 || P < 1 || K < 1) throw ConfigError("SimSpec: need n, P, K >= 1");
  true_params.validate();
  if (true_params.k() != K || true_params.p() != P)
    throw ConfigError("SimSpec: true_params shape does not match K, P");
  if (covariate_model == CovariateModel::Supplied) {
    if (!supplied) throw ConfigError("SimSpec: supplied covariates missing");
    if (supplied->rows() != n || supplied->cols() != P)
      throw ConfigError("SimSpec: supplied covariate matrix has wrong shape");
  }
}

Simulation simulate(const SimSpec& spec) {
  spec.validate();
  auto rng = stream_rng(spec.seed, "simulate");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Simulation sim;
  sim.data.X.resize(spec.n, spec.P);
  if (spec.covariate_model == SimSpec::CovariateModel::Supplied) {
    sim.data.X = *spec.supplied;
  } else {
    for (int i = 0; i < spec.n; ++i)
      for (int j = 0; j < spec.P; ++j) sim.data.X(i, j) = gauss(rng);
  }
  sim.data.y.resize(spec.n);
  sim.labels.resize(spec.n);
  const double sigma = std::sqrt(spec.true_params.sigma2);
  for (int i = 0; i < spec.n; ++i) {
    const double u = unif(rng);
    int z = spec.K - 1;
    double cum = 0.0;
    for (int k = 0; k < spec.K; ++k) {
      cum += spec.true_params.pi(k);
      if (u < cum) {
        z = k;
        break;
      }
    }
    sim.labels[i] = z;
    sim.data.y(i) = sim.data.X.row(i).dot(spec.true_params.beta.row(z)) + sigma * gauss(rng);
  }
  return sim;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace and stray carriage returns
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& s, std::size_t row, const std::string& col) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (s.empty() || end != begin + s.size() || !std::isfinite(v))
    throw ParseError("load_csv: non-numeric cell at data row " + std::to_string(row) +
                     ", column '" + col + "'");
  return v;
}

}  // namespace

LoadedData load_csv(const std::string& path, const std::string& response_column,
                    bool standardize) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_csv: empty file '" + path + "'");
  const std::vector<std::string> header = split_csv_line(line);

  Eigen::Index resp_idx = -1;
  LoadedData out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == response_column)
      resp_idx = static_cast<Eigen::Index>(j);
    else
      out.covariate_names.push_back(header[j]);
  }
  if (resp_idx < 0)
    throw ParseError("load_csv: response column '" + response_column + "' not found");
  if (out.covariate_names.empty()) throw ParseError("load_csv: no covariate columns");
  out.response_name = response_column;

  std::vector<double> ys;
  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row_no;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("load_csv: data row " + std::to_string(row_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    std::vector<double> xr;
    xr.reserve(header.size() - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = parse_cell(cells[j], row_no, header[j]);
      if (static_cast<Eigen::Index>(j) == resp_idx)
        ys.push_back(v);
      else
        xr.push_back(v);
    }
    rows.push_back(std::move(xr));
  }
  if (rows.empty()) throw ParseError("load_csv: no data rows in '" + path + "'");

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index P = static_cast<Eigen::Index>(rows.front().size());
  out.data.y.resize(n);
  out.data.X.resize(n, P);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.data.y(i) = ys[i];
    for (Eigen::Index j = 0; j < P; ++j) out.data.X(i, j) = rows[i][j];
  }

  out.transform.mean = Vector::Zero(P);
  out.transform.scale = Vector::Ones(P);
  if (standardize) {
    for (Eigen::Index j = 0; j < P; ++j) {
      const double m = out.data.X.col(j).mean();
      const double denom = static_cast<double>(n > 1 ? n - 1 : 1);
      const double sd = std::sqrt((out.data.X.col(j).array() - m).square().sum() / denom);
      if (sd == 0.0)
        throw ConstantColumnError("load_csv: column '" + out.covariate_names[j] +
                                  "' is constant, cannot standardize");
      out.transform.mean(j) = m;
      out.transform.scale(j) = sd;
      out.data.X.col(j) = (out.data.X.col(j).array() - m) / sd;
    }
    out.transform.applied = true;
  }
  out.data.validate();
  return out;
}

OriginalScaleCoefficients to_original_scale(const MixtureParams& params,
                                            const Standardization& transform) {
  OriginalScaleCoefficients out;
  out.beta = params.beta;
  out.intercept = Vector::Zero(params.k());
  if (!transform.applied) return out;
  for (Eigen::Index k = 0; k < params.k(); ++k) {
    for (Eigen::Index j = 0; j < params.p(); ++j) {
      out.beta(k, j) = params.beta(k, j) / transform.scale(j);
      out.intercept(k) -= params.beta(k, j) * transform.mean(j) / transform.scale(j);
    }
  }
  return out;
}

Vector predict_component(const Matrix& X, const Vector& beta_k, double intercept) {
  return (X * beta_k).array() + intercept;
}

}  // namespace kpp

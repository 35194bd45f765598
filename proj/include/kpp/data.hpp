#pragma once

#include "kpp/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kpp {

/// Synthetic mixture-of-regressions generator specification.
struct SimSpec {
  enum class CovariateModel { StandardNormal, Supplied };

  int n = 0;
  int P = 0;
  int K = 0;
  MixtureParams true_params;
  CovariateModel covariate_model = CovariateModel::StandardNormal;
  std::optional<Matrix> supplied;  // n x P when covariate_model == Supplied
  long seed = 0;

  void validate() const;
};

struct Simulation {
  Dataset data;
  std::vector<int> labels;  // 0-based component of each observation
};

/// Draws z_i ~ Categorical(pi), x_i from the covariate model and
/// y_i = x_i beta_{z_i} + N(0, sigma2). Reproducible for a fixed seed.
Simulation simulate(const SimSpec& spec);

/// Per-column affine transform applied to the covariates.
struct Standardization {
  bool applied = false;
  Vector mean;
  Vector scale;  // sample standard deviations
};

struct LoadedData {
  Dataset data;
  std::string response_name;
  std::vector<std::string> covariate_names;
  Standardization transform;
};

/// CSV ingestion: first row header, comma separated, response selected by
/// name, remaining numeric columns become covariates in header order.
LoadedData load_csv(const std::string& path, const std::string& response_column,
                    bool standardize);

/// Fitted coefficients mapped back to the original covariate scale. Since
/// standardization centers the columns, the mapping produces a per-component
/// intercept so that predictions agree on both scales.
struct OriginalScaleCoefficients {
  Matrix beta;       // K x P
  Vector intercept;  // K
};

OriginalScaleCoefficients to_original_scale(const MixtureParams& params,
                                            const Standardization& transform);

/// Component-k predictions on (possibly unstandardized) covariates.
Vector predict_component(const Matrix& X, const Vector& beta_k, double intercept = 0.0);

}  // namespace kpp

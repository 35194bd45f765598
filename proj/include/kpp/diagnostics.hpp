#pragma once

#include "kpp/solver.hpp"

#include <vector>

namespace kpp {

/// Nonsmooth stationarity residuals at a candidate cluster point.
struct KktReport {
  Matrix residual_beta;        // K x P point-to-subdifferential distances
  double residual_pi = 0.0;    // simplex tangent-cone projected gradient norm
  double residual_sigma2 = 0.0;
  std::vector<int> active_components;  // k with pi_k = 0 (the active set)
  double max_residual = 0.0;   // excludes beta rows of active components
};

/// Monotonicity-ledger audit of a fit trace.
struct LedgerReport {
  bool monotone_ok = false;
  double worst_violation = 0.0;
  double proximal_final = 0.0;
  double iterate_gap_final = 0.0;
};

/// Checks every recorded block step for the proximal monotonicity
/// inequality F(new) - F(old) >= beta * I_y within the given slack.
LedgerReport audit_trace(const FitTrace& trace, double slack);

KktReport kkt_residual(const MixtureParams& params, const PenaltySpec& penalty,
                       const Dataset& data);

struct RunComparison {
  double objective_a = 0.0;
  double objective_b = 0.0;
  double kkt_a = 0.0;
  double kkt_b = 0.0;
  double param_distance = 0.0;
};

RunComparison compare_runs(const FitResult& a, const FitResult& b,
                           const PenaltySpec& penalty, const Dataset& data);

}  // namespace kpp

#pragma once

#include "kpp/types.hpp"

namespace kpp {

enum class PenaltyKind { None, L1, Scad };

/// Sparsity penalty configuration. gamma and lambda hold one entry per
/// mixture component; n_scale is the sample size entering the sqrt(n)
/// scaling of the SCAD formula. The guard is an auxiliary hinge that makes
/// the penalized objective coercive when the design is rank deficient.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::None;
  Vector gamma;   // K, > 0
  double a = 10.0;
  Vector lambda;  // K, >= 0 block weights
  int n_scale = 1;
  bool guard_enabled = false;
  double guard_threshold = 1e6;

  static PenaltySpec none(Eigen::Index K = 1);
  static PenaltySpec scad(Eigen::Index K, double gamma, double a, int n_scale);
  static PenaltySpec l1(Eigen::Index K, double gamma, int n_scale);

  void validate(Eigen::Index K) const;
};

/// Closed interval used for scalar Clarke subdifferentials.
struct SubInterval {
  double lo = 0.0;
  double hi = 0.0;

  /// Point-to-interval distance; zero iff g lies in [lo, hi].
  double distance_to(double g) const {
    if (g < lo) return lo - g;
    if (g > hi) return g - hi;
    return 0.0;
  }
};

// Scalar SCAD penalty. The derivative is the defining formula; the value is
// its integral from 0 and is continuous, even and nondecreasing in |b|.
double scad_derivative(double b, double gamma, double a, int n);
double scad_value(double b, double gamma, double a, int n);
SubInterval scad_subdifferential(double b, double gamma, double a, int n);

/// Global minimizer of 0.5*w*(b - z)^2 + mu * p_gamma(b) over b.
/// The objective is piecewise quadratic, so the minimum is found by exact
/// candidate enumeration. Ties break toward 0, then toward smaller |b|.
double scad_prox(double z, double w, double mu, double gamma, double a, int n);

// Kind dispatchers for the per-coordinate scalar penalty of component k.
double scalar_penalty_value(const PenaltySpec& spec, int k, double b);
double scalar_penalty_derivative(const PenaltySpec& spec, int k, double b);
SubInterval scalar_penalty_subdifferential(const PenaltySpec& spec, int k, double b);
double scalar_penalty_prox(const PenaltySpec& spec, int k, double z, double w, double mu);

/// Unweighted per-component penalty sum: sum_j p_{gamma_k}(beta_kj).
double component_penalty_sum(const PenaltySpec& spec, int k, const Vector& beta_k);

/// Hinge activating beyond the threshold: sum_kj max(|beta_kj| - thr, 0).
double coercivity_guard(const Matrix& beta, double threshold);

/// The pi-weighted composite penalty sum_k lambda_k pi_k sum_j p(beta_kj),
/// plus the coercivity guard when enabled.
double composite_penalty(const MixtureParams& params, const PenaltySpec& spec);

}  // namespace kpp

#pragma once

#include "kpp/penalty.hpp"
#include "kpp/types.hpp"

namespace kpp {

/// n x K matrix of log N(y_i; x_i beta_k, sigma2).
Matrix log_component_densities(const MixtureParams& params, const Dataset& data);

/// Observed-data log-likelihood, computed in log-space with log-sum-exp.
double log_likelihood(const MixtureParams& params, const Dataset& data);

/// Same evaluation without invariant checks; accepts off-simplex pi.
/// Needed by finite-difference probes of the pi gradient.
double log_likelihood_raw(const MixtureParams& params, const Dataset& data);

/// E-step: t_ik = pi_k N(y_i; x_i beta_k, sigma2) / sum_l pi_l N(...).
/// Entries below 1e-300 are clamped to exactly 0 and the row renormalized,
/// so active constraints t_ik = 0 are detectable in floating point.
Responsibilities responsibilities(const MixtureParams& params, const Dataset& data);

/// Expected complete log-likelihood under anchor responsibilities, without
/// the penalty term. Uses the 0*log(0) = 0 convention.
double q_function(const MixtureParams& params, const Responsibilities& anchor_resp,
                  const Dataset& data);

/// Kullback distance-like function between conditional label distributions:
/// I_y(theta, theta_bar) = sum_ik t_ik(theta_bar) log(t_ik(theta_bar)/t_ik(theta)).
double kl_divergence(const MixtureParams& params, const MixtureParams& anchor,
                     const Dataset& data);

/// Same divergence from precomputed responsibility matrices.
double kl_from_responsibilities(const Responsibilities& of_params,
                                const Responsibilities& of_anchor);

/// l_y(theta) - p_n(theta); the merit function the solver increases.
double penalized_loglik(const MixtureParams& params, const PenaltySpec& penalty,
                        const Dataset& data);

/// F_beta(theta, theta_bar) = l_y - p_n - beta_relax * I_y(theta, theta_bar).
double penalized_objective(const MixtureParams& params, const MixtureParams& anchor,
                           double beta_relax, const PenaltySpec& penalty,
                           const Dataset& data);

/// Gradient of the observed-data log-likelihood. The pi block treats the
/// simplex coordinates as free variables (open-simplex gradient); entries are
/// well defined at pi_k = 0 as density ratios.
struct ModelGradient {
  Vector pi;      // K
  Matrix beta;    // K x P
  double sigma2;  // d l_y / d sigma^2
};

ModelGradient log_likelihood_gradient(const MixtureParams& params, const Dataset& data);

}  // namespace kpp

#include "kpp/model.hpp"

#include <cmath>
#include <limits>

namespace kpp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kRespClamp = 1e-300;

double log_sum_exp_row(const Matrix& logdens, const Vector& log_pi, Eigen::Index i) {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < log_pi.size(); ++k) {
    if (std::isinf(log_pi(k))) continue;  // pi_k == 0
    m = std::max(m, log_pi(k) + logdens(i, k));
  }
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (Eigen::Index k = 0; k < log_pi.size(); ++k) {
    if (std::isinf(log_pi(k))) continue;
    s += std::exp(log_pi(k) + logdens(i, k) - m);
  }
  return m + std::log(s);
}

Vector log_pi_of(const MixtureParams& params) {
  Vector lp(params.k());
  for (Eigen::Index k = 0; k < params.k(); ++k)
    lp(k) = params.pi(k) > 0.0 ? std::log(params.pi(k))
                               : -std::numeric_limits<double>::infinity();
  return lp;
}

}  // namespace

Matrix log_component_densities(const MixtureParams& params, const Dataset& data) {
  const Eigen::Index n = data.n(), K = params.k();
  const double lognorm = -0.5 * (kLog2Pi + std::log(params.sigma2));
  const double inv2s = 0.5 / params.sigma2;
  Matrix L(n, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const Vector r = data.y - data.X * params.beta.row(k).transpose();
    L.col(k) = (-inv2s) * r.array().square() + lognorm;
  }
  return L;
}

double log_likelihood(const MixtureParams& params, const Dataset& data) {
  params.validate();
  data.validate();
  if (params.p() != data.p()) throw Error("log_likelihood: dimension mismatch");
  return log_likelihood_raw(params, data);
}

double log_likelihood_raw(const MixtureParams& params, const Dataset& data) {
  const Matrix L = log_component_densities(params, data);
  const Vector lp = log_pi_of(params);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) ll += log_sum_exp_row(L, lp, i);
  if (std::isnan(ll)) throw NonFiniteError("log_likelihood: NaN encountered");
  return ll;
}

Responsibilities responsibilities(const MixtureParams& params, const Dataset& data) {
  params.validate();
  data.validate();
  const Eigen::Index n = data.n(), K = params.k();
  const Matrix L = log_component_densities(params, data);
  const Vector lp = log_pi_of(params);
  Matrix t(n, K);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lm = log_sum_exp_row(L, lp, i);
    if (std::isnan(lm) || std::isinf(lm))
      throw DegenerateRowError("responsibilities: row " + std::to_string(i) +
                               " denominator underflows in log-space");
    double rowsum = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      double v = params.pi(k) > 0.0 ? std::exp(lp(k) + L(i, k) - lm) : 0.0;
      if (v < kRespClamp) v = 0.0;
      t(i, k) = v;
      rowsum += v;
    }
    if (rowsum <= 0.0)
      throw DegenerateRowError("responsibilities: row " + std::to_string(i) + " is all zero");
    t.row(i) /= rowsum;
  }
  return Responsibilities{std::move(t)};
}

double q_function(const MixtureParams& params, const Responsibilities& anchor_resp,
                  const Dataset& data) {
  if (params.sigma2 <= 0.0) throw Error("q_function: sigma2 must be positive");
  const Eigen::Index n = data.n(), K = params.k();
  if (anchor_resp.t.rows() != n || anchor_resp.t.cols() != K)
    throw Error("q_function: responsibilities shape mismatch");
  const double lognorm = -0.5 * (kLog2Pi + std::log(params.sigma2));
  const double inv2s = 0.5 / params.sigma2;
  double q = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double lpk = params.pi(k) > 0.0 ? std::log(params.pi(k))
                                          : -std::numeric_limits<double>::infinity();
    const Vector r = data.y - data.X * params.beta.row(k).transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double tb = anchor_resp.t(i, k);
      if (tb == 0.0) continue;  // 0*log 0 convention
      q += tb * (lpk + lognorm - inv2s * r(i) * r(i));
    }
  }
  if (std::isnan(q)) throw NonFiniteError("q_function: NaN encountered");
  return q;
}

double kl_from_responsibilities(const Responsibilities& of_params,
                                const Responsibilities& of_anchor) {
  const Matrix& t = of_params.t;
  const Matrix& tb = of_anchor.t;
  if (t.rows() != tb.rows() || t.cols() != tb.cols())
    throw Error("kl_divergence: responsibility shape mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index k = 0; k < t.cols(); ++k) {
      const double b = tb(i, k);
      if (b == 0.0) continue;
      const double a = t(i, k);
      if (a == 0.0) {
        // Mass below 1e-12 against a clamped zero is a rounding artifact of
        // the clamping rule, not a genuine domain violation.
        if (b <= 1e-12) continue;
        throw OutsideDomainError("kl_divergence: t_ik(theta) = 0 while t_ik(anchor) > 0");
      }
      s += b * std::log(b / a);
    }
  }
  // Gibbs' inequality guarantees s >= 0; trim rounding noise.
  if (s < 0.0 && s > -1e-12) s = 0.0;
  return s;
}

double kl_divergence(const MixtureParams& params, const MixtureParams& anchor,
                     const Dataset& data) {
  return kl_from_responsibilities(responsibilities(params, data),
                                  responsibilities(anchor, data));
}

double penalized_loglik(const MixtureParams& params, const PenaltySpec& penalty,
                        const Dataset& data) {
  return log_likelihood(params, data) - composite_penalty(params, penalty);
}

double penalized_objective(const MixtureParams& params, const MixtureParams& anchor,
                           double beta_relax, const PenaltySpec& penalty,
                           const Dataset& data) {
  if (beta_relax < 0.0) throw Error("penalized_objective: beta_relax must be nonnegative");
  double f = penalized_loglik(params, penalty, data);
  if (beta_relax > 0.0) f -= beta_relax * kl_divergence(params, anchor, data);
  return f;
}

ModelGradient log_likelihood_gradient(const MixtureParams& params, const Dataset& data) {
  const Eigen::Index n = data.n(), K = params.k(), P = params.p();
  const Matrix L = log_component_densities(params, data);
  const Vector lp = log_pi_of(params);
  ModelGradient g;
  g.pi = Vector::Zero(K);
  g.beta = Matrix::Zero(K, P);
  g.sigma2 = 0.0;
  const double s2 = params.sigma2;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lm = log_sum_exp_row(L, lp, i);
    for (Eigen::Index k = 0; k < K; ++k) {
      const double ratio = std::exp(L(i, k) - lm);  // density ratio, valid at pi_k = 0
      g.pi(k) += ratio;
      const double tik = params.pi(k) * ratio;
      if (tik == 0.0) continue;
      const double r = data.y(i) - data.X.row(i).dot(params.beta.row(k));
      g.beta.row(k) += (tik * r / s2) * data.X.row(i);
      g.sigma2 += tik * (r * r / (2.0 * s2 * s2) - 0.5 / s2);
    }
  }
  if (!g.pi.allFinite() || !g.beta.allFinite() || !std::isfinite(g.sigma2))
    throw NonFiniteError("log_likelihood_gradient: non-finite gradient");
  return g;
}

}  // namespace kpp

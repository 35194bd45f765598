#include "kpp/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace kpp {

PenaltySpec PenaltySpec::none(Eigen::Index K) {
  PenaltySpec s;
  s.kind = PenaltyKind::None;
  s.gamma = Vector::Ones(K);
  s.lambda = Vector::Ones(K);
  return s;
}

PenaltySpec PenaltySpec::scad(Eigen::Index K, double gamma, double a, int n_scale) {
  PenaltySpec s;
  s.kind = PenaltyKind::Scad;
  s.gamma = Vector::Constant(K, gamma);
  s.a = a;
  s.lambda = Vector::Ones(K);
  s.n_scale = n_scale;
  return s;
}

PenaltySpec PenaltySpec::l1(Eigen::Index K, double gamma, int n_scale) {
  PenaltySpec s;
  s.kind = PenaltyKind::L1;
  s.gamma = Vector::Constant(K, gamma);
  s.lambda = Vector::Ones(K);
  s.n_scale = n_scale;
  return s;
}

void PenaltySpec::validate(Eigen::Index K) const {
  if (kind == PenaltyKind::None) return;
  if (gamma.size() != K || lambda.size() != K)
    throw ConfigError("PenaltySpec: gamma and lambda must have one entry per component");
  if (gamma.minCoeff() <= 0.0) throw ConfigError("PenaltySpec: gamma must be positive");
  if (lambda.minCoeff() < 0.0) throw ConfigError("PenaltySpec: lambda must be nonnegative");
  if (kind == PenaltyKind::Scad && a <= 2.0) throw ConfigError("PenaltySpec: need a > 2");
  if (n_scale < 1) throw ConfigError("PenaltySpec: n_scale must be a positive integer");
  if (guard_threshold <= 0.0) throw ConfigError("PenaltySpec: guard threshold must be positive");
}

double scad_derivative(double b, double gamma, double a, int n) {
  if (b == 0.0) throw NotDifferentiableError("scad_derivative: not differentiable at 0");
  const double rn = std::sqrt(static_cast<double>(n));
  const double s = rn * std::abs(b);
  double d;
  if (s <= gamma)
    d = gamma * rn;
  else
    d = rn * std::max(a * gamma - s, 0.0) / (a - 1.0);
  return b > 0.0 ? d : -d;
}

double scad_value(double b, double gamma, double a, int n) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double s = rn * std::abs(b);
  if (s <= gamma) return gamma * s;
  if (s <= a * gamma)
    return gamma * gamma + (a * gamma * (s - gamma) - 0.5 * (s * s - gamma * gamma)) / (a - 1.0);
  return gamma * gamma * (a + 1.0) / 2.0;
}

SubInterval scad_subdifferential(double b, double gamma, double a, int n) {
  const double rn = std::sqrt(static_cast<double>(n));
  if (b == 0.0) return {-gamma * rn, gamma * rn};
  const double d = scad_derivative(b, gamma, a, n);
  return {d, d};
}

namespace {

double l1_value(double b, double gamma, int n) {
  return gamma * std::sqrt(static_cast<double>(n)) * std::abs(b);
}

SubInterval l1_subdifferential(double b, double gamma, int n) {
  const double g = gamma * std::sqrt(static_cast<double>(n));
  if (b == 0.0) return {-g, g};
  return b > 0.0 ? SubInterval{g, g} : SubInterval{-g, -g};
}

double soft_threshold(double z, double thr) {
  if (z > thr) return z - thr;
  if (z < -thr) return z + thr;
  return 0.0;
}

}  // namespace

double scad_prox(double z, double w, double mu, double gamma, double a, int n) {
  if (w <= 0.0) throw Error("scad_prox: need w > 0");
  if (mu < 0.0) throw Error("scad_prox: need mu >= 0");
  if (mu == 0.0) return z;
  const double az = std::abs(z);
  const double sgn = z >= 0.0 ? 1.0 : -1.0;
  const double rn = std::sqrt(static_cast<double>(n));
  const double t1 = gamma / rn;      // end of the linear zone (in b)
  const double t2 = a * gamma / rn;  // knee beyond which the penalty is flat

  auto objective = [&](double b) {
    const double d = b - az;
    return 0.5 * w * d * d + mu * scad_value(b, gamma, a, n);
  };

  // Per-zone stationary points plus breakpoints; the minimizer for z >= 0
  // lies in [0, z] so it suffices to search b >= 0.
  std::vector<double> cand{0.0};
  cand.push_back(std::clamp(az - mu * gamma * rn / w, 0.0, t1));
  const double denom = w - mu * static_cast<double>(n) / (a - 1.0);
  if (denom > 0.0) {
    const double num = w * az - mu * rn * a * gamma / (a - 1.0);
    cand.push_back(std::clamp(num / denom, t1, t2));
  }
  cand.push_back(std::max(az, t2));
  cand.push_back(t1);
  cand.push_back(t2);

  std::sort(cand.begin(), cand.end());
  double best = cand.front();
  double best_obj = objective(best);
  for (double b : cand) {
    const double o = objective(b);
    if (o < best_obj) {
      best = b;
      best_obj = o;
    }
  }
  return sgn * best;
}

double scalar_penalty_value(const PenaltySpec& spec, int k, double b) {
  switch (spec.kind) {
    case PenaltyKind::None:
      return 0.0;
    case PenaltyKind::L1:
      return l1_value(b, spec.gamma(k), spec.n_scale);
    case PenaltyKind::Scad:
      return scad_value(b, spec.gamma(k), spec.a, spec.n_scale);
  }
  return 0.0;
}

double scalar_penalty_derivative(const PenaltySpec& spec, int k, double b) {
  switch (spec.kind) {
    case PenaltyKind::None:
      return 0.0;
    case PenaltyKind::L1: {
      if (b == 0.0) throw NotDifferentiableError("l1 penalty: not differentiable at 0");
      const double g = spec.gamma(k) * std::sqrt(static_cast<double>(spec.n_scale));
      return b > 0.0 ? g : -g;
    }
    case PenaltyKind::Scad:
      return scad_derivative(b, spec.gamma(k), spec.a, spec.n_scale);
  }
  return 0.0;
}

SubInterval scalar_penalty_subdifferential(const PenaltySpec& spec, int k, double b) {
  switch (spec.kind) {
    case PenaltyKind::None:
      return {0.0, 0.0};
    case PenaltyKind::L1:
      return l1_subdifferential(b, spec.gamma(k), spec.n_scale);
    case PenaltyKind::Scad:
      return scad_subdifferential(b, spec.gamma(k), spec.a, spec.n_scale);
  }
  return {0.0, 0.0};
}

double scalar_penalty_prox(const PenaltySpec& spec, int k, double z, double w, double mu) {
  switch (spec.kind) {
    case PenaltyKind::None:
      return z;
    case PenaltyKind::L1:
      return soft_threshold(z, mu * spec.gamma(k) * std::sqrt(static_cast<double>(spec.n_scale)) / w);
    case PenaltyKind::Scad:
      return scad_prox(z, w, mu, spec.gamma(k), spec.a, spec.n_scale);
  }
  return z;
}

double component_penalty_sum(const PenaltySpec& spec, int k, const Vector& beta_k) {
  if (spec.kind == PenaltyKind::None) return 0.0;
  double s = 0.0;
  for (Eigen::Index j = 0; j < beta_k.size(); ++j)
    s += scalar_penalty_value(spec, k, beta_k(j));
  return s;
}

double coercivity_guard(const Matrix& beta, double threshold) {
  if (threshold <= 0.0) throw Error("coercivity_guard: threshold must be positive");
  double s = 0.0;
  for (Eigen::Index r = 0; r < beta.rows(); ++r)
    for (Eigen::Index c = 0; c < beta.cols(); ++c)
      s += std::max(std::abs(beta(r, c)) - threshold, 0.0);
  return s;
}

double composite_penalty(const MixtureParams& params, const PenaltySpec& spec) {
  double s = 0.0;
  if (spec.kind != PenaltyKind::None) {
    for (Eigen::Index k = 0; k < params.k(); ++k) {
      const Vector bk = params.beta.row(k);
      s += spec.lambda(k) * params.pi(k) * component_penalty_sum(spec, static_cast<int>(k), bk);
    }
  }
  if (spec.guard_enabled) s += coercivity_guard(params.beta, spec.guard_threshold);
  return s;
}

}  // namespace kpp

#include "kpp/solver.hpp"

#include "kpp/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace kpp {

BetaSchedule BetaSchedule::constant(double beta_star) {
  BetaSchedule s;
  s.kind = Kind::Constant;
  s.beta_star = beta_star;
  return s;
}

BetaSchedule BetaSchedule::geometric(double beta0, double rho, double beta_min) {
  BetaSchedule s;
  s.kind = Kind::GeometricDecay;
  s.beta0 = beta0;
  s.rho = rho;
  s.beta_min = beta_min;
  return s;
}

double BetaSchedule::value(int sweep) const {
  if (kind == Kind::Constant) return beta_star;
  return std::max(beta0 * std::pow(rho, sweep), beta_min);
}

void BetaSchedule::validate() const {
  if (kind == Kind::Constant) {
    if (beta_star <= 0.0) throw ConfigError("BetaSchedule: constant beta must be positive");
    return;
  }
  if (beta0 <= 0.0 || rho <= 0.0 || rho > 1.0 || beta_min <= 0.0)
    throw ConfigError("BetaSchedule: geometric decay needs beta0 > 0, 0 < rho <= 1, beta_min > 0");
}

void SolverConfig::validate() const {
  schedule.validate();
  if (max_sweeps < 1) throw ConfigError("SolverConfig: max_sweeps must be positive");
  if (tol_param <= 0.0 || tol_objective <= 0.0)
    throw ConfigError("SolverConfig: tolerances must be positive");
  if (sigma2_floor <= 0.0) throw ConfigError("SolverConfig: sigma2_floor must be positive");
  if (inner_max_iter < 1) throw ConfigError("SolverConfig: inner_max_iter must be positive");
  if (inner_tol <= 0.0) throw ConfigError("SolverConfig: inner_tol must be positive");
}

double beta_schedule_value(const SolverConfig& cfg, int sweep) {
  return cfg.schedule.value(sweep);
}

namespace {

// Per-coordinate prox including the coercivity guard hinge when enabled.
double coordinate_prox(const PenaltySpec& spec, int k, double z, double w, double mu) {
  double b = mu > 0.0 ? scalar_penalty_prox(spec, k, z, w, mu) : z;
  if (!spec.guard_enabled) return b;
  const double T = spec.guard_threshold;
  if (std::abs(b) <= T) return b;  // the hinge is inactive at the unguarded optimum
  auto objective = [&](double x) {
    const double d = x - z;
    return 0.5 * w * d * d + mu * scalar_penalty_value(spec, k, x) +
           std::max(std::abs(x) - T, 0.0);
  };
  const double s = z >= 0.0 ? 1.0 : -1.0;
  const double cands[3] = {s * T, s * std::max(T, std::abs(z) - 1.0 / w), b};
  double best = cands[0], best_obj = objective(cands[0]);
  for (double c : cands) {
    const double o = objective(c);
    if (o < best_obj) {
      best = c;
      best_obj = o;
    }
  }
  return best;
}

// Root of sum_k n_k / (mu + c_k) = 1 over the active components, by
// safeguarded bisection + Newton to 1e-12.
double solve_pi_multiplier(const Vector& nk, const Vector& c) {
  std::vector<int> act;
  double total = 0.0;
  for (Eigen::Index k = 0; k < nk.size(); ++k) {
    if (nk(k) > 0.0) {
      act.push_back(static_cast<int>(k));
      total += nk(k);
    }
  }
  if (act.empty()) throw RootBracketError("pi update: no component has positive mass");
  double cmin = std::numeric_limits<double>::infinity();
  double cmax = -std::numeric_limits<double>::infinity();
  for (int k : act) {
    cmin = std::min(cmin, c(k));
    cmax = std::max(cmax, c(k));
  }
  if (cmax - cmin <= 1e-14 * (1.0 + std::abs(cmax)))
    return total - cmin;  // all c_k equal: closed form, reproduces n_k / n
  auto h = [&](double mu) {
    double s = 0.0;
    for (int k : act) s += nk(k) / (mu + c(k));
    return s;
  };
  double lo = std::nextafter(-cmin, std::numeric_limits<double>::infinity());
  double hi = total - cmin;  // h(hi) <= 1 since mu + c_k >= total
  if (h(hi) > 1.0) throw RootBracketError("pi update: root bracket failed at upper end");
  double mu = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const double hv = h(mu);
    if (!std::isfinite(hv) || hv > 1.0)
      lo = mu;
    else
      hi = mu;
    if (std::isfinite(hv) && std::abs(hv - 1.0) <= 1e-13) break;
    double next = 0.5 * (lo + hi);
    if (std::isfinite(hv)) {
      double hp = 0.0;
      for (int k : act) hp -= nk(k) / ((mu + c(k)) * (mu + c(k)));
      const double newton = mu - (hv - 1.0) / hp;
      if (newton > lo && newton < hi) next = newton;
    }
    if (next == mu) break;
    mu = next;
    if (hi - lo <= 1e-15 * (1.0 + std::abs(mu))) break;
  }
  return mu;
}

double sigma2_closed_form(const Responsibilities& resp, const Matrix& beta,
                          const Dataset& data, double floor_value) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < beta.rows(); ++k) {
    const Vector r = data.y - data.X * beta.row(k).transpose();
    s += resp.t.col(k).dot(r.cwiseProduct(r));
  }
  return std::max(s / static_cast<double>(data.n()), floor_value);
}

Vector component_weights(const PenaltySpec& penalty, const Matrix& beta) {
  Vector c = Vector::Zero(beta.rows());
  if (penalty.kind == PenaltyKind::None) return c;
  for (Eigen::Index k = 0; k < beta.rows(); ++k) {
    const Vector bk = beta.row(k);
    c(k) = penalty.lambda(k) * component_penalty_sum(penalty, static_cast<int>(k), bk);
  }
  return c;
}

// Exact weighted least squares via normal equations; empty on failure.
std::optional<Vector> wls_solve(const Dataset& data, const Vector& weights) {
  const Matrix Xw = weights.asDiagonal() * data.X;
  const Matrix A = data.X.transpose() * Xw;
  const Vector rhs = data.X.transpose() * weights.cwiseProduct(data.y);
  Eigen::LDLT<Matrix> ldlt(A);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  Vector b = ldlt.solve(rhs);
  if (!b.allFinite()) return std::nullopt;
  const double resid = (A * b - rhs).norm();
  if (resid > 1e-8 * (1.0 + rhs.norm())) return std::nullopt;
  return b;
}

double weighted_sse(const Dataset& data, const Vector& weights, const Vector& b) {
  const Vector r = data.y - data.X * b;
  return weights.dot(r.cwiseProduct(r));
}

// Exact cyclic coordinate descent on the beta_relax = 1 block objective
// -sum_i t_ik (y_i - x_i b)^2 / (2 sigma2) - mu sum_j p(b_j) [- guard].
Vector beta_block_cd(int k, const Responsibilities& resp, const MixtureParams& params,
                     const PenaltySpec& penalty, const Dataset& data,
                     const SolverConfig& cfg) {
  Vector b = params.beta.row(k);
  const Vector t = resp.t.col(k);
  if (t.sum() <= 0.0) return b;
  const double mu = penalty.kind == PenaltyKind::None
                        ? 0.0
                        : penalty.lambda(k) * params.pi(k);

  if (mu == 0.0 && !penalty.guard_enabled) {
    if (auto ls = wls_solve(data, t)) {
      if (weighted_sse(data, t, *ls) <=
          weighted_sse(data, t, b) * (1.0 + 1e-12) + 1e-12)
        return *ls;
    }
    // rank-deficient design: fall through to coordinate descent
  }

  const double s2 = params.sigma2;
  Vector r = data.y - data.X * b;
  Vector w(data.p());
  for (Eigen::Index j = 0; j < data.p(); ++j)
    w(j) = t.dot(data.X.col(j).cwiseProduct(data.X.col(j))) / s2;

  for (int cycle = 0; cycle < cfg.inner_max_iter; ++cycle) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      double bj_new;
      if (w(j) <= 0.0) {
        if (mu <= 0.0) continue;
        bj_new = 0.0;  // no weighted mass on this coordinate; penalty decides
      } else {
        const double zj = b(j) + t.dot(data.X.col(j).cwiseProduct(r)) / (s2 * w(j));
        bj_new = coordinate_prox(penalty, k, zj, w(j), mu);
      }
      if (bj_new != b(j)) {
        r += data.X.col(j) * (b(j) - bj_new);
        max_delta = std::max(max_delta, std::abs(bj_new - b(j)));
        b(j) = bj_new;
      }
    }
    if (max_delta < cfg.inner_tol) break;
  }
  return b;
}

MixtureParams with_beta_row(const MixtureParams& params, int k, const Vector& b) {
  MixtureParams out = params;
  out.beta.row(k) = b;
  return out;
}

// Proximal-gradient with backtracking for beta_relax != 1. The smooth part
// of F_beta restricted to beta_k has gradient
//   [(1 - beta) t_ik(theta) + beta t_ik(anchor)] r_i x_i / sigma2,
// and only non-decreasing steps are accepted (which is what Lemma 1 needs).
Vector beta_block_proxgrad(int k, const Responsibilities& anchor_resp,
                           const MixtureParams& anchor, double beta_relax,
                           const PenaltySpec& penalty, const Dataset& data,
                           const SolverConfig& cfg) {
  Vector b = anchor.beta.row(k);
  const double mu = penalty.kind == PenaltyKind::None
                        ? 0.0
                        : penalty.lambda(k) * anchor.pi(k);
  const double s2 = anchor.sigma2;
  double col_norm = 0.0;
  for (Eigen::Index j = 0; j < data.p(); ++j)
    col_norm = std::max(col_norm, data.X.col(j).squaredNorm());
  double eta = s2 / std::max(col_norm, 1e-12);

  MixtureParams cur = anchor;
  double f_cur = penalized_objective(cur, anchor, beta_relax, penalty, data);
  for (int it = 0; it < cfg.inner_max_iter; ++it) {
    const Responsibilities cur_resp = responsibilities(cur, data);
    const Vector r = data.y - data.X * b;
    const Vector mix_t = (1.0 - beta_relax) * cur_resp.t.col(k) +
                         beta_relax * anchor_resp.t.col(k);
    const Vector grad = data.X.transpose() * mix_t.cwiseProduct(r) / s2;

    bool accepted = false;
    double step = 0.0;
    while (eta >= 1e-18) {
      Vector cand(b.size());
      for (Eigen::Index j = 0; j < b.size(); ++j)
        cand(j) = coordinate_prox(penalty, k, b(j) + eta * grad(j), 1.0 / eta, mu);
      step = (cand - b).cwiseAbs().maxCoeff();
      if (step == 0.0) break;
      MixtureParams trial = with_beta_row(cur, k, cand);
      const double f_trial = penalized_objective(trial, anchor, beta_relax, penalty, data);
      if (f_trial >= f_cur - 1e-12) {
        b = cand;
        cur = std::move(trial);
        f_cur = f_trial;
        eta *= 2.0;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted || step < cfg.inner_tol) break;
  }
  return b;
}

MixtureParams pi_sigma_block_step(const MixtureParams& current, const Responsibilities& resp,
                                  double beta_relax, const PenaltySpec& penalty,
                                  const Dataset& data, const SolverConfig& cfg) {
  auto [pi_new, s2_new] = cfg.pi_update == PiUpdate::Exact
                              ? pi_sigma_update_exact(resp, current, penalty, data, cfg)
                              : pi_sigma_update_approx(resp, current, data, cfg);
  MixtureParams out = current;
  out.pi = pi_new;
  out.sigma2 = s2_new;
  if (cfg.pi_update == PiUpdate::Approximate) return out;  // non-monotone by design
  if (beta_relax <= 1.0) return out;  // the EM minorizer step is an F_beta ascent here

  // beta_relax > 1: accept the proposal only if F_beta does not decrease,
  // backtracking along the segment toward the incumbent otherwise.
  const double f_old = penalized_loglik(current, penalty, data);
  for (double step = 1.0; step >= 1e-12; step *= 0.5) {
    MixtureParams cand = current;
    cand.pi = (1.0 - step) * current.pi + step * pi_new;
    cand.sigma2 = std::exp((1.0 - step) * std::log(current.sigma2) +
                           step * std::log(s2_new));
    if (penalized_objective(cand, current, beta_relax, penalty, data) >= f_old - 1e-12)
      return cand;
  }
  return current;  // incumbent is (numerically) block-stationary
}

MixtureParams block_step_core(const MixtureParams& current, const Responsibilities& resp,
                              BlockIndex block, double beta_relax, const PenaltySpec& penalty,
                              const Dataset& data, const SolverConfig& cfg) {
  if (block.is_pi_and_sigma())
    return pi_sigma_block_step(current, resp, beta_relax, penalty, data, cfg);
  const int k = block.beta_component();
  if (k < 0 || k >= current.k()) throw Error("kpp_block_step: block index out of range");
  if (current.pi(k) == 0.0) return current;  // block objective is constant
  const Vector b = beta_relax == 1.0
                       ? beta_block_cd(k, resp, current, penalty, data, cfg)
                       : beta_block_proxgrad(k, resp, current, beta_relax, penalty, data, cfg);
  return with_beta_row(current, k, b);
}

}  // namespace

std::pair<Vector, double> pi_sigma_update_exact(const Responsibilities& resp,
                                                const MixtureParams& params,
                                                const PenaltySpec& penalty,
                                                const Dataset& data,
                                                const SolverConfig& cfg) {
  const Vector nk = resp.t.colwise().sum();
  if (std::abs(nk.sum() - static_cast<double>(data.n())) > 1e-6)
    throw Error("pi update: responsibilities are not row-stochastic");
  const Vector c = component_weights(penalty, params.beta);
  const double mu = solve_pi_multiplier(nk, c);
  Vector pi = Vector::Zero(params.k());
  for (Eigen::Index k = 0; k < params.k(); ++k)
    if (nk(k) > 0.0) pi(k) = nk(k) / (mu + c(k));
  pi /= pi.sum();
  return {pi, sigma2_closed_form(resp, params.beta, data, cfg.sigma2_floor)};
}

std::pair<Vector, double> pi_sigma_update_approx(const Responsibilities& resp,
                                                 const MixtureParams& params,
                                                 const Dataset& data,
                                                 const SolverConfig& cfg) {
  Vector pi = resp.t.colwise().sum() / static_cast<double>(data.n());
  pi /= pi.sum();
  return {pi, sigma2_closed_form(resp, params.beta, data, cfg.sigma2_floor)};
}

Vector beta_block_update(int k, const Responsibilities& resp, const MixtureParams& params,
                         double beta_relax, const PenaltySpec& penalty, const Dataset& data,
                         const SolverConfig& cfg) {
  if (beta_relax <= 0.0) throw Error("beta_block_update: beta_relax must be positive");
  if (params.pi(k) == 0.0 && beta_relax == 1.0) return params.beta.row(k);
  if (beta_relax == 1.0) return beta_block_cd(k, resp, params, penalty, data, cfg);
  return beta_block_proxgrad(k, resp, params, beta_relax, penalty, data, cfg);
}

MixtureParams kpp_block_step(const MixtureParams& current, BlockIndex block,
                             double beta_relax, const PenaltySpec& penalty,
                             const Dataset& data, const SolverConfig& cfg) {
  current.validate();
  if (beta_relax <= 0.0) throw Error("kpp_block_step: beta_relax must be positive");
  const Responsibilities resp = responsibilities(current, data);
  MixtureParams next = block_step_core(current, resp, block, beta_relax, penalty, data, cfg);
  if (!(cfg.pi_update == PiUpdate::Approximate && block.is_pi_and_sigma())) {
    const double gain = penalized_loglik(next, penalty, data) -
                        penalized_loglik(current, penalty, data);
    const double prox = kl_from_responsibilities(responsibilities(next, data), resp);
    if (gain < beta_relax * prox - 1e-6)
      throw InnerSolverError("kpp_block_step: block " + block.name() +
                             " failed to produce a non-decreasing step");
  }
  return next;
}

MixtureParams penalized_em_step(const MixtureParams& current, const PenaltySpec& penalty,
                                const Dataset& data, const SolverConfig& cfg) {
  const Responsibilities resp = responsibilities(current, data);
  MixtureParams next = current;
  for (Eigen::Index k = 0; k < current.k(); ++k) {
    if (current.pi(k) == 0.0) continue;
    next.beta.row(k) =
        beta_block_cd(static_cast<int>(k), resp, current, penalty, data, cfg);
  }
  auto [pi_new, s2_ignored] = pi_sigma_update_exact(resp, next, penalty, data, cfg);
  (void)s2_ignored;
  next.pi = pi_new;
  next.sigma2 = sigma2_closed_form(resp, next.beta, data, cfg.sigma2_floor);
  return next;
}

MixtureParams initial_params(const Dataset& data, int K, const InitStrategy& strategy) {
  data.validate();
  if (K < 1) throw InvalidInitError("initial_params: need K >= 1");
  const Eigen::Index n = data.n(), P = data.p();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return data.y(a) < data.y(b); });

  MixtureParams init;
  init.pi = Vector::Zero(K);
  init.beta = Matrix::Zero(K, P);
  double sse = 0.0;
  Eigen::Index start = 0;
  for (int k = 0; k < K; ++k) {
    const Eigen::Index len = n / K + (k < static_cast<int>(n % K) ? 1 : 0);
    const Eigen::Index m = std::max<Eigen::Index>(len, 1);
    Matrix Xs(m, P);
    Vector ys(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index row = order[std::min(start + i, n - 1)];
      Xs.row(i) = data.X.row(row);
      ys(i) = data.y(row);
    }
    start += len;
    const Matrix A = Xs.transpose() * Xs + 1e-8 * Matrix::Identity(P, P);
    init.beta.row(k) = A.ldlt().solve(Xs.transpose() * ys);
    const Vector r = ys - Xs * init.beta.row(k).transpose();
    sse += r.squaredNorm();
    init.pi(k) = static_cast<double>(len) / static_cast<double>(n);
  }
  if (strategy.pi0) {
    if (strategy.pi0->size() != K)
      throw InvalidInitError("initial_params: pi0 length must equal K");
    init.pi = *strategy.pi0;
  }
  init.pi /= init.pi.sum();
  init.sigma2 = std::max(sse / static_cast<double>(n), 1e-8);
  init.validate();
  return init;
}

FitResult fit(const Dataset& data, int K, const MixtureParams& init,
              const PenaltySpec& penalty, const SolverConfig& cfg) {
  try {
    init.validate();
  } catch (const Error& e) {
    throw InvalidInitError(std::string("fit: invalid initial parameters: ") + e.what());
  }
  if (init.k() != K) throw InvalidInitError("fit: init has wrong number of components");
  data.validate();
  cfg.validate();
  penalty.validate(K);
  if (init.p() != data.p()) throw InvalidInitError("fit: init/covariate dimension mismatch");

  const auto t0 = std::chrono::steady_clock::now();
  MixtureParams theta = init;
  double f = penalized_loglik(theta, penalty, data);

  FitResult result;
  result.trace.initial_objective = f;
  result.trace.initial_snapshot = theta.flatten();

  bool converged = false;
  int sweeps = 0;
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    const double beta_relax = cfg.schedule.value(sweep);
    const Vector before = theta.flatten();
    const double f_before = f;
    for (int blk = 0; blk <= K; ++blk) {
      const BlockIndex block =
          blk == 0 ? BlockIndex::pi_and_sigma() : BlockIndex::beta(blk);
      const Responsibilities resp = responsibilities(theta, data);
      MixtureParams next =
          block_step_core(theta, resp, block, beta_relax, penalty, data, cfg);
      const double prox = kl_from_responsibilities(responsibilities(next, data), resp);
      const double f_next = penalized_loglik(next, penalty, data);
      const bool monotone_path =
          !(cfg.pi_update == PiUpdate::Approximate && block.is_pi_and_sigma());
      if (monotone_path && f_next - f < beta_relax * prox - 1e-6)
        throw InnerSolverError("fit: block " + block.name() + " decreased the objective at sweep " +
                               std::to_string(sweep));
      theta = std::move(next);
      f = f_next;
      TraceRow row;
      row.sweep = sweep;
      row.block = block;
      row.beta_relax = beta_relax;
      row.objective = f;
      row.proximal = prox;
      row.min_pi = theta.pi.minCoeff();
      if (cfg.keep_snapshots) row.snapshot = theta.flatten();
      row.elapsed_sec =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.trace.rows.push_back(std::move(row));
    }
    sweeps = sweep + 1;
    const double dparam = (theta.flatten() - before).cwiseAbs().maxCoeff();
    const double dobj = std::abs(f - f_before);
    if (dparam < cfg.tol_param && dobj < cfg.tol_objective) {
      converged = true;
      break;
    }
  }
  result.params = std::move(theta);
  result.converged = converged;
  result.sweeps = sweeps;
  return result;
}

FitResult fit(const Dataset& data, int K, const InitStrategy& strategy,
              const PenaltySpec& penalty, const SolverConfig& cfg) {
  const MixtureParams base = initial_params(data, K, strategy);
  if (strategy.n_starts <= 1) return fit(data, K, base, penalty, cfg);

  FitResult best;
  double best_f = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < strategy.n_starts; ++s) {
    MixtureParams start = base;
    if (s > 0) {
      auto rng = stream_rng(strategy.seed, "multistart", static_cast<std::uint64_t>(s));
      std::normal_distribution<double> noise(0.0, strategy.perturb_scale);
      for (Eigen::Index r = 0; r < start.beta.rows(); ++r)
        for (Eigen::Index c = 0; c < start.beta.cols(); ++c) start.beta(r, c) += noise(rng);
    }
    FitResult res = fit(data, K, start, penalty, cfg);
    const double f = penalized_loglik(res.params, penalty, data);
    if (f > best_f) {
      best_f = f;
      best = std::move(res);
    }
  }
  return best;
}

}  // namespace kpp

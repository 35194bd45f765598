#pragma once

#include "kpp/model.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace kpp {

/// Relaxation schedule for the proximal term. The limit must stay positive
/// for the stationarity theory to apply.
struct BetaSchedule {
  enum class Kind { Constant, GeometricDecay };
  Kind kind = Kind::Constant;
  double beta_star = 1.0;  // Constant value
  double beta0 = 1.0;      // GeometricDecay start
  double rho = 0.5;        // GeometricDecay ratio
  double beta_min = 0.1;   // GeometricDecay floor (the positive limit)

  static BetaSchedule constant(double beta_star);
  static BetaSchedule geometric(double beta0, double rho, double beta_min);
  double value(int sweep) const;
  void validate() const;
};

enum class PiUpdate { Exact, Approximate };

struct SolverConfig {
  BetaSchedule schedule;
  PiUpdate pi_update = PiUpdate::Exact;
  int max_sweeps = 500;
  double tol_param = 1e-8;
  double tol_objective = 1e-10;
  double sigma2_floor = 1e-8;
  int inner_max_iter = 200;
  double inner_tol = 1e-12;
  long seed = 0;
  bool keep_snapshots = true;  // store a parameter snapshot on every trace row

  void validate() const;
};

double beta_schedule_value(const SolverConfig& cfg, int sweep);

/// One recorded block step.
struct TraceRow {
  int sweep = 0;
  BlockIndex block = BlockIndex::pi_and_sigma();
  double beta_relax = 1.0;
  double objective = 0.0;  // F = l_y - p_n after the step
  double proximal = 0.0;   // I_y between the new point and the step's anchor
  double min_pi = 0.0;
  Vector snapshot;  // flattened params, empty when thinned
  double elapsed_sec = 0.0;
};

struct FitTrace {
  double initial_objective = 0.0;
  Vector initial_snapshot;
  std::vector<TraceRow> rows;
};

struct FitResult {
  MixtureParams params;
  FitTrace trace;
  bool converged = false;
  int sweeps = 0;
};

/// Deterministic initialization recipe: responsibilities seeded by
/// quantile-sliced assignment of y, optional pi override and seeded
/// multi-start perturbations of beta.
struct InitStrategy {
  long seed = 0;
  std::optional<Vector> pi0;
  int n_starts = 1;
  double perturb_scale = 0.5;
};

/// Exact pi update: maximizes sum_k n_k log pi_k - sum_k pi_k c_k over the
/// simplex via the Lagrange-multiplier root equation, then sets sigma2 in
/// closed form from the anchor responsibilities and current beta.
std::pair<Vector, double> pi_sigma_update_exact(const Responsibilities& resp,
                                                const MixtureParams& params,
                                                const PenaltySpec& penalty,
                                                const Dataset& data,
                                                const SolverConfig& cfg);

/// Khalili-Chen shortcut pi_k = n_k / n, same closed-form sigma2.
std::pair<Vector, double> pi_sigma_update_approx(const Responsibilities& resp,
                                                 const MixtureParams& params,
                                                 const Dataset& data,
                                                 const SolverConfig& cfg);

/// Block update for beta_k. At beta_relax = 1 this is exact cyclic
/// coordinate descent with the closed-form scalar prox (weighted least
/// squares when the penalty weight vanishes); otherwise proximal-gradient
/// steps with backtracking that only accepts non-decreasing steps.
Vector beta_block_update(int k, const Responsibilities& resp, const MixtureParams& params,
                         double beta_relax, const PenaltySpec& penalty, const Dataset& data,
                         const SolverConfig& cfg);

/// One space-alternating KPP step: maximizes l_y - p_n - beta_relax * I_y
/// over the given block, all other coordinates frozen.
MixtureParams kpp_block_step(const MixtureParams& current, BlockIndex block,
                             double beta_relax, const PenaltySpec& penalty,
                             const Dataset& data, const SolverConfig& cfg);

/// One full (non-alternating) KPP step at beta = 1: a single E-step followed
/// by the joint penalized M-step over all blocks. With penalty = None this
/// is exactly one textbook EM step.
MixtureParams penalized_em_step(const MixtureParams& current, const PenaltySpec& penalty,
                                const Dataset& data, const SolverConfig& cfg);

MixtureParams initial_params(const Dataset& data, int K, const InitStrategy& strategy);

FitResult fit(const Dataset& data, int K, const MixtureParams& init,
              const PenaltySpec& penalty, const SolverConfig& cfg);
FitResult fit(const Dataset& data, int K, const InitStrategy& strategy,
              const PenaltySpec& penalty, const SolverConfig& cfg);

}  // namespace kpp

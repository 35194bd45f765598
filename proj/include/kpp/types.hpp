#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace kpp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Everything thrown by the library derives from Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteError : Error {
  using Error::Error;
};
struct DegenerateRowError : Error {
  using Error::Error;
};
struct OutsideDomainError : Error {
  using Error::Error;
};
struct NotDifferentiableError : Error {
  using Error::Error;
};
struct InnerSolverError : Error {
  using Error::Error;
};
struct RootBracketError : Error {
  using Error::Error;
};
struct InvalidInitError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct ConstantColumnError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

/// Observed responses y_i and covariate rows x_i.
struct Dataset {
  Vector y;  // n
  Matrix X;  // n x P, row i is x_i

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }
  void validate() const;
};

/// Full parameter vector of the mixture of regressions: mixing weights,
/// per-component regression coefficients and the shared variance.
struct MixtureParams {
  Vector pi;      // K, on the probability simplex (boundary allowed)
  Matrix beta;    // K x P, row k is beta_k
  double sigma2 = 1.0;

  Eigen::Index k() const { return pi.size(); }
  Eigen::Index p() const { return beta.cols(); }
  void validate() const;

  // Flattening order: pi (K), beta row-major (K*P), sigma2.
  Vector flatten() const;
  static MixtureParams unflatten(const Vector& v, Eigen::Index K, Eigen::Index P);
};

/// Posterior component memberships t_ik; each row sums to 1.
struct Responsibilities {
  Matrix t;  // n x K

  void validate() const;
};

/// One block of the K+1 cyclic decomposition: block 0 is (pi, sigma2),
/// blocks 1..K are the beta_k.
class BlockIndex {
 public:
  static BlockIndex pi_and_sigma() { return BlockIndex(0); }
  static BlockIndex beta(int k) {  // k is 1-based
    if (k < 1) throw Error("BlockIndex: beta component must be >= 1");
    return BlockIndex(k);
  }

  bool is_pi_and_sigma() const { return idx_ == 0; }
  /// 0-based component index; only valid when !is_pi_and_sigma().
  int beta_component() const { return idx_ - 1; }
  int raw() const { return idx_; }
  std::string name() const;

  bool operator==(const BlockIndex& o) const { return idx_ == o.idx_; }

 private:
  explicit BlockIndex(int idx) : idx_(idx) {}
  int idx_;
};

}  // namespace kpp

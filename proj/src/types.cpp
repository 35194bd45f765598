#include "kpp/types.hpp"

namespace kpp {

void Dataset::validate() const {
  if (y.size() < 1) throw Error("Dataset: need n >= 1");
  if (X.cols() < 1) throw Error("Dataset: need P >= 1");
  if (X.rows() != y.size()) throw Error("Dataset: X rows must match y length");
  if (!y.allFinite() || !X.allFinite()) throw NonFiniteError("Dataset: non-finite entry");
}

void MixtureParams::validate() const {
  if (pi.size() < 1) throw Error("MixtureParams: need K >= 1");
  if (beta.rows() != pi.size()) throw Error("MixtureParams: beta must have K rows");
  if (beta.cols() < 1) throw Error("MixtureParams: need P >= 1");
  if (!pi.allFinite() || !beta.allFinite() || !std::isfinite(sigma2))
    throw NonFiniteError("MixtureParams: non-finite entry");
  if (sigma2 <= 0.0) throw Error("MixtureParams: sigma2 must be positive");
  if (pi.minCoeff() < 0.0) throw Error("MixtureParams: pi entries must be nonnegative");
  if (std::abs(pi.sum() - 1.0) > 1e-12) throw Error("MixtureParams: pi must sum to 1");
}

Vector MixtureParams::flatten() const {
  const Eigen::Index K = k(), P = p();
  Vector v(K + K * P + 1);
  v.head(K) = pi;
  for (Eigen::Index r = 0; r < K; ++r) v.segment(K + r * P, P) = beta.row(r);
  v(K + K * P) = sigma2;
  return v;
}

MixtureParams MixtureParams::unflatten(const Vector& v, Eigen::Index K, Eigen::Index P) {
  if (v.size() != K + K * P + 1) throw Error("MixtureParams::unflatten: size mismatch");
  MixtureParams out;
  out.pi = v.head(K);
  out.beta.resize(K, P);
  for (Eigen::Index r = 0; r < K; ++r) out.beta.row(r) = v.segment(K + r * P, P);
  out.sigma2 = v(K + K * P);
  return out;
}

void Responsibilities::validate() const {
  if (t.rows() < 1 || t.cols() < 1) throw Error("Responsibilities: empty matrix");
  if (!t.allFinite()) throw NonFiniteError("Responsibilities: non-finite entry");
  if (t.minCoeff() < 0.0 || t.maxCoeff() > 1.0)
    throw Error("Responsibilities: entries must lie in [0,1]");
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    if (std::abs(t.row(i).sum() - 1.0) > 1e-10)
      throw Error("Responsibilities: row " + std::to_string(i) + " does not sum to 1");
  }
}

std::string BlockIndex::name() const {
  if (is_pi_and_sigma()) return "pi_sigma";
  return "beta_" + std::to_string(idx_);
}

}  // namespace kpp

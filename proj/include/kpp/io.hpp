#pragma once

#include "kpp/data.hpp"
#include "kpp/diagnostics.hpp"
#include "kpp/solver.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kpp {

using Json = nlohmann::json;

// JSON schemas used by the CLI and by downstream tooling.
Json params_to_json(const MixtureParams& params);
MixtureParams params_from_json(const Json& j);
Json kkt_to_json(const KktReport& report);
Json ledger_to_json(const LedgerReport& report);
Json comparison_to_json(const RunComparison& cmp);

MixtureParams load_params_json(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

/// trace.csv with the fixed column order
/// sweep,block,beta_k,objective,proximal,min_pi,dist_to_final.
std::string trace_to_csv(const FitTrace& trace, const MixtureParams& final_params);

std::string dataset_to_csv(const Dataset& data, const std::string& response_name,
                           const std::vector<std::string>& covariate_names);
std::string labels_to_csv(const std::vector<int>& labels);

/// Flat key=value configuration with dotted section prefixes
/// (e.g. solver.max_sweeps=500). '#' starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  bool has_section(const std::string& prefix) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_vector(const std::string& key) const;
  /// Rows separated by ';', entries by ','.
  Matrix get_matrix(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
};

// Builders from configuration sections. All of them validate fully before
// returning, so commands can fail fast without side effects.
SimSpec sim_spec_from_config(const KeyValueConfig& cfg);
PenaltySpec penalty_from_config(const KeyValueConfig& cfg, Eigen::Index K, int n_scale);
/// Reads keys under `prefix` (e.g. "solver."), falling back to "solver.".
SolverConfig solver_from_config(const KeyValueConfig& cfg, const std::string& prefix);
InitStrategy init_from_config(const KeyValueConfig& cfg);

}  // namespace kpp

#include "kpp/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace kpp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> vec_to_std(const Vector& v) {
  return {v.data(), v.data() + v.size()};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError("config key '" + key + "': bad numeric entry '" + raw + "'");
  return v;
}

Vector std_to_vec(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace

Json params_to_json(const MixtureParams& params) {
  Json j;
  j["pi"] = vec_to_std(params.pi);
  std::vector<std::vector<double>> beta;
  for (Eigen::Index k = 0; k < params.k(); ++k) {
    const Vector row = params.beta.row(k);
    beta.push_back(vec_to_std(row));
  }
  j["beta"] = beta;
  j["sigma2"] = params.sigma2;
  return j;
}

MixtureParams params_from_json(const Json& j) {
  MixtureParams p;
  p.pi = std_to_vec(j.at("pi").get<std::vector<double>>());
  const auto beta = j.at("beta").get<std::vector<std::vector<double>>>();
  if (beta.empty()) throw ParseError("params json: empty beta");
  p.beta.resize(static_cast<Eigen::Index>(beta.size()),
                static_cast<Eigen::Index>(beta.front().size()));
  for (std::size_t k = 0; k < beta.size(); ++k) {
    if (beta[k].size() != beta.front().size())
      throw ParseError("params json: ragged beta rows");
    p.beta.row(static_cast<Eigen::Index>(k)) = std_to_vec(beta[k]);
  }
  p.sigma2 = j.at("sigma2").get<double>();
  p.validate();
  return p;
}

Json kkt_to_json(const KktReport& report) {
  Json j;
  std::vector<std::vector<double>> rb;
  for (Eigen::Index k = 0; k < report.residual_beta.rows(); ++k) {
    const Vector row = report.residual_beta.row(k);
    rb.push_back(vec_to_std(row));
  }
  j["residual_beta"] = rb;
  j["residual_pi"] = report.residual_pi;
  j["residual_sigma2"] = report.residual_sigma2;
  j["active_components"] = report.active_components;
  j["max_residual"] = report.max_residual;
  return j;
}

Json ledger_to_json(const LedgerReport& report) {
  Json j;
  j["monotone_ok"] = report.monotone_ok;
  j["worst_violation"] = report.worst_violation;
  j["proximal_final"] = report.proximal_final;
  j["iterate_gap_final"] = report.iterate_gap_final;
  return j;
}

Json comparison_to_json(const RunComparison& cmp) {
  Json j;
  j["objective_plain"] = cmp.objective_a;
  j["objective_approx"] = cmp.objective_b;
  j["kkt_plain"] = cmp.kkt_a;
  j["kkt_approx"] = cmp.kkt_b;
  j["param_distance"] = cmp.param_distance;
  return j;
}

MixtureParams load_params_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
    return params_from_json(j);
  } catch (const Json::exception& e) {
    throw ParseError("invalid params json '" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error("write failed for '" + path + "'");
}

std::string trace_to_csv(const FitTrace& trace, const MixtureParams& final_params) {
  const Vector final_flat = final_params.flatten();
  std::ostringstream out;
  out << "sweep,block,beta_k,objective,proximal,min_pi,dist_to_final\n";
  for (const TraceRow& row : trace.rows) {
    const double dist =
        row.snapshot.size() == final_flat.size() ? (row.snapshot - final_flat).norm() : -1.0;
    out << row.sweep << ',' << row.block.name() << ',' << fmt(row.beta_relax) << ','
        << fmt(row.objective) << ',' << fmt(row.proximal) << ',' << fmt(row.min_pi) << ','
        << fmt(dist) << '\n';
  }
  return out.str();
}

std::string dataset_to_csv(const Dataset& data, const std::string& response_name,
                           const std::vector<std::string>& covariate_names) {
  if (static_cast<Eigen::Index>(covariate_names.size()) != data.p())
    throw Error("dataset_to_csv: covariate name count mismatch");
  std::ostringstream out;
  out << response_name;
  for (const auto& name : covariate_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << fmt(data.y(i));
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << fmt(data.X(i, j));
    out << '\n';
  }
  return out.str();
}

std::string labels_to_csv(const std::vector<int>& labels) {
  std::ostringstream out;
  out << "label\n";
  for (int z : labels) out << z << '\n';
  return out.str();
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b2 = s.find_first_not_of(" \t");
      const auto e2 = s.find_last_not_of(" \t");
      return b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has_section(const std::string& prefix) const {
  auto it = values_.lower_bound(prefix);
  return it != values_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
  return v;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long KeyValueConfig::get_long(const std::string& key) const {
  const double v = get_double(key);
  const long l = static_cast<long>(v);
  if (static_cast<double>(l) != v)
    throw ConfigError("config key '" + key + "': expected an integer");
  return l;
}

long KeyValueConfig::get_long(const std::string& key, long fallback) const {
  return has(key) ? get_long(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + s + "'");
}

std::vector<double> KeyValueConfig::get_vector(const std::string& key) const {
  const std::string s = get_string(key);
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_number(key, cell));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty vector");
  return out;
}

Matrix KeyValueConfig::get_matrix(const std::string& key) const {
  const std::string s = get_string(key);
  std::vector<std::vector<double>> rows;
  std::stringstream ss(s);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<double> r;
    std::stringstream rs(row);
    std::string cell;
    while (std::getline(rs, cell, ',')) r.push_back(parse_number(key, cell));
    if (r.empty()) throw ConfigError("config key '" + key + "': empty matrix row");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ConfigError("config key '" + key + "': empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw ConfigError("config key '" + key + "': ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

SimSpec sim_spec_from_config(const KeyValueConfig& cfg) {
  SimSpec spec;
  spec.n = static_cast<int>(cfg.get_long("sim.n"));
  spec.K = static_cast<int>(cfg.get_long("sim.k"));
  spec.seed = cfg.get_long("sim.seed", 0);
  spec.true_params.pi = std_to_vec(cfg.get_vector("sim.pi"));
  spec.true_params.beta = cfg.get_matrix("sim.beta");
  spec.true_params.sigma2 = cfg.get_double("sim.sigma2", 1.0);
  spec.P = static_cast<int>(spec.true_params.beta.cols());
  if (cfg.has("sim.p") && cfg.get_long("sim.p") != spec.P)
    throw ConfigError("sim.p contradicts the number of sim.beta columns");
  spec.validate();
  return spec;
}

PenaltySpec penalty_from_config(const KeyValueConfig& cfg, Eigen::Index K, int n_scale) {
  const std::string kind = cfg.get_string("penalty.kind", "none");
  PenaltySpec spec;
  if (kind == "none") {
    spec = PenaltySpec::none(K);
  } else if (kind == "l1" || kind == "scad") {
    std::vector<double> gamma = cfg.has("penalty.gamma")
                                    ? cfg.get_vector("penalty.gamma")
                                    : std::vector<double>{1.0};
    if (gamma.size() == 1) gamma.assign(static_cast<std::size_t>(K), gamma[0]);
    spec.kind = kind == "l1" ? PenaltyKind::L1 : PenaltyKind::Scad;
    spec.gamma = std_to_vec(gamma);
    spec.a = cfg.get_double("penalty.a", 10.0);
    std::vector<double> lambda = cfg.has("penalty.lambda")
                                     ? cfg.get_vector("penalty.lambda")
                                     : std::vector<double>{1.0};
    if (lambda.size() == 1) lambda.assign(static_cast<std::size_t>(K), lambda[0]);
    spec.lambda = std_to_vec(lambda);
    spec.n_scale = static_cast<int>(cfg.get_long("penalty.n_scale", n_scale));
  } else {
    throw ConfigError("penalty.kind must be one of none|l1|scad");
  }
  spec.guard_enabled = cfg.get_bool("penalty.guard", false);
  spec.guard_threshold = cfg.get_double("penalty.guard_threshold", 1e6);
  spec.validate(K);
  return spec;
}

SolverConfig solver_from_config(const KeyValueConfig& cfg, const std::string& prefix) {
  auto key = [&](const std::string& name) {
    const std::string k = prefix + name;
    return cfg.has(k) ? k : "solver." + name;
  };
  SolverConfig sc;
  const std::string sched = cfg.get_string(key("schedule"), "constant");
  if (sched == "constant") {
    sc.schedule = BetaSchedule::constant(cfg.get_double(key("beta"), 1.0));
  } else if (sched == "geometric") {
    sc.schedule = BetaSchedule::geometric(cfg.get_double(key("beta0"), 1.0),
                                          cfg.get_double(key("rho"), 0.5),
                                          cfg.get_double(key("beta_min"), 0.1));
  } else {
    throw ConfigError("schedule must be constant|geometric");
  }
  const std::string pu = cfg.get_string(key("pi_update"), "exact");
  if (pu == "exact")
    sc.pi_update = PiUpdate::Exact;
  else if (pu == "approximate")
    sc.pi_update = PiUpdate::Approximate;
  else
    throw ConfigError("pi_update must be exact|approximate");
  sc.max_sweeps = static_cast<int>(cfg.get_long(key("max_sweeps"), 500));
  sc.tol_param = cfg.get_double(key("tol_param"), 1e-8);
  sc.tol_objective = cfg.get_double(key("tol_objective"), 1e-10);
  sc.sigma2_floor = cfg.get_double(key("sigma2_floor"), 1e-8);
  sc.inner_max_iter = static_cast<int>(cfg.get_long(key("inner_max_iter"), 200));
  sc.inner_tol = cfg.get_double(key("inner_tol"), 1e-12);
  sc.seed = cfg.get_long(key("seed"), 0);
  sc.validate();
  return sc;
}

InitStrategy init_from_config(const KeyValueConfig& cfg) {
  InitStrategy init;
  init.seed = cfg.get_long("init.seed", 0);
  if (cfg.has("init.pi")) init.pi0 = std_to_vec(cfg.get_vector("init.pi"));
  init.n_starts = static_cast<int>(cfg.get_long("init.n_starts", 1));
  init.perturb_scale = cfg.get_double("init.perturb_scale", 0.5);
  if (init.n_starts < 1) throw ConfigError("init.n_starts must be >= 1");
  return init;
}

}  // namespace kpp

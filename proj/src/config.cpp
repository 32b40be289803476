#include "bvm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "bvm/csv.hpp"
#include "bvm/error.hpp"

namespace bvm {

namespace {

[[noreturn]] void key_error(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) key_error(key, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    key_error(key, "expected a nonnegative integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) key_error(key, "expected an integer, got '" + v + "'");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& item : split(v, ',')) out.push_back(to_double(key, item));
  if (out.empty()) key_error(key, "empty list");
  return out;
}

Interval to_interval(const std::string& key, const std::string& v) {
  const std::vector<double> xs = to_list(key, v);
  if (xs.size() != 2) key_error(key, "expected 'lo,hi'");
  return {xs[0], xs[1]};
}

template <class E>
E to_enum(const std::string& key, const std::string& v, const std::map<std::string, E>& names) {
  const auto it = names.find(v);
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [n, _] : names) allowed += (allowed.empty() ? "" : "|") + n;
    key_error(key, "unknown value '" + v + "' (expected " + allowed + ")");
  }
  return it->second;
}

template <class E>
std::string enum_name(E value, const std::map<std::string, E>& names) {
  for (const auto& [n, e] : names)
    if (e == value) return n;
  return "?";
}

const std::map<std::string, ExperimentKind> kExperiments{{"coverage", ExperimentKind::Coverage},
                                                         {"rates", ExperimentKind::Rates},
                                                         {"tightness", ExperimentKind::Tightness},
                                                         {"concentration", ExperimentKind::Concentration},
                                                         {"conjugacy", ExperimentKind::Conjugacy}};
const std::map<std::string, OperatorKind> kOperators{
    {"psido", OperatorKind::Psido}, {"bvp", OperatorKind::Bvp}, {"heat", OperatorKind::Heat}};
const std::map<std::string, TruthKind> kTruths{
    {"sobolev", TruthKind::Sobolev}, {"bump", TruthKind::Bump}, {"modes", TruthKind::Modes}};
const std::map<std::string, FunctionalKind> kFunctionals{
    {"bump", FunctionalKind::Bump}, {"mode", FunctionalKind::Mode}, {"representer", FunctionalKind::Representer}};

// Shortest representation that reads back to the same double.
std::string echo_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (double x : xs) out += (out.empty() ? "" : ",") + echo_double(x);
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"experiment", [](auto& c, auto& k, auto& v) { c.experiment = to_enum(k, v, kExperiments); }},
      {"operator", [](auto& c, auto& k, auto& v) { c.op = to_enum(k, v, kOperators); }},
      {"operator.t", [](auto& c, auto& k, auto& v) { c.op_t = to_double(k, v); }},
      {"operator.coefficient", [](auto& c, auto&, auto& v) { c.op_coefficient = v; }},
      {"operator.T", [](auto& c, auto& k, auto& v) { c.op_T = to_double(k, v); }},
      {"prior.r", [](auto& c, auto& k, auto& v) { c.prior_r = to_double(k, v); }},
      {"prior.amplitude", [](auto& c, auto& k, auto& v) { c.prior_amplitude = to_double(k, v); }},
      {"truth.kind", [](auto& c, auto& k, auto& v) { c.truth = to_enum(k, v, kTruths); }},
      {"truth.alpha", [](auto& c, auto& k, auto& v) { c.truth_alpha = to_double(k, v); }},
      {"truth.seed", [](auto& c, auto& k, auto& v) { c.truth_seed = to_u64(k, v); }},
      {"truth.modes",
       [](auto& c, auto& k, auto& v) {
         c.truth_modes.clear();
         for (const std::string& item : split(v, ',')) {
           const auto colon = item.find(':');
           if (colon == std::string::npos) key_error(k, "expected 'mode:value' pairs");
           c.truth_modes.emplace_back(to_u64(k, trim(item.substr(0, colon))), to_double(k, trim(item.substr(colon + 1))));
         }
       }},
      {"functional.kind", [](auto& c, auto& k, auto& v) { c.functional = to_enum(k, v, kFunctionals); }},
      {"functional.support", [](auto& c, auto& k, auto& v) { c.functional_support = to_interval(k, v); }},
      {"functional.plateau", [](auto& c, auto& k, auto& v) { c.functional_plateau = to_interval(k, v); }},
      {"functional.frequency", [](auto& c, auto& k, auto& v) { c.functional_frequency = to_int(k, v); }},
      {"functional.band", [](auto& c, auto& k, auto& v) { c.functional_band = to_u64(k, v); }},
      {"functional.mode", [](auto& c, auto& k, auto& v) { c.functional_mode = to_u64(k, v); }},
      {"epsilons", [](auto& c, auto& k, auto& v) { c.epsilons = to_list(k, v); }},
      {"n_replicates", [](auto& c, auto& k, auto& v) { c.n_replicates = to_u64(k, v); }},
      {"level", [](auto& c, auto& k, auto& v) { c.level = to_double(k, v); }},
      {"ball_beta", [](auto& c, auto& k, auto& v) { c.ball_beta = to_double(k, v); }},
      {"ball_draws", [](auto& c, auto& k, auto& v) { c.ball_draws = to_u64(k, v); }},
      {"n_modes", [](auto& c, auto& k, auto& v) { c.n_modes = to_u64(k, v); }},
      {"oversample", [](auto& c, auto& k, auto& v) { c.oversample = to_u64(k, v); }},
      {"master_seed", [](auto& c, auto& k, auto& v) { c.master_seed = to_u64(k, v); }},
      {"output_path", [](auto& c, auto&, auto& v) { c.output_path = v; }},
      {"ambient_exponent", [](auto& c, auto& k, auto& v) { c.ambient_exponent = to_double(k, v); }},
      {"rates.norm_exponent", [](auto& c, auto& k, auto& v) { c.rates_norm_exponent = to_double(k, v); }},
      {"tightness.betas", [](auto& c, auto& k, auto& v) { c.tightness_betas = to_list(k, v); }},
      {"concentration.deltas", [](auto& c, auto& k, auto& v) { c.concentration_deltas = to_list(k, v); }},
      {"concentration.mc_samples", [](auto& c, auto& k, auto& v) { c.concentration_mc_samples = to_u64(k, v); }},
      {"conjugacy.trials", [](auto& c, auto& k, auto& v) { c.conjugacy_trials = to_u64(k, v); }},
  };
  return table;
}

}  // namespace

double ExperimentConfig::resolved_ambient_exponent() const {
  if (ambient_exponent) return *ambient_exponent;
  return op == OperatorKind::Psido ? -op_t : -2.0;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << "config line " << lineno << ": expected 'key = value'";
      throw ConfigError(os.str());
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) key_error(key, "unknown key");
    if (!seen.insert(key).second) key_error(key, "given more than once");
    if (value.empty()) key_error(key, "empty value");
    it->second(cfg, key, value);
  }
  if (!seen.count("experiment")) key_error("experiment", "missing");
  if (!seen.count("operator")) key_error("operator", "missing");
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

void validate_config(const ExperimentConfig& c) {
  if (c.n_modes < 1) key_error("n_modes", "must be >= 1");
  if (c.oversample < 4) key_error("oversample", "must be >= 4");
  if (c.op == OperatorKind::Psido && c.n_modes % 2 == 0)
    key_error("n_modes", "the psido operator lives on the torus and needs an odd mode count");
  if (c.op == OperatorKind::Psido && !(c.op_t >= 0.0)) key_error("operator.t", "must be >= 0");
  if (c.op == OperatorKind::Heat && !(c.op_T >= 0.0)) key_error("operator.T", "must be >= 0");
  if (c.op == OperatorKind::Bvp) {
    const std::string& s = c.op_coefficient;
    if (s.rfind("sin:", 0) == 0) {
      const std::vector<double> p = to_list("operator.coefficient", s.substr(4));
      if (p.size() != 3) key_error("operator.coefficient", "expected 'sin:a0,a1,freq'");
      if (!(p[0] - std::abs(p[1]) > 0.0)) key_error("operator.coefficient", "ellipticity needs a0 > |a1|");
    } else if (!(to_double("operator.coefficient", s) > 0.0)) {
      key_error("operator.coefficient", "constant coefficient must be positive");
    }
  }
  if (!(c.prior_r > 0.5)) key_error("prior.r", "must satisfy r > d/2 = 0.5");
  if (!(c.prior_amplitude > 0.0)) key_error("prior.amplitude", "must be positive");

  const double t = c.op == OperatorKind::Psido ? c.op_t : 2.0;
  if (c.op != OperatorKind::Heat && !(c.truth_alpha > -t)) key_error("truth.alpha", "must satisfy alpha > -t");
  if (c.truth == TruthKind::Modes) {
    if (c.truth_modes.empty()) key_error("truth.modes", "required when truth.kind = modes");
    for (const auto& [m, _] : c.truth_modes)
      if (m < 1 || m > c.n_modes) key_error("truth.modes", "mode index outside 1..n_modes");
  }

  const Interval s = c.functional_support;
  const Interval p = c.functional_plateau;
  if (!(0.0 < s.lo && s.lo < p.lo && p.lo <= p.hi && p.hi < s.hi && s.hi < 1.0))
    key_error("functional.plateau", "need 0 < support.lo < plateau.lo <= plateau.hi < support.hi < 1");
  if (c.functional_band < 1 || c.functional_band > c.n_modes) key_error("functional.band", "must lie in 1..n_modes");
  if (c.functional_mode < 1 || c.functional_mode > c.n_modes) key_error("functional.mode", "must lie in 1..n_modes");

  for (double e : c.epsilons)
    if (!(e > 0.0)) key_error("epsilons", "entries must be positive");
  if (c.experiment == ExperimentKind::Rates && c.epsilons.size() < 3) key_error("epsilons", "rates need >= 3 entries");
  if (c.experiment == ExperimentKind::Rates && c.op == OperatorKind::Heat)
    key_error("experiment", "rates are defined for the polynomially smoothing operators (psido, bvp)");
  if (c.n_replicates < 1) key_error("n_replicates", "must be >= 1");
  if (!(c.level > 0.0 && c.level < 1.0)) key_error("level", "must lie in (0,1)");
  if (c.ball_beta && !(*c.ball_beta >= 0.0)) key_error("ball_beta", "must be >= 0");
  if (c.ball_draws < 1000) key_error("ball_draws", "must be >= 1000");
  if (c.output_path.empty()) key_error("output_path", "empty");

  if (c.experiment == ExperimentKind::Tightness) {
    if (c.op != OperatorKind::Bvp) key_error("operator", "tightness needs the bvp operator");
    if (c.n_modes < 100) key_error("n_modes", "tightness needs >= 100 modes");
  }
  for (double d : c.concentration_deltas)
    if (!(d > 0.0)) key_error("concentration.deltas", "entries must be positive");
  if (c.concentration_mc_samples < 1000) key_error("concentration.mc_samples", "must be >= 1000");
  if (c.conjugacy_trials < 1) key_error("conjugacy.trials", "must be >= 1");
}

std::vector<std::pair<std::string, std::string>> resolved_entries(const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> out{
      {"experiment", enum_name(c.experiment, kExperiments)},
      {"operator", enum_name(c.op, kOperators)},
      {"operator.t", echo_double(c.op_t)},
      {"operator.coefficient", c.op_coefficient},
      {"operator.T", echo_double(c.op_T)},
      {"prior.r", echo_double(c.prior_r)},
      {"prior.amplitude", echo_double(c.prior_amplitude)},
      {"truth.kind", enum_name(c.truth, kTruths)},
      {"truth.alpha", echo_double(c.truth_alpha)},
      {"truth.seed", std::to_string(c.truth_seed)},
  };
  if (!c.truth_modes.empty()) {
    std::string modes;
    for (const auto& [m, v] : c.truth_modes) modes += (modes.empty() ? "" : ",") + std::to_string(m) + ":" + echo_double(v);
    out.emplace_back("truth.modes", modes);
  }
  out.insert(out.end(), {
                            {"functional.kind", enum_name(c.functional, kFunctionals)},
                            {"functional.support", join({c.functional_support.lo, c.functional_support.hi})},
                            {"functional.plateau", join({c.functional_plateau.lo, c.functional_plateau.hi})},
                            {"functional.frequency", std::to_string(c.functional_frequency)},
                            {"functional.band", std::to_string(c.functional_band)},
                            {"functional.mode", std::to_string(c.functional_mode)},
                            {"epsilons", join(c.epsilons)},
                            {"n_replicates", std::to_string(c.n_replicates)},
                            {"level", echo_double(c.level)},
                        });
  if (c.ball_beta) out.emplace_back("ball_beta", echo_double(*c.ball_beta));
  out.insert(out.end(), {
                            {"ball_draws", std::to_string(c.ball_draws)},
                            {"n_modes", std::to_string(c.n_modes)},
                            {"oversample", std::to_string(c.oversample)},
                            {"master_seed", std::to_string(c.master_seed)},
                            {"output_path", c.output_path},
                            {"ambient_exponent", echo_double(c.resolved_ambient_exponent())},
                            {"rates.norm_exponent", echo_double(c.rates_norm_exponent)},
                            {"tightness.betas", join(c.tightness_betas)},
                            {"concentration.deltas", join(c.concentration_deltas)},
                            {"concentration.mc_samples", std::to_string(c.concentration_mc_samples)},
                            {"conjugacy.trials", std::to_string(c.conjugacy_trials)},
                        });
  return out;
}

const char* to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::Coverage: return "coverage";
    case ExperimentKind::Rates: return "rates";
    case ExperimentKind::Tightness: return "tightness";
    case ExperimentKind::Concentration: return "concentration";
    case ExperimentKind::Conjugacy: return "conjugacy";
  }
  return "?";
}

const char* to_string(OperatorKind k) noexcept {
  switch (k) {
    case OperatorKind::Psido: return "psido";
    case OperatorKind::Bvp: return "bvp";
    case OperatorKind::Heat: return "heat";
  }
  return "?";
}

}  // namespace bvm

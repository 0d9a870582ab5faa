#include "bose2d/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "bose2d/errors.hpp"

namespace bose2d {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

void reject_unknown(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where, line_of(kv.first));
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) throw ConfigError(what + " must be a scalar", line_of(node));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("cannot read " + what + " from '" + node.Scalar() + "'", line_of(node));
  }
}

double positive(const YAML::Node& node, const std::string& what) {
  const auto v = scalar<double>(node, what);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be positive", line_of(node));
  return v;
}

std::size_t count(const YAML::Node& node, const std::string& what) {
  const auto v = scalar<long long>(node, what);
  if (v <= 0) throw ConfigError(what + " must be a positive integer", line_of(node));
  return static_cast<std::size_t>(v);
}

std::vector<double> number_list(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) throw ConfigError(what + " must be a list", line_of(node));
  std::vector<double> out;
  for (const auto& item : node) out.push_back(scalar<double>(item, what + " entry"));
  return out;
}

Mode mode_pair(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence() || node.size() != 2) throw ConfigError(what + " must be a pair [m1, m2]", line_of(node));
  return {scalar<int>(node[0], what), scalar<int>(node[1], what)};
}

void parse_modes(const YAML::Node& node, ExperimentConfig& cfg) {
  if (!node.IsMap()) throw ConfigError("'modes' must be a mapping", line_of(node));
  reject_unknown(node, {"radius", "points"}, "modes");
  if (node["radius"] && node["points"]) throw ConfigError("give either modes.radius or modes.points", line_of(node));
  if (node["radius"]) {
    const auto r = scalar<double>(node["radius"], "modes.radius");
    if (!(r >= 0.0)) throw ConfigError("modes.radius must be >= 0", line_of(node["radius"]));
    cfg.modes = ModeSet::disk(r);
  } else if (node["points"]) {
    const YAML::Node points = node["points"];
    if (!points.IsSequence()) throw ConfigError("modes.points must be a list of pairs", line_of(points));
    std::vector<Mode> modes;
    for (const auto& p : points) modes.push_back(mode_pair(p, "modes.points entry"));
    try {
      cfg.modes = ModeSet::from_modes(std::move(modes));
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line_of(points));
    }
  } else {
    throw ConfigError("modes needs 'radius' or 'points'", line_of(node));
  }
}

void parse_potential(const YAML::Node& node, ExperimentConfig& cfg) {
  if (!node.IsMap()) throw ConfigError("'potential' must be a mapping", line_of(node));
  reject_unknown(node, {"family", "w0", "radius", "alpha", "entries"}, "potential");
  if (!node["family"]) throw ConfigError("potential.family is required", line_of(node));
  const auto family = scalar<std::string>(node["family"], "potential.family");
  auto nonneg = [&](const char* key) {
    if (!node[key]) throw ConfigError(std::string("potential.") + key + " is required for family " + family, line_of(node));
    const auto v = scalar<double>(node[key], std::string("potential.") + key);
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("potential.") + key + " = " + node[key].Scalar() + " must be finite and >= 0",
                        line_of(node[key]));
    }
    return v;
  };
  if (family == "zero") {
    cfg.potential = Potential::zero();
  } else if (family == "constant") {
    cfg.potential = Potential::constant(nonneg("w0"), node["radius"] ? nonneg("radius") : 0.0);
  } else if (family == "gaussian") {
    cfg.potential = Potential::gaussian(nonneg("w0"), nonneg("alpha"));
  } else if (family == "table") {
    const YAML::Node entries = node["entries"];
    if (!entries || !entries.IsSequence()) {
      throw ConfigError("potential.entries must be a list of [q1, q2, value]", line_of(node));
    }
    std::map<Mode, double> values;
    std::map<Mode, int> lines;
    for (const auto& e : entries) {
      if (!e.IsSequence() || e.size() != 3) {
        throw ConfigError("potential entry must be [q1, q2, value]", line_of(e));
      }
      const Mode q{scalar<int>(e[0], "potential entry q1"), scalar<int>(e[1], "potential entry q2")};
      const auto v = scalar<double>(e[2], "potential entry value");
      const std::string label = "potential entry (" + std::to_string(q.m1) + "," + std::to_string(q.m2) + ")";
      if (!std::isfinite(v)) throw ConfigError(label + " is not finite", line_of(e));
      if (v < 0.0) throw ConfigError(label + " = " + e[2].Scalar() + " is negative (w-hat must be >= 0)", line_of(e));
      if (values.contains(q)) throw ConfigError("duplicate " + label, line_of(e));
      values[q] = v;
      lines[q] = line_of(e);
    }
    // entries given for one of ±q stand for both
    for (const auto& [q, v] : std::map<Mode, double>(values)) {
      auto partner = values.find(-q);
      if (partner == values.end()) {
        values[-q] = v;
      } else if (partner->second != v) {
        throw ConfigError("potential is not even: entries at (" + std::to_string(q.m1) + "," + std::to_string(q.m2) +
                              ") and its negative differ",
                          lines[q]);
      }
    }
    cfg.potential = Potential::table(std::move(values));
  } else {
    throw ConfigError("unknown potential family '" + family + "' (zero, constant, gaussian, table)",
                      line_of(node["family"]));
  }
}

void parse_classical(const YAML::Node& node, ExperimentConfig& cfg) {
  reject_unknown(node, {"samples", "streams", "exact_single_mode", "dump_ensemble"}, "classical");
  if (node["samples"]) cfg.ensemble.samples = count(node["samples"], "classical.samples");
  if (node["streams"]) cfg.ensemble.streams = count(node["streams"], "classical.streams");
  if (node["exact_single_mode"]) cfg.exact_single_mode = scalar<bool>(node["exact_single_mode"], "classical.exact_single_mode");
  if (node["dump_ensemble"]) cfg.dump_ensemble = scalar<bool>(node["dump_ensemble"], "classical.dump_ensemble");
}

void parse_quantum(const YAML::Node& node, ExperimentConfig& cfg) {
  reject_unknown(node, {"eps_z", "eps_tail", "growth", "max_cap", "max_block_dim", "max_states", "max_iterations"},
                 "quantum");
  if (node["eps_z"]) cfg.truncation.eps_z = positive(node["eps_z"], "quantum.eps_z");
  if (node["eps_tail"]) cfg.truncation.eps_tail = positive(node["eps_tail"], "quantum.eps_tail");
  if (node["growth"]) {
    cfg.truncation.growth = positive(node["growth"], "quantum.growth");
    if (cfg.truncation.growth <= 1.0) throw ConfigError("quantum.growth must exceed 1", line_of(node["growth"]));
  }
  if (node["max_cap"]) cfg.truncation.max_cap = static_cast<int>(count(node["max_cap"], "quantum.max_cap"));
  if (node["max_iterations"]) {
    cfg.truncation.max_iterations = static_cast<int>(count(node["max_iterations"], "quantum.max_iterations"));
  }
  if (node["max_block_dim"]) cfg.max_block_dim = count(node["max_block_dim"], "quantum.max_block_dim");
  if (node["max_states"]) cfg.max_states = count(node["max_states"], "quantum.max_states");
}

void parse_compare(const YAML::Node& node, ExperimentConfig& cfg) {
  reject_unknown(node, {"gaps", "subtracted_gap", "tolerances"}, "compare");
  if (node["gaps"]) {
    const YAML::Node gaps = node["gaps"];
    if (!gaps.IsSequence()) throw ConfigError("compare.gaps must be a list of [k, p]", line_of(gaps));
    cfg.gaps.clear();
    for (const auto& g : gaps) {
      if (!g.IsSequence() || g.size() != 2) throw ConfigError("compare.gaps entry must be [k, p]", line_of(g));
      const auto k = scalar<int>(g[0], "gap order k");
      const auto p = scalar<double>(g[1], "Schatten exponent p");
      if (k < 1 || k > 4) throw ConfigError("gap order k must be in 1..4", line_of(g));
      if (!(p >= 1.0)) throw ConfigError("Schatten exponent p must be >= 1", line_of(g));
      cfg.gaps.push_back({k, p});
    }
  }
  if (node["subtracted_gap"]) cfg.subtracted_gap = scalar<bool>(node["subtracted_gap"], "compare.subtracted_gap");
  if (node["tolerances"]) {
    const YAML::Node tol = node["tolerances"];
    if (!tol.IsMap()) throw ConfigError("compare.tolerances must be a mapping", line_of(tol));
    for (const auto& kv : tol) cfg.tolerances[kv.first.as<std::string>()] = positive(kv.second, "tolerance");
  }
}

void parse_wick(const YAML::Node& node, ExperimentConfig& cfg) {
  reject_unknown(node, {"radii", "samples", "streams"}, "wick");
  if (node["radii"]) {
    cfg.wick_radii = number_list(node["radii"], "wick.radii");
    if (cfg.wick_radii.empty()) throw ConfigError("wick.radii must not be empty", line_of(node["radii"]));
    for (std::size_t i = 0; i < cfg.wick_radii.size(); ++i) {
      if (cfg.wick_radii[i] < 0.0 || (i > 0 && cfg.wick_radii[i] < cfg.wick_radii[i - 1])) {
        throw ConfigError("wick.radii must be non-negative and non-decreasing", line_of(node["radii"]));
      }
    }
  }
  if (node["samples"]) cfg.wick_ensemble.samples = count(node["samples"], "wick.samples");
  if (node["streams"]) cfg.wick_ensemble.streams = count(node["streams"], "wick.streams");
}

}  // namespace

ComparisonSetup ExperimentConfig::comparison_setup() const {
  ComparisonSetup s;
  s.modes = modes;
  s.potential = potential;
  s.kappa = kappa;
  s.temperatures = temperatures;
  s.lambdas = lambdas;
  s.ensemble = ensemble;
  s.gaps = gaps;
  s.subtracted_gap = subtracted_gap;
  s.exact_single_mode = exact_single_mode;
  s.truncation = truncation;
  s.max_block_dim = max_block_dim;
  s.max_states = max_states;
  return s;
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("syntax error: " + e.msg, e.mark.line + 1);
  }
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping at top level", 1);
  reject_unknown(root,
                 {"modes", "kappa", "potential", "temperatures", "lambda", "classical", "quantum", "compare", "wick",
                  "seed", "output"},
                 "top level");

  ExperimentConfig cfg;
  cfg.source = text;
  cfg.sha256 = sha256_hex(text);

  if (!root["modes"]) throw ConfigError("'modes' section is required", 1);
  parse_modes(root["modes"], cfg);
  if (!root["kappa"]) throw ConfigError("'kappa' is required", 1);
  cfg.kappa = positive(root["kappa"], "kappa");
  if (!root["potential"]) throw ConfigError("'potential' section is required", 1);
  parse_potential(root["potential"], cfg);
  for (const Mode& q : cfg.modes.transfers()) {
    if (!cfg.potential.covers(q)) {
      throw ConfigError("potential table has no entry for transfer (" + std::to_string(q.m1) + "," +
                            std::to_string(q.m2) + ") reachable in the mode set",
                        line_of(root["potential"]));
    }
  }

  if (!root["temperatures"]) throw ConfigError("'temperatures' is required", 1);
  cfg.temperatures = number_list(root["temperatures"], "temperatures");
  for (std::size_t i = 0; i < cfg.temperatures.size(); ++i) {
    if (!(cfg.temperatures[i] > 0.0) || (i > 0 && !(cfg.temperatures[i] > cfg.temperatures[i - 1]))) {
      throw ConfigError("temperatures must be positive and strictly increasing", line_of(root["temperatures"]));
    }
  }
  if (const YAML::Node lam = root["lambda"]) {
    if (lam.IsScalar()) {
      if (lam.Scalar() != "inverse_temperature") {
        throw ConfigError("lambda must be 'inverse_temperature' or a list", line_of(lam));
      }
    } else {
      cfg.lambdas = number_list(lam, "lambda");
      if (cfg.lambdas.size() != cfg.temperatures.size()) {
        throw ConfigError("lambda list needs one value per temperature", line_of(lam));
      }
      for (double l : cfg.lambdas) {
        if (!(l > 0.0)) throw ConfigError("lambda values must be positive", line_of(lam));
      }
    }
  }

  if (const YAML::Node n = root["classical"]) parse_classical(n, cfg);
  if (const YAML::Node n = root["quantum"]) parse_quantum(n, cfg);
  if (const YAML::Node n = root["compare"]) parse_compare(n, cfg);
  if (const YAML::Node n = root["wick"]) parse_wick(n, cfg);
  if (const YAML::Node n = root["seed"]) {
    const auto seed = scalar<unsigned long long>(n, "seed");
    cfg.ensemble.seed = seed;
    cfg.wick_ensemble.seed = seed;
  }
  if (const YAML::Node n = root["output"]) cfg.output = scalar<std::string>(n, "output");
  if (cfg.ensemble.streams > cfg.ensemble.samples) {
    throw ConfigError("classical.streams exceeds classical.samples", line_of(root["classical"]));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

}  // namespace bose2d

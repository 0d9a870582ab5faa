#include "bose2d/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bose2d/errors.hpp"

namespace bose2d {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("missing " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::string join_caps(const Truncation& t) {
  std::string out;
  for (std::size_t i = 0; i < t.caps.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(t.caps[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw UsageError("malformed number '" + s + "' in comparison.csv");
  return v;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string header_line(const std::string& config_sha256) {
  return std::string("# bose2d ") + kToolVersion + " config_sha256=" + config_sha256 + "\n";
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& config_sha256,
                           const std::map<std::string, double>& tolerances) {
  std::ostringstream out;
  out << header_line(config_sha256);
  out << "# tolerances";
  for (const auto& [name, v] : tolerances) out << ' ' << name << '=' << format_double(v);
  out << '\n';
  std::vector<GapSpec> gaps;
  bool subtracted = false;
  for (const auto& r : rows) {
    if (!r.ok) continue;
    for (const auto& g : r.gaps) gaps.push_back(g.spec);
    subtracted = r.subtracted_gap.has_value();
    break;
  }
  out << "T,lambda,nu,E0,delta_F,neg_log_z,neg_log_z_err,free_energy_gap,free_energy_gap_err";
  for (const auto& g : gaps) out << ',' << g.name() << ',' << g.name() << "_err";
  if (subtracted) out << ",g_s1,g_s1_err";
  out << ",status\n";
  for (const auto& r : rows) {
    out << format_double(r.temperature) << ',' << format_double(r.lambda) << ',';
    if (r.ok) {
      out << format_double(r.nu) << ',' << format_double(r.e0) << ',' << format_double(r.delta_f) << ','
          << format_double(r.neg_log_z.value) << ',' << format_double(r.neg_log_z.standard_error) << ','
          << format_double(r.free_energy_gap.value) << ',' << format_double(r.free_energy_gap.standard_error);
      for (const auto& g : r.gaps) {
        out << ',' << format_double(g.gap.value) << ',' << format_double(g.gap.standard_error);
      }
      if (subtracted) {
        out << ',' << format_double(r.subtracted_gap->value) << ',' << format_double(r.subtracted_gap->standard_error);
      }
      out << ",ok\n";
    } else {
      const std::size_t blanks = 7 + 2 * gaps.size() + (subtracted ? 2 : 0);
      for (std::size_t i = 0; i < blanks; ++i) out << ',';
      out << "error: " << sanitize(r.diagnostic) << '\n';
    }
  }
  return out.str();
}

std::string gibbs_summary_csv(const std::vector<ComparisonRow>& rows, const std::string& config_sha256) {
  std::ostringstream out;
  out << header_line(config_sha256);
  out << "T,lambda,nu,E0,log_Z,F,F0,mean_N,max_particles,caps,top_sector_share,states,iterations,status\n";
  for (const auto& r : rows) {
    out << format_double(r.temperature) << ',' << format_double(r.lambda) << ',' << format_double(r.nu) << ','
        << format_double(r.e0) << ',';
    if (r.ok) {
      out << format_double(r.log_z) << ',' << format_double(r.free_energy) << ','
          << format_double(r.free_energy_free) << ',' << format_double(r.mean_particles) << ','
          << r.truncation.max_particles << ',' << join_caps(r.truncation) << ','
          << format_double(r.top_sector_share) << ',' << r.states << ',' << r.truncation_iterations << ",ok\n";
    } else {
      out << ",,,,,,,,,error: " << sanitize(r.diagnostic) << '\n';
    }
  }
  return out.str();
}

std::string verdict_json(const Verdict& verdict, const std::string& config_sha256, std::size_t modes) {
  nlohmann::ordered_json j;
  j["tool"] = "bose2d";
  j["version"] = kToolVersion;
  j["config_sha256"] = config_sha256;
  j["model"] = "finite mode-set surrogate (" + std::to_string(modes) +
               " modes); the continuum cutoff limit is not taken";
  j["pass"] = verdict.pass;
  j["rows_ok"] = verdict.rows_ok;
  auto& qs = j["quantities"] = nlohmann::ordered_json::array();
  for (const auto& q : verdict.quantities) {
    nlohmann::ordered_json e;
    e["name"] = q.name;
    e["temperatures"] = q.temperatures;
    e["values"] = q.values;
    e["errors"] = q.errors;
    e["monotone_decreasing"] = q.monotone;
    e["terminal"] = q.terminal;
    e["tolerance"] = q.tolerance ? nlohmann::ordered_json(*q.tolerance) : nlohmann::ordered_json(nullptr);
    e["terminal_ok"] = q.terminal_ok;
    e["loglog_slope"] = q.slope;
    e["pass"] = q.pass;
    qs.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string ensemble_csv(const WeightedEnsemble& ensemble, const std::string& config_sha256) {
  std::ostringstream out;
  out << header_line(config_sha256);
  out << "stream,sample,energy,weight\n";
  for (std::size_t s = 0; s < ensemble.streams(); ++s) {
    for (std::size_t i = ensemble.stream_begin[s]; i < ensemble.stream_begin[s + 1]; ++i) {
      out << s << ',' << (i - ensemble.stream_begin[s]) << ',' << format_double(ensemble.energies[i]) << ','
          << format_double(ensemble.weights[i]) << '\n';
    }
  }
  return out.str();
}

ParsedComparison parse_comparison_csv(const std::string& text) {
  ParsedComparison parsed;
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# tolerances", 0) == 0) {
      std::istringstream tl(line.substr(12));
      std::string item;
      while (tl >> item) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("malformed tolerance '" + item + "'");
        parsed.tolerances[item.substr(0, eq)] = parse_double(item.substr(eq + 1));
      }
      continue;
    }
    if (line[0] == '#') {
      const auto pos = line.find("config_sha256=");
      if (pos != std::string::npos) parsed.config_sha256 = line.substr(pos + 14);
      continue;
    }
    if (header.empty()) {
      header = split(line, ',');
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw UsageError("comparison.csv row has " + std::to_string(cells.size()) +
                                                        " cells, header has " + std::to_string(header.size()));
    std::map<std::string, std::string> cell;
    for (std::size_t i = 0; i < header.size(); ++i) cell[header[i]] = cells[i];
    ComparisonRow row;
    row.temperature = parse_double(cell.at("T"));
    row.lambda = parse_double(cell.at("lambda"));
    const std::string status = cell.count("status") ? cell.at("status") : "ok";
    if (status != "ok") {
      row.ok = false;
      row.diagnostic = status.rfind("error: ", 0) == 0 ? status.substr(7) : status;
      parsed.rows.push_back(row);
      continue;
    }
    auto get = [&](const std::string& name) { return cell.count(name) ? parse_double(cell.at(name)) : 0.0; };
    row.nu = get("nu");
    row.e0 = get("E0");
    row.delta_f = get("delta_F");
    row.neg_log_z = {get("neg_log_z"), get("neg_log_z_err")};
    row.free_energy_gap = {get("free_energy_gap"), get("free_energy_gap_err")};
    for (const auto& name : header) {
      if (name.rfind("g_", 0) != 0 || name == "g_s1" || name.ends_with("_err")) continue;
      int k = 0;
      double p = 0.0;
      if (std::sscanf(name.c_str(), "g_%d_%lf", &k, &p) != 2) throw UsageError("unrecognized gap column " + name);
      row.gaps.push_back({{k, p}, {get(name), get(name + "_err")}});
    }
    if (cell.count("g_s1")) row.subtracted_gap = Estimate{get("g_s1"), get("g_s1_err")};
    parsed.rows.push_back(row);
  }
  if (header.empty()) throw UsageError("comparison.csv has no header");
  return parsed;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const fs::path& out) {
  const ComparisonSetup setup = cfg.comparison_setup();
  SweepResult result;
  const ClassicalSide side = classical_side(setup);
  result.rows = theorem_quantities(setup, side);
  result.verdict = convergence_report(result.rows, cfg.tolerances);
  write_file(out / "comparison.csv", comparison_csv(result.rows, cfg.sha256, cfg.tolerances));
  write_file(out / "gibbs_summary.csv", gibbs_summary_csv(result.rows, cfg.sha256));
  write_file(out / "verdict.json", verdict_json(result.verdict, cfg.sha256, cfg.modes.size()));
  if (cfg.dump_ensemble) {
    const WeightedEnsemble ens = draw_ensemble(setup.modes, setup.potential, setup.kappa, setup.ensemble);
    write_file(out / "ensemble.csv", ensemble_csv(ens, cfg.sha256));
  }
  return result;
}

std::vector<ComparisonRow> run_quantum_exact(const ExperimentConfig& cfg, const fs::path& out) {
  ComparisonSetup setup = cfg.comparison_setup();
  ClassicalSide none;
  setup.gaps.clear();
  setup.subtracted_gap = false;
  auto rows = theorem_quantities(setup, none);
  write_file(out / "gibbs_summary.csv", gibbs_summary_csv(rows, cfg.sha256));
  return rows;
}

ClassicalSide run_classical_sample(const ExperimentConfig& cfg, const fs::path& out) {
  ComparisonSetup setup = cfg.comparison_setup();
  setup.gaps = {{1, 2.0}};
  const WeightedEnsemble ens = draw_ensemble(setup.modes, setup.potential, setup.kappa, setup.ensemble);
  ClassicalSide side;
  side.z = estimate_partition_z(ens);
  side.neg_log_z = {-std::log(side.z.value), side.z.standard_error / side.z.value};
  side.moments[1] = moment_matrix(ens, 1, setup.modes);
  side.stream_moments[1] = stream_moment_matrices(ens, 1, setup.modes);
  side.free_covariance = free_field_covariance(setup.modes, setup.kappa);

  std::ostringstream csv;
  csv << header_line(cfg.sha256);
  csv << "quantity,m1,m2,value,stderr\n";
  csv << "samples,,," << ens.size() << ",0\n";
  csv << "z,,," << format_double(side.z.value) << ',' << format_double(side.z.standard_error) << '\n';
  csv << "neg_log_z,,," << format_double(side.neg_log_z.value) << ',' << format_double(side.neg_log_z.standard_error)
      << '\n';
  if (setup.modes.size() == 1) {
    const auto exact = single_mode_moments(setup.potential(Mode{0, 0}), setup.kappa);
    csv << "z_quadrature,,," << format_double(exact.z) << ",0\n";
  }
  const auto& streams = side.stream_moments[1];
  for (std::size_t m = 0; m < setup.modes.size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    double mean = 0.0;
    double ss = 0.0;
    for (const auto& s : streams) mean += s(i, i).real();
    mean /= static_cast<double>(streams.size());
    for (const auto& s : streams) ss += (s(i, i).real() - mean) * (s(i, i).real() - mean);
    const double err = streams.size() > 1 ? std::sqrt(ss / static_cast<double>(streams.size() - 1) /
                                                      static_cast<double>(streams.size()))
                                          : 0.0;
    csv << "one_body," << setup.modes[m].m1 << ',' << setup.modes[m].m2 << ','
        << format_double(side.moments[1](i, i).real()) << ',' << format_double(err) << '\n';
  }
  write_file(out / "classical_summary.csv", csv.str());
  if (cfg.dump_ensemble) write_file(out / "ensemble.csv", ensemble_csv(ens, cfg.sha256));
  return side;
}

WickReport run_wick_check(const ExperimentConfig& cfg, const fs::path& out) {
  std::vector<ModeSet> sequence;
  for (double r : cfg.wick_radii) sequence.push_back(ModeSet::disk(r));
  const WickReport report = wick_cauchy_check(sequence, cfg.potential, cfg.kappa, cfg.wick_ensemble);
  std::ostringstream csv;
  csv << header_line(cfg.sha256);
  csv << "radius,modes,counterterm,mean_energy,mean_energy_err,raw_mean,raw_mean_err,min_energy,l1_gap_from_previous,"
         "l1_gap_err,decrease_z\n";
  for (std::size_t l = 0; l < report.levels.size(); ++l) {
    const WickLevel& lv = report.levels[l];
    csv << format_double(cfg.wick_radii[l]) << ',' << lv.modes << ',' << format_double(lv.counterterm) << ','
        << format_double(lv.subtracted_mean.value) << ',' << format_double(lv.subtracted_mean.standard_error) << ','
        << format_double(lv.raw_mean.value) << ',' << format_double(lv.raw_mean.standard_error) << ','
        << format_double(lv.min_energy) << ',';
    if (l == 0) {
      csv << ",,\n";
    } else {
      const WickGap& g = report.gaps[l - 1];
      csv << format_double(g.l1_gap.value) << ',' << format_double(g.l1_gap.standard_error) << ','
          << (l >= 2 ? format_double(g.decrease_z) : std::string()) << '\n';
    }
  }
  csv << "# all_nonnegative=" << (report.all_nonnegative ? "true" : "false") << '\n';
  write_file(out / "wick_check.csv", csv.str());
  return report;
}

Verdict run_report(const fs::path& dir) {
  const fs::path csv = dir / "comparison.csv";
  if (!fs::exists(csv)) throw UsageError("report needs " + csv.string() + " (run sweep first)");
  const ParsedComparison parsed = parse_comparison_csv(read_file(csv));
  const Verdict verdict = convergence_report(parsed.rows, parsed.tolerances);
  write_file(dir / "verdict.json", verdict_json(verdict, parsed.config_sha256, 0));
  return verdict;
}

}  // namespace bose2d

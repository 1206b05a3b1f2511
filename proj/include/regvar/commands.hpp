#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asymptotic.hpp"
#include "calculus.hpp"
#include "catalog.hpp"
#include "critical.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "oracle.hpp"
#include "regularity.hpp"
#include "spec_io.hpp"

// The analyses behind the command-line tool, callable in-process.
namespace regvar::commands {

struct RunConfig {
  std::string command;
  std::string spec_path;
  std::uint64_t seed = 0;
  double tau = 0.05;
  double tol_eq = 1e-9;
  double delta0 = 0.5;
  int levels = 6;
  /// Range pitch as a fraction of delta; 0 = automatic.
  double resolution = 0.0;
  /// Samples (critical), samples per shell (asymptotic), points (calculus); 0 = command default.
  std::size_t budget = 0;
  std::string shells = "2:7";
  std::string eta = "linear";
  double threshold = 0.02;
  std::string out = ".";
  std::string x;
  std::string y;
  /// Linking radius for components; 0 = automatic.
  double link = 0.0;
  std::string rule;
  std::string matrix;
  std::string inner;
  std::string rho;
  bool oracle = false;
};

struct CommandResult {
  std::vector<std::string> files;
  std::string summary;
};

inline Vector parse_vector(const std::string& text, const std::string& what) {
  Vector v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw InputError(what);
    } catch (const std::logic_error&) {
      throw InputError("cannot parse " + what + " \"" + text + "\"");
    }
  }
  if (v.empty()) throw InputError("empty " + what);
  return v;
}

/// Rows separated by ';', entries by ','.
inline Matrix parse_matrix(const std::string& text) {
  std::vector<Vector> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_vector(row, "matrix row"));
  if (rows.empty()) throw InputError("empty matrix");
  Matrix a(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != a.cols()) throw InputError("ragged matrix");
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = rows[i][j];
  }
  return a;
}

/// "first:last" for geometric shells [2^k, 2^(k+1)], or "lo-hi,lo-hi,...".
inline std::vector<Shell> parse_shells(const std::string& text) {
  if (auto colon = text.find(':'); colon != std::string::npos) {
    try {
      const int first = std::stoi(text.substr(0, colon));
      const int last = std::stoi(text.substr(colon + 1));
      if (last < first || first < 0 || last > 40) throw InputError("bad shell range");
      return geometric_shells(first, last);
    } catch (const std::logic_error&) {
      throw InputError("cannot parse shells \"" + text + "\"");
    }
  }
  std::vector<Shell> shells;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) throw InputError("cannot parse shell \"" + item + "\"");
    try {
      shells.push_back({std::stod(item.substr(0, dash)), std::stod(item.substr(dash + 1))});
    } catch (const std::logic_error&) {
      throw InputError("cannot parse shell \"" + item + "\"");
    }
  }
  return shells;
}

/// "linear" (eta = t), "phi-default" (eta = (1+t)^2) or "custom:<file>" with
/// {"name": ..., "coeffs": [c0, c1, ...]} for eta = sum c_k t^k.
inline EtaFunction parse_eta(const std::string& text) {
  if (text == "linear") return linear_eta();
  if (text == "phi-default") return default_eta();
  if (text.rfind("custom:", 0) == 0) {
    const std::string body = read_text_file(text.substr(7));
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(std::string("eta file: ") + e.what());
    }
    if (!j.is_object() || !j.contains("coeffs") || !j["coeffs"].is_array())
      throw InputError("eta file needs a \"coeffs\" array");
    std::vector<double> c;
    for (const auto& v : j["coeffs"]) {
      if (!v.is_number()) throw InputError("eta coefficients must be numbers");
      c.push_back(v.get<double>());
    }
    const std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "custom";
    return polynomial_eta(name, std::move(c));
  }
  throw InputError("unknown eta \"" + text + "\" (linear, phi-default, custom:<file>)");
}

inline RateOptions rate_options(const RunConfig& c) {
  if (!(c.delta0 > 0.0) || c.levels <= 0) throw InputError("delta0 and levels must be positive");
  if (c.resolution < 0.0 || !(c.tol_eq >= 0.0)) throw InputError("resolution and tol-eq must be non-negative");
  RateOptions o;
  o.delta0 = c.delta0;
  o.levels = c.levels;
  o.resolution_fraction = c.resolution;
  o.tol_eq = c.tol_eq;
  return o;
}

namespace detail {

inline std::string vec_text(const Vector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

inline std::vector<std::string> point_header(std::size_t n, std::size_t m) {
  std::vector<std::string> h;
  for (std::size_t i = 1; i <= n; ++i) h.push_back("x" + std::to_string(i));
  for (std::size_t i = 1; i <= m; ++i) h.push_back("y" + std::to_string(i));
  return h;
}

inline std::vector<std::string> point_cells(const GraphPoint& p) {
  std::vector<std::string> c;
  for (double v : p.x) c.push_back(format_number(v));
  for (double v : p.y) c.push_back(format_number(v));
  return c;
}

class Output {
 public:
  explicit Output(const RunConfig& c) : dir_(c.out) {
    std::filesystem::create_directories(dir_);
    summary_ << "command = " << c.command << "\n"
             << "spec = " << c.spec_path << "\n"
             << "seed = " << c.seed << "\n"
             << "tau = " << format_number(c.tau) << "\n"
             << "tol_eq = " << format_number(c.tol_eq) << "\n"
             << "delta0 = " << format_number(c.delta0) << "\n"
             << "levels = " << c.levels << "\n"
             << "resolution = " << (c.resolution > 0.0 ? format_number(c.resolution) : std::string("auto")) << "\n"
             << "budget = " << (c.budget > 0 ? std::to_string(c.budget) : std::string("default")) << "\n"
             << "shells = " << c.shells << "\n"
             << "eta = " << c.eta << "\n"
             << "threshold = " << format_number(c.threshold) << "\n";
  }

  void table(const std::string& name, const CsvTable& t) {
    const auto path = (dir_ / name).string();
    t.write(path);
    result_.files.push_back(path);
  }

  void line(const std::string& key, const std::string& value) { summary_ << key << " = " << value << "\n"; }

  CommandResult finish() {
    const auto path = (dir_ / "summary.txt").string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << summary_.str();
    result_.files.push_back(path);
    result_.summary = summary_.str();
    return result_;
  }

 private:
  std::filesystem::path dir_;
  std::ostringstream summary_;
  CommandResult result_;
};

}  // namespace detail

/// rate.csv (level, delta, value) and summary.txt with sur and reg.
inline CommandResult cmd_rate(const RunConfig& c) {
  const LoadedMap lm = load_map_spec(c.spec_path);
  if (c.x.empty()) throw InputError("rate needs --x");
  const Vector x = parse_vector(c.x, "x");
  Vector y;
  if (!c.y.empty())
    y = parse_vector(c.y, "y");
  else if (lm.poly)
    y = (*lm.poly)(x);
  else
    throw InputError("rate needs --y for a set-valued map");
  if (x.size() != lm.spec.n || y.size() != lm.spec.m) throw InputError("point dimension does not match the map");
  const RateOptions opts = rate_options(c);
  const RegularityEstimate est = surjection_rate(lm.spec, x, y, c.seed, opts);
  detail::Output out(c);
  CsvTable t({"level", "delta", "value", "points"});
  for (std::size_t k = 0; k < est.values.size(); ++k)
    t.row({std::to_string(k), format_number(est.deltas[k]), format_number(est.values[k]),
           std::to_string(est.points_per_level[k])});
  out.table("rate.csv", t);
  out.line("x", detail::vec_text(x));
  out.line("y", detail::vec_text(y));
  out.line("resolution_fraction", format_number(default_resolution_fraction(lm.spec.m, opts)));
  out.line("sur", format_number(est.sur_estimate));
  out.line("reg", format_number(regularity_rate(est)));
  if (lm.poly) out.line("jacobian_rate", format_number(jacobian_rate(*lm.poly, x)));
  if (c.oracle && lm.spec.n + lm.spec.m <= 3) {
    const double lambda = est.deltas.back();
    const double pitch = default_resolution_fraction(lm.spec.m, opts) * lambda;
    const ModulusBracket b = modulus_of_surjection(lm.spec, {x, y, lambda}, pitch);
    out.line("oracle_lambda", format_number(lambda));
    out.line("oracle_dense_modulus", format_number(oracle::dense_modulus(lm.spec, {x, y, lambda}, pitch)));
    out.line("oracle_bracket", format_number(b.r_lo) + "," + format_number(b.r_hi));
  }
  return out.finish();
}

/// flagged.csv, values.csv, dimension.csv, porosity.csv and, for scalar
/// polynomial maps, components.csv.
inline CommandResult cmd_critical(const RunConfig& c) {
  const LoadedMap lm = load_map_spec(c.spec_path);
  const std::size_t n = lm.spec.n, m = lm.spec.m;
  CriticalScanResult scan;
  if (lm.poly) {
    scan = scan_critical_values(*lm.poly, lm.spec.box.slice(0, n), c.tau, c.budget ? c.budget : 20000, c.seed);
  } else {
    CriticalScanOptions so;
    so.tol_eq = c.tol_eq;
    so.rate = rate_options(c);
    scan = scan_critical_values(lm.spec, c.tau, c.budget ? c.budget : 200, c.seed, so);
  }
  detail::Output out(c);
  auto head = detail::point_header(n, m);
  head.push_back("rate");
  head.push_back("strict");
  CsvTable flagged(head);
  for (const auto& f : scan.flagged) {
    auto cells = detail::point_cells(f.point);
    cells.push_back(format_number(f.rate));
    cells.push_back(f.strict ? "1" : "0");
    flagged.add_row_raw(cells);
  }
  out.table("flagged.csv", flagged);
  CsvTable values(detail::point_header(0, m));
  for (const auto& v : scan.values) {
    std::vector<std::string> cells;
    for (double t : v) cells.push_back(format_number(t));
    values.add_row_raw(cells);
  }
  out.table("values.csv", values);
  out.line("sampled", std::to_string(scan.total_sampled));
  out.line("flagged", std::to_string(scan.flagged.size()));
  CsvTable dim({"eps", "count", "used"});
  if (!scan.values.empty()) {
    try {
      const DimensionFit fit = box_counting_dimension(scan.values, default_box_scales());
      for (std::size_t i = 0; i < fit.scales.size(); ++i)
        dim.row({format_number(fit.scales[i]), std::to_string(fit.counts[i]), fit.used[i] ? "1" : "0"});
      out.line("dimension", format_number(fit.dimension));
      out.line("dimension_r2", format_number(fit.r2));
      out.line("dimension_bound", format_number(static_cast<double>(m) - 1.0 + 0.25));
    } catch (const DiagnosticError& e) {
      out.line("dimension", e.kind());
    }
    const std::vector<double> radii{0.25, 0.5};
    const PorosityReport por = porosity_scan(scan.values, radii, 0.05);
    CsvTable pt({"point", "radius", "ratio"});
    for (const auto& w : por.witnesses) pt.row({std::to_string(w.point), format_number(w.radius), format_number(w.ratio)});
    out.table("porosity.csv", pt);
    out.line("porosity_lambda", format_number(por.lambda_max));
    out.line("porosity_failures", std::to_string(por.witness_failures.size()));
  }
  out.table("dimension.csv", dim);
  if (lm.poly && m == 1) {
    const ComponentReport comp =
        component_constancy(*lm.poly, lm.spec.box.slice(0, n), c.tau, c.link, c.budget ? c.budget : 20000, c.seed);
    CsvTable ct({"component", "size", "value", "spread", "diameter"});
    for (std::size_t i = 0; i < comp.components.size(); ++i) {
      const auto& k = comp.components[i];
      ct.row({std::to_string(i), std::to_string(k.members.size()), format_number(k.value), format_number(k.spread),
              format_number(k.diameter)});
    }
    out.table("components.csv", ct);
    out.line("components", std::to_string(comp.components.size()));
    out.line("linking_radius", format_number(comp.linking_radius));
  }
  return out.finish();
}

/// shells.csv (per shell and cluster minimum of eta * rate) and candidates.csv.
inline CommandResult cmd_asymptotic(const RunConfig& c) {
  const EtaFunction eta = parse_eta(c.eta);
  const std::vector<Shell> shells = parse_shells(c.shells);
  const LoadedMap lm = load_map_spec(c.spec_path);
  AsymptoticOptions ao;
  ao.threshold = c.threshold;
  ao.tol_eq = c.tol_eq;
  ao.rate = rate_options(c);
  const AsymptoticScanResult res = lm.poly
                                       ? asymptotic_scan(*lm.poly, eta, shells, c.budget ? c.budget : 512, c.seed, ao)
                                       : asymptotic_scan(lm.spec, eta, shells, c.budget ? c.budget : 24, c.seed, ao);
  detail::Output out(c);
  CsvTable st({"shell", "r_lo", "r_hi", "cluster", "min_weighted_rate"});
  for (const auto& r : res.table)
    st.row({std::to_string(r.shell), format_number(res.shells[r.shell].lo), format_number(res.shells[r.shell].hi),
            std::to_string(r.cluster), format_number(r.min_weighted)});
  out.table("shells.csv", st);
  auto head = detail::point_header(0, lm.spec.m);
  head.insert(head.begin(), "cluster");
  head.push_back("final_weighted_rate");
  CsvTable ct(head);
  std::vector<Vector> ys;
  for (const auto& cand : res.candidates) {
    std::vector<std::string> cells{std::to_string(cand.cluster)};
    for (double v : cand.y) cells.push_back(format_number(v));
    cells.push_back(format_number(cand.decay_trace.back()));
    ct.add_row_raw(cells);
    ys.push_back(cand.y);
  }
  out.table("candidates.csv", ct);
  out.line("eta_name", res.eta_name);
  out.line("candidates", std::to_string(res.candidates.size()));
  for (std::size_t k : res.empty_shells) out.line("empty_shell", std::to_string(k));
  if (!ys.empty()) {
    try {
      const DimensionFit fit = box_counting_dimension(ys, default_box_scales());
      out.line("candidate_dimension", format_number(fit.dimension));
    } catch (const DiagnosticError& e) {
      out.line("candidate_dimension", e.kind());
    }
  }
  return out.finish();
}

// ---------------------------------------------------------------------------
// Calculus checks
// ---------------------------------------------------------------------------

struct CalculusInstance {
  std::string name;
  CalculusReport report;
  /// Equality case: both sides should agree, not just satisfy the inequality.
  bool equality = false;
};

/// Finer schedule for one-dimensional ranges, where it is cheap.
inline RateOptions calculus_options(std::size_t m) {
  RateOptions o;
  if (m == 1) {
    o.resolution_fraction = 1.0 / 256.0;
    o.levels = 10;
  }
  return o;
}

inline MapSpec scaled_line(double s, double lo, double hi, const std::string& name) {
  const PolyMap f({Polynomial::variable(1, 0, s)});
  const double a = s * lo, b = s * hi;
  return graph_spec(f, Box{{{lo, hi}, {std::min(a, b), std::max(a, b)}}}, name);
}

/// The bundled calculus instances, evaluated.
inline std::vector<CalculusInstance> bundled_calculus(std::uint64_t seed = 0, double tol = 0.1) {
  std::vector<CalculusInstance> out;
  const MapSpec id = scaled_line(1.0, -4.0, 4.0, "identity");
  const auto o1 = calculus_options(1);
  const auto o2 = calculus_options(2);
  out.push_back({"sum identity-0.5", check_sum_rule(id, Matrix{{-0.5}}, {{{0.3}, {0.3}}}, tol, seed, o1), true});
  out.push_back({"sum identity+1", check_sum_rule(id, Matrix{{1.0}}, {{{0.3}, {0.3}}}, tol, seed, o1), false});
  const MapSpec d23 = catalog::diag23().spec();
  out.push_back({"sum diag23+0.1I", check_sum_rule(d23, 0.1 * Matrix::identity(2), {{{0.2, -0.1}, {0.4, -0.3}}}, tol,
                                                   seed, o2),
                 false});
  const MapSpec h3 = scaled_line(3.0, -2.0, 2.0, "triple");
  const PolyMap g2({Polynomial::variable(1, 0, 2.0)});
  out.push_back({"chain 3y o 2x", check_chain_rule(h3, g2, Box{{{-1.0, 1.0}}}, {{{0.1}, {0.6}}}, tol, seed, o1), true});
  const PolyMap sq({Polynomial::variable(1, 0).pow(2)});
  out.push_back({"chain id o x^2", check_chain_rule(id, sq, Box{{{-2.0, 2.0}}}, {{{1.0}, {1.0}}}, tol, seed, o1), false});
  const double r = std::sqrt(0.5);
  const PolyMap rot = linear_map(Matrix{{r, -r}, {r, r}});
  const MapSpec d12 = graph_spec(linear_map(Matrix{{1, 0}, {0, 2}}), Box{{{-2, 2}, {-2, 2}, {-2, 2}, {-4, 4}}}, "diag12");
  {
    const Vector x{0.2, 0.1};
    const Vector gx = rot(x);
    const Vector y{gx[0], 2.0 * gx[1]};
    out.push_back({"chain diag12 o rot45", check_chain_rule(d12, rot, Box{{{-1, 1}, {-1, 1}}}, {{x, y}}, tol, seed, o2),
                   false});
  }
  const Polynomial one = Polynomial::constant(1, 1.0);
  out.push_back({"radial rho=1", check_prop7_bound(id, one, Box{{{-2.0, 2.0}}}, {{{0.5}, {0.5}}}, tol, seed, o1), false});
  out.push_back({"radial rho=2", check_prop7_bound(id, 2.0 * one, Box{{{-2.0, 2.0}}}, {{{0.5}, {1.0}}}, tol, seed, o1),
                 false});
  const Polynomial rho = one + Polynomial::variable(1, 0).pow(2);
  out.push_back({"radial rho=1+x^2", check_prop7_bound(id, rho, Box{{{-1.5, 1.5}}}, {{{1.0}, {2.0}}}, tol, seed, o1),
                 true});
  return out;
}

/// Largest gap between the two sides of an equality case.
inline double equality_gap(const CalculusInstance& inst) {
  double gap = 0.0;
  for (const auto& r : inst.report.rows) {
    gap = std::max(gap, std::abs(r.lhs - r.rhs));
    if (!std::isnan(r.upper)) gap = std::max(gap, std::abs(r.upper - r.rhs));
  }
  return gap;
}

inline CsvTable calculus_table(const std::vector<CalculusInstance>& instances) {
  CsvTable t({"rule", "instance", "x", "y", "lhs", "rhs", "upper", "pass"});
  for (const auto& inst : instances)
    for (const auto& r : inst.report.rows)
      t.row({inst.report.rule, inst.name, "\"" + detail::vec_text(r.point.x) + "\"", "\"" + detail::vec_text(r.point.y) + "\"",
             format_number(r.lhs), format_number(r.rhs), format_number(r.upper), r.pass ? "1" : "0"});
  return t;
}

/// Bundled instances when no spec is given; otherwise --rule sum|chain|radial
/// on the spec with --matrix, --inner or --rho, at sampled graph points.
inline CommandResult cmd_calculus(const RunConfig& c) {
  std::vector<CalculusInstance> instances;
  const double tol = 0.1;
  if (c.spec_path.empty()) {
    instances = bundled_calculus(c.seed, tol);
  } else {
    const LoadedMap lm = load_map_spec(c.spec_path);
    RateOptions opts = rate_options(c);
    const std::size_t count = c.budget ? c.budget : 3;
    if (c.rule == "sum") {
      if (c.matrix.empty()) throw InputError("sum rule needs --matrix");
      const auto pts = sample_graph(lm.spec, count, c.seed, c.tol_eq);
      instances.push_back({"sum", check_sum_rule(lm.spec, parse_matrix(c.matrix), pts, tol, c.seed, opts), false});
    } else if (c.rule == "chain") {
      if (c.inner.empty()) throw InputError("chain rule needs --inner");
      const LoadedMap g = load_map_spec(c.inner);
      if (!g.poly) throw InputError("the inner map must be given by components");
      const Box dom = g.spec.box.slice(0, g.spec.n);
      const MapSpec f = compose_map(lm.spec, *g.poly, dom);
      const auto pts = sample_graph(f, count, c.seed, c.tol_eq);
      instances.push_back({"chain", check_chain_rule(lm.spec, *g.poly, dom, pts, tol, c.seed, opts), false});
    } else if (c.rule == "radial") {
      if (c.rho.empty()) throw InputError("radial bound needs --rho");
      const Polynomial rho = parse_polynomial(read_text_file(c.rho));
      const Box dom = lm.spec.box.slice(0, lm.spec.n);
      const MapSpec l = radial_rescale_map(lm.spec, rho, dom);
      const auto pts = sample_graph(l, count, c.seed, c.tol_eq);
      instances.push_back({"radial", check_prop7_bound(lm.spec, rho, dom, pts, tol, c.seed, opts), false});
    } else {
      throw InputError("unknown rule \"" + c.rule + "\" (sum, chain, radial)");
    }
  }
  detail::Output out(c);
  out.table("calculus.csv", calculus_table(instances));
  std::size_t failed = 0;
  for (const auto& inst : instances)
    for (const auto& r : inst.report.rows) failed += r.pass ? 0 : 1;
  out.line("failed_rows", std::to_string(failed));
  return out.finish();
}

inline CommandResult run(const RunConfig& c) {
  if (c.command == "rate") return cmd_rate(c);
  if (c.command == "critical") return cmd_critical(c);
  if (c.command == "asymptotic") return cmd_asymptotic(c);
  if (c.command == "calculus") return cmd_calculus(c);
  throw InputError("unknown command \"" + c.command + "\"");
}

}  // namespace regvar::commands

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kfeller/convergence.hpp"
#include "kfeller/errors.hpp"
#include "kfeller/fem_oracle.hpp"
#include "kfeller/io.hpp"
#include "kfeller/measure.hpp"
#include "kfeller/spectrum.hpp"
#include "kfeller/trig_table.hpp"

namespace kfeller::cli {

enum class Command { eigvals, eigfun, sincurve, rates, audit, oracle_compare };
enum class Format { csv, json };
enum class BoundaryChoice { neumann, dirichlet, both };
enum class Normalization { series, l2 };
enum class RateTarget { eigenvalues, eigenfunction };

inline Command parse_command(const std::string& s) {
  if (s == "eigvals") return Command::eigvals;
  if (s == "eigfun") return Command::eigfun;
  if (s == "sincurve") return Command::sincurve;
  if (s == "rates") return Command::rates;
  if (s == "audit") return Command::audit;
  if (s == "oracle-compare") return Command::oracle_compare;
  throw ConfigError("unknown command '" + s + "'");
}

inline BoundaryChoice parse_boundary_choice(const std::string& s) {
  if (s == "both") return BoundaryChoice::both;
  return parse_boundary(s) == Boundary::neumann ? BoundaryChoice::neumann
                                                : BoundaryChoice::dirichlet;
}

/// "a:b" (inclusive) or a single level.
inline std::vector<int> parse_levels(const std::string& s) {
  try {
    const auto colon = s.find(':');
    std::size_t used = 0;
    if (colon == std::string::npos) {
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return {v};
    }
    const int a = std::stoi(s.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(s);
    const std::string rest = s.substr(colon + 1);
    const int b = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(s);
    if (b < a) throw ConfigError("level range '" + s + "' is empty");
    std::vector<int> out;
    for (int v = a; v <= b; ++v) out.push_back(v);
    return out;
  } catch (const std::logic_error&) {
    throw ConfigError("malformed level range '" + s + "', expected a:b");
  }
}

struct RunConfig {
  Command command = Command::eigvals;
  double w1 = 0.5;  // as given; canonicalized on use
  int level = 0;
  std::vector<int> levels;
  BoundaryChoice boundary = BoundaryChoice::neumann;
  int m_max = 6;
  double tol = 1e-12;
  std::optional<std::size_t> order;  // empty means auto
  std::string out_path;              // empty means stdout
  Format format = Format::csv;
  double z_max = 12.0;
  std::size_t samples = 1001;
  int level_cap = 10;
  Normalization normalization = Normalization::series;
  RateTarget rate_target = RateTarget::eigenvalues;
  std::vector<std::size_t> fem_elements;  // empty: 3^4, 3^5, 3^6 (at least 3^level)
  std::string measure_file;               // piecewise-constant measure instead of a Cantor level
  std::string dump_coeffs;
  std::string dump_poly;  // "p5:path.csv" or "q4:path.csv"

  WeightVector weights() const { return WeightVector(w1); }
};

inline void validate(const RunConfig& c) {
  if (!(c.tol >= 1e-14 && c.tol <= 1e-4)) {
    throw ConfigError("--tol must lie in [1e-14, 1e-4]");
  }
  (void)c.weights();
  auto check_level = [&](int n) {
    if (n < 0) throw ConfigError("level must be nonnegative");
    if (n > c.level_cap) {
      throw ConfigError("level " + std::to_string(n) + " exceeds the level cap " +
                        std::to_string(c.level_cap));
    }
  };
  check_level(c.level);
  for (int n : c.levels) check_level(n);
  if (c.m_max < 1) throw ConfigError("--m-max must be at least 1");
  if (c.samples < 2) throw ConfigError("--samples must be at least 2");
  if (!(c.z_max > 0.0 && std::isfinite(c.z_max))) throw ConfigError("--z-max must be positive");
  if (c.order && *c.order < 1) throw ConfigError("--order must be at least 1");
  if ((c.command == Command::rates || c.command == Command::audit) && c.levels.empty()) {
    throw ConfigError("this command needs --levels a:b");
  }
  if (c.command == Command::rates && c.boundary == BoundaryChoice::both) {
    throw ConfigError("rates takes a single boundary type");
  }
}

/// Output file that only appears under its final name once complete.
class AtomicOutput {
 public:
  explicit AtomicOutput(std::string path) : path_(std::move(path)) {
    if (!path_.empty()) {
      tmp_ = path_ + ".partial";
      file_.open(tmp_, std::ios::binary | std::ios::trunc);
      if (!file_) throw ConfigError("cannot open output file '" + path_ + "'");
    }
  }
  AtomicOutput(const AtomicOutput&) = delete;
  AtomicOutput& operator=(const AtomicOutput&) = delete;
  ~AtomicOutput() {
    if (!committed_ && !tmp_.empty()) {
      file_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return path_.empty() ? buffer_ : static_cast<std::ostream&>(file_); }

  void commit() {
    if (path_.empty()) {
      std::cout << buffer_.str();
      std::cout.flush();
    } else {
      file_.close();
      if (!file_) throw ConfigError("failed writing '" + path_ + "'");
      std::filesystem::rename(tmp_, path_);
    }
    committed_ = true;
  }

 private:
  std::string path_, tmp_;
  std::ofstream file_;
  std::ostringstream buffer_;
  bool committed_ = false;
};

namespace detail {

inline Measure load_measure(const RunConfig& c, int level) {
  if (!c.measure_file.empty()) {
    std::ifstream in(c.measure_file);
    if (!in) throw ConfigError("cannot read measure file '" + c.measure_file + "'");
    Json j;
    try {
      in >> j;
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("malformed measure JSON: ") + e.what());
    }
    return measure_from_json(j);
  }
  return cantor_approximant({c.weights(), level});
}

inline RootOptions root_options(const RunConfig& c) {
  RootOptions o;
  o.tol = c.tol;
  if (c.order) o.max_order = *c.order;
  return o;
}

inline std::shared_ptr<const TrigTable<Extended>> initial_table(const RunConfig& c,
                                                               const Measure& mu, double z_guess) {
  const std::size_t order = c.order ? *c.order : bounds::required_order(z_guess, 1e-15);
  return std::make_shared<const TrigTable<Extended>>(mu, order);
}

inline std::vector<Boundary> boundaries(BoundaryChoice b) {
  switch (b) {
    case BoundaryChoice::neumann:
      return {Boundary::neumann};
    case BoundaryChoice::dirichlet:
      return {Boundary::dirichlet};
    case BoundaryChoice::both:
      return {Boundary::neumann, Boundary::dirichlet};
  }
  return {};
}

inline std::size_t record_count(Boundary b, int m_max) {
  return b == Boundary::neumann ? static_cast<std::size_t>(m_max) + 1
                                : static_cast<std::size_t>(m_max);
}

inline Spectrum<Extended> spectrum_for(const RunConfig& c, const Measure& mu, Boundary b) {
  const double guess = std::max(4.0, 1.2 * 3.2 * static_cast<double>(c.m_max + 1));
  return find_eigenvalues<Extended>(initial_table(c, mu, guess), b, record_count(b, c.m_max),
                                    root_options(c));
}

inline void dump_tables(const RunConfig& c, const TrigTable<Extended>& table) {
  if (!c.dump_coeffs.empty()) {
    AtomicOutput out(c.dump_coeffs);
    write_coefficients_csv(out.stream(), table);
    out.commit();
  }
  if (!c.dump_poly.empty()) {
    const auto colon = c.dump_poly.find(':');
    if (colon == std::string::npos || colon < 2 ||
        (c.dump_poly[0] != 'p' && c.dump_poly[0] != 'q')) {
      throw ConfigError("--dump-poly expects p<n>:path or q<n>:path");
    }
    std::size_t n = 0;
    try {
      n = std::stoul(c.dump_poly.substr(1, colon - 1));
    } catch (const std::logic_error&) {
      throw ConfigError("--dump-poly expects p<n>:path or q<n>:path");
    }
    if (n >= table.size()) {
      throw ConfigError("--dump-poly index " + std::to_string(n) + " exceeds the table size " +
                        std::to_string(table.size()));
    }
    AtomicOutput out(c.dump_poly.substr(colon + 1));
    write_csv(out.stream(), c.dump_poly[0] == 'p' ? table.p(n) : table.q(n));
    out.commit();
  }
}

inline void run_eigvals(const RunConfig& c, std::ostream& os) {
  const Measure mu = load_measure(c, c.level);
  std::vector<EigenvalueRecord> all;
  std::shared_ptr<const TrigTable<Extended>> last;
  for (auto b : boundaries(c.boundary)) {
    auto s = spectrum_for(c, mu, b);
    all.insert(all.end(), s.records.begin(), s.records.end());
    if (!last || s.table->order() > last->order()) last = s.table;
  }
  dump_tables(c, *last);
  if (c.format == Format::csv) {
    write_eigenvalues_csv(os, all);
  } else {
    Json records = Json::array();
    for (const auto& r : all) records.push_back(record_to_json(r));
    Json doc{{"measure", c.measure_file.empty() ? Json{{"weights", weights_to_json(c.weights())},
                                                       {"level", c.level}}
                                                 : Json{{"file", c.measure_file}}},
             {"records", records}};
    os << doc.dump(2) << '\n';
  }
}

inline void run_eigfun(const RunConfig& c, std::ostream& os) {
  const Measure mu = load_measure(c, c.level);
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<double> xs;
  for (std::size_t k = 0; k < c.samples; ++k) {
    xs.push_back(static_cast<double>(k) / static_cast<double>(c.samples - 1));
  }
  for (auto b : boundaries(c.boundary)) {
    const auto s = spectrum_for(c, mu, b);
    dump_tables(c, *s.table);
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      const Eigenfunction<Extended> ef(s.records[i], s.table);
      double scale = 1.0;
      if (c.normalization == Normalization::l2) {
        scale = (b == Boundary::neumann && s.records[i].index >= 1)
                    ? 1.0 / eigenfunction_l2_norm(ef)
                    : 1.0 / eigenfunction_l2_norm_exact(ef);
      }
      names.push_back(std::string(b == Boundary::neumann ? "f_N_" : "f_D_") +
                      std::to_string(s.records[i].index));
      std::vector<double> col;
      col.reserve(xs.size());
      for (double x : xs) col.push_back(scale * eigenfunction_eval(ef, x));
      columns.push_back(std::move(col));
    }
  }
  if (c.format == Format::csv) {
    CsvWriter csv(os);
    csv.field("x");
    for (const auto& n : names) csv.field(n);
    csv.end_row();
    for (std::size_t k = 0; k < xs.size(); ++k) {
      csv.field(xs[k]);
      for (const auto& col : columns) csv.field(col[k]);
      csv.end_row();
    }
  } else {
    Json doc{{"x", xs}};
    Json fns = Json::object();
    for (std::size_t i = 0; i < names.size(); ++i) fns[names[i]] = columns[i];
    doc["functions"] = fns;
    doc["normalization"] = c.normalization == Normalization::l2 ? "l2" : "series";
    os << doc.dump(2) << '\n';
  }
}

inline void run_sincurve(const RunConfig& c, std::ostream& os) {
  const Measure mu = load_measure(c, c.level);
  const auto table = initial_table(c, mu, c.z_max);
  dump_tables(c, *table);
  const EvalOptions opts{1e-9};
  std::vector<double> zs, sp, sq;
  for (std::size_t k = 0; k < c.samples; ++k) {
    const double z = c.z_max * static_cast<double>(k) / static_cast<double>(c.samples - 1);
    zs.push_back(z);
    sp.push_back(sinp(*table, z, opts).value);
    sq.push_back(sinq(*table, z, opts).value);
  }
  if (c.format == Format::csv) {
    CsvWriter csv(os);
    csv.row("z", "sinp", "sinq");
    for (std::size_t k = 0; k < zs.size(); ++k) csv.row(zs[k], sp[k], sq[k]);
  } else {
    os << Json{{"z", zs}, {"sinp", sp}, {"sinq", sq}}.dump(2) << '\n';
  }
}

inline void print_slope_table(std::ostream& log, const RateReport& r) {
  char buf[160];
  log << "  m   fitted slope   slope w/o deepest   log w2\n";
  for (std::size_t i = 0; i < r.indices.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%3d   %12.4f   %17.4f   %6.4f%s\n", r.indices[i],
                  r.fits[i].slope, r.fits_without_deepest[i].slope, r.reference_slope(),
                  r.fits[i].converged_below_tolerance ? "   (converged below tolerance)" : "");
    log << buf;
  }
}

inline void run_rates(const RunConfig& c, std::ostream& os, std::ostream& log) {
  const Boundary b = boundaries(c.boundary).front();
  RateOptions opts;
  opts.roots = root_options(c);
  if (c.rate_target == RateTarget::eigenvalues) {
    const auto r = eigenvalue_rate_experiment<Extended>(c.weights(), c.levels, b, c.m_max, opts);
    print_slope_table(log, r);
    if (c.format == Format::csv) {
      write_rate_report_csv(os, r);
    } else {
      os << rate_report_to_json(r).dump(2) << '\n';
    }
  } else {
    const auto r =
        eigenfunction_rate_experiment<Extended>(c.weights(), c.levels, b, c.m_max, {}, opts);
    char buf[120];
    std::snprintf(buf, sizeof buf, "  m=%d fitted slope %.4f, log w2 %.4f\n", r.index, r.fit.slope,
                  r.reference_slope());
    log << buf;
    if (c.format == Format::csv) {
      write_eigenfunction_rate_csv(os, r);
    } else {
      os << eigenfunction_rate_to_json(r).dump(2) << '\n';
    }
  }
}

inline void run_audit(const RunConfig& c, std::ostream& os) {
  AuditOptions opts;
  if (c.z_max != 12.0) {
    opts.z_grid.clear();
    for (double z : {0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0}) {
      if (z < c.z_max) opts.z_grid.push_back(z);
    }
    opts.z_grid.push_back(c.z_max);
  }
  const auto r = bound_audit<Extended>(c.weights(), c.levels, opts);
  if (c.format == Format::csv) {
    write_audit_csv(os, r);
  } else {
    os << audit_to_json(r).dump(2) << '\n';
  }
}

inline void run_oracle_compare(const RunConfig& c, std::ostream& os) {
  const Measure mu = load_measure(c, c.level);
  std::vector<std::size_t> meshes = c.fem_elements;
  if (meshes.empty()) {
    for (int e : {4, 5, 6}) {
      meshes.push_back(static_cast<std::size_t>(pow3(std::max(e, c.level))));
    }
  }
  struct Row {
    Boundary b;
    int m;
    std::size_t elements;
    double series, fem;
  };
  std::vector<Row> rows;
  for (auto b : boundaries(c.boundary)) {
    const auto s = spectrum_for(c, mu, b);
    for (std::size_t e : meshes) {
      const auto fem = fem_oracle(mu, e, s.records.size(), b);
      for (std::size_t i = 0; i < s.records.size(); ++i) {
        rows.push_back({b, s.records[i].index, e, s.records[i].lambda, fem[i]});
      }
    }
  }
  auto rel = [](const Row& r) {
    return r.series == 0.0 ? std::abs(r.fem) : std::abs(r.fem - r.series) / r.series;
  };
  if (c.format == Format::csv) {
    CsvWriter csv(os);
    csv.row("boundary", "m", "elements", "lambda_series", "lambda_fem", "relative_gap");
    for (const auto& r : rows) csv.row(to_string(r.b), r.m, r.elements, r.series, r.fem, rel(r));
  } else {
    Json arr = Json::array();
    for (const auto& r : rows) {
      arr.push_back({{"boundary", to_string(r.b)},
                     {"m", r.m},
                     {"elements", r.elements},
                     {"lambda_series", r.series},
                     {"lambda_fem", r.fem},
                     {"relative_gap", rel(r)}});
    }
    os << Json{{"rows", arr}}.dump(2) << '\n';
  }
}

}  // namespace detail

/// Executes one command. Output goes to c.out_path (or stdout) only on success.
inline void run(const RunConfig& c, std::ostream& log = std::cerr) {
  validate(c);
  AtomicOutput out(c.out_path);
  switch (c.command) {
    case Command::eigvals:
      detail::run_eigvals(c, out.stream());
      break;
    case Command::eigfun:
      detail::run_eigfun(c, out.stream());
      break;
    case Command::sincurve:
      detail::run_sincurve(c, out.stream());
      break;
    case Command::rates:
      detail::run_rates(c, out.stream(), log);
      break;
    case Command::audit:
      detail::run_audit(c, out.stream());
      break;
    case Command::oracle_compare:
      detail::run_oracle_compare(c, out.stream());
      break;
  }
  out.commit();
}

/// Machine-readable error document for stderr.
inline std::string error_json(ErrorKind kind, const std::string& message) {
  return Json{{"error", {{"kind", to_string(kind)}, {"message", message}}}}.dump();
}

/// Runs and maps failures to exit codes: 2 config, 3 numerical, 4 resource.
inline int run_and_report(const RunConfig& c, std::ostream& err = std::cerr) {
  try {
    run(c, err);
    return 0;
  } catch (const Error& e) {
    err << error_json(e.kind(), e.what()) << '\n';
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    err << error_json(ErrorKind::resource, "out of memory") << '\n';
    return exit_code(ErrorKind::resource);
  } catch (const std::exception& e) {
    err << error_json(ErrorKind::inconsistency, e.what()) << '\n';
    return exit_code(ErrorKind::inconsistency);
  }
}

}  // namespace kfeller::cli

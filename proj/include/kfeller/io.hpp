#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kfeller/convergence.hpp"
#include "kfeller/errors.hpp"
#include "kfeller/measure.hpp"
#include "kfeller/spectrum.hpp"

namespace kfeller {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV

/// 17 significant digits; non-finite values print as nan, inf, -inf.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// RFC-4180 field: quoted when it contains a comma, quote, CR or LF.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  CsvWriter& field(const std::string& s) {
    if (!first_) os_ << ',';
    os_ << csv_field(s);
    first_ = false;
    return *this;
  }
  CsvWriter& field(const char* s) { return field(std::string(s)); }
  CsvWriter& field(double v) { return field(format_double(v)); }
  CsvWriter& field(int v) { return field(std::to_string(v)); }
  CsvWriter& field(std::size_t v) { return field(std::to_string(v)); }

  void end_row() {
    os_ << "\r\n";
    first_ = true;
  }

  template <class... T>
  void row(const T&... values) {
    (field(values), ...);
    end_row();
  }

 private:
  std::ostream& os_;
  bool first_ = true;
};

// ---------------------------------------------------------------------------
// JSON helpers. NaN slopes serialize as null and parse back to NaN.

inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double json_double(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline Json measure_to_json(const Measure& m) {
  return Json{{"breakpoints", m.breakpoints()}, {"densities", m.densities()}};
}

inline Measure measure_from_json(const Json& j) {
  try {
    return Measure(j.at("breakpoints").get<std::vector<double>>(),
                   j.at("densities").get<std::vector<double>>());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed measure JSON: ") + e.what());
  }
}

inline Json weights_to_json(const WeightVector& w) {
  return Json{{"w1", w.w1()}, {"w2", w.w2()}, {"swapped", w.swapped()}};
}

inline WeightVector weights_from_json(const Json& j) {
  const double w1 = j.at("w1").get<double>();
  return WeightVector(j.at("swapped").get<bool>() ? 1.0 - w1 : w1);
}

inline Json record_to_json(const EigenvalueRecord& r) {
  return Json{{"boundary", to_string(r.boundary)},
              {"m", r.index},
              {"z", r.z},
              {"lambda", r.lambda},
              {"bracket_lo", r.bracket_lo},
              {"bracket_hi", r.bracket_hi},
              {"residual", r.residual},
              {"error_bound", json_number(r.error_bound)}};
}

inline EigenvalueRecord record_from_json(const Json& j) {
  EigenvalueRecord r;
  r.boundary = parse_boundary(j.at("boundary").get<std::string>());
  r.index = j.at("m").get<int>();
  r.z = j.at("z").get<double>();
  r.lambda = j.at("lambda").get<double>();
  r.bracket_lo = j.at("bracket_lo").get<double>();
  r.bracket_hi = j.at("bracket_hi").get<double>();
  r.residual = j.at("residual").get<double>();
  r.error_bound = json_double(j.at("error_bound"));
  return r;
}

inline bool operator==(const EigenvalueRecord& a, const EigenvalueRecord& b) {
  auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.index == b.index && a.boundary == b.boundary && a.z == b.z && a.lambda == b.lambda &&
         a.bracket_lo == b.bracket_lo && a.bracket_hi == b.bracket_hi &&
         a.residual == b.residual && same(a.error_bound, b.error_bound);
}

inline void write_eigenvalues_csv(std::ostream& os, const std::vector<EigenvalueRecord>& records) {
  CsvWriter csv(os);
  csv.row("boundary", "m", "z", "lambda", "bracket_lo", "bracket_hi", "residual", "error_bound");
  for (const auto& r : records) {
    csv.row(to_string(r.boundary), r.index, r.z, r.lambda, r.bracket_lo, r.bracket_hi, r.residual,
            r.error_bound);
  }
}

inline Json fit_to_json(const RateFit& f) {
  return Json{{"slope", json_number(f.slope)},
              {"intercept", json_number(f.intercept)},
              {"points", f.points},
              {"converged_below_tolerance", f.converged_below_tolerance}};
}

inline RateFit fit_from_json(const Json& j) {
  RateFit f;
  f.slope = json_double(j.at("slope"));
  f.intercept = json_double(j.at("intercept"));
  f.points = j.at("points").get<std::size_t>();
  f.converged_below_tolerance = j.at("converged_below_tolerance").get<bool>();
  return f;
}

inline bool operator==(const RateFit& a, const RateFit& b) {
  auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return same(a.slope, b.slope) && same(a.intercept, b.intercept) && a.points == b.points &&
         a.converged_below_tolerance == b.converged_below_tolerance;
}

inline Json rate_report_to_json(const RateReport& r) {
  Json fits = Json::array(), dropped = Json::array();
  for (const auto& f : r.fits) fits.push_back(fit_to_json(f));
  for (const auto& f : r.fits_without_deepest) dropped.push_back(fit_to_json(f));
  return Json{{"weights", weights_to_json(r.weights)},
              {"boundary", to_string(r.boundary)},
              {"indices", r.indices},
              {"levels", r.levels},
              {"lambdas", r.lambdas},
              {"cdf_dist_bounds", r.cdf_dist_bounds},
              {"cdf_distances", r.cdf_distances},
              {"successive_gaps", r.successive_gaps},
              {"reference_slope", r.reference_slope()},
              {"fits", fits},
              {"fits_without_deepest", dropped}};
}

inline RateReport rate_report_from_json(const Json& j) {
  RateReport r;
  r.weights = weights_from_json(j.at("weights"));
  r.boundary = parse_boundary(j.at("boundary").get<std::string>());
  r.indices = j.at("indices").get<std::vector<int>>();
  r.levels = j.at("levels").get<std::vector<int>>();
  r.lambdas = j.at("lambdas").get<std::vector<std::vector<double>>>();
  r.cdf_dist_bounds = j.at("cdf_dist_bounds").get<std::vector<double>>();
  r.cdf_distances = j.at("cdf_distances").get<std::vector<double>>();
  r.successive_gaps = j.at("successive_gaps").get<std::vector<std::vector<double>>>();
  for (const auto& f : j.at("fits")) r.fits.push_back(fit_from_json(f));
  for (const auto& f : j.at("fits_without_deepest")) r.fits_without_deepest.push_back(fit_from_json(f));
  return r;
}

inline bool operator==(const RateReport& a, const RateReport& b) {
  return a.weights == b.weights && a.boundary == b.boundary && a.indices == b.indices &&
         a.levels == b.levels && a.lambdas == b.lambdas && a.cdf_dist_bounds == b.cdf_dist_bounds &&
         a.cdf_distances == b.cdf_distances && a.successive_gaps == b.successive_gaps &&
         a.fits == b.fits && a.fits_without_deepest == b.fits_without_deepest;
}

/// Long format: one row per (m, level) with the gap to the next level.
inline void write_rate_report_csv(std::ostream& os, const RateReport& r) {
  CsvWriter csv(os);
  csv.row("boundary", "m", "level", "lambda", "gap_to_next", "cdf_dist_bound", "fitted_slope",
          "reference_slope");
  for (std::size_t i = 0; i < r.indices.size(); ++i) {
    for (std::size_t k = 0; k < r.levels.size(); ++k) {
      const double gap = k < r.successive_gaps[i].size() ? r.successive_gaps[i][k]
                                                         : std::numeric_limits<double>::quiet_NaN();
      csv.row(to_string(r.boundary), r.indices[i], r.levels[k], r.lambdas[i][k], gap,
              r.cdf_dist_bounds[k], r.fits[i].slope, r.reference_slope());
    }
  }
}

inline Json eigenfunction_rate_to_json(const EigenfunctionRateReport& r) {
  return Json{{"weights", weights_to_json(r.weights)},
              {"boundary", to_string(r.boundary)},
              {"m", r.index},
              {"levels", r.levels},
              {"sup_gaps", r.sup_gaps},
              {"endpoint_gaps", r.endpoint_gaps},
              {"reference_slope", r.reference_slope()},
              {"fit", fit_to_json(r.fit)}};
}

inline EigenfunctionRateReport eigenfunction_rate_from_json(const Json& j) {
  EigenfunctionRateReport r;
  r.weights = weights_from_json(j.at("weights"));
  r.boundary = parse_boundary(j.at("boundary").get<std::string>());
  r.index = j.at("m").get<int>();
  r.levels = j.at("levels").get<std::vector<int>>();
  r.sup_gaps = j.at("sup_gaps").get<std::vector<double>>();
  r.endpoint_gaps = j.at("endpoint_gaps").get<std::vector<double>>();
  r.fit = fit_from_json(j.at("fit"));
  return r;
}

inline void write_eigenfunction_rate_csv(std::ostream& os, const EigenfunctionRateReport& r) {
  CsvWriter csv(os);
  csv.row("boundary", "m", "level", "next_level", "sup_gap", "endpoint_gap", "fitted_slope",
          "reference_slope");
  for (std::size_t k = 0; k < r.sup_gaps.size(); ++k) {
    csv.row(to_string(r.boundary), r.index, r.levels[k], r.levels[k + 1], r.sup_gaps[k],
            r.endpoint_gaps[k], r.fit.slope, r.reference_slope());
  }
}

inline Json audit_to_json(const AuditReport& r) {
  Json cdf = Json::array(), limit = Json::array(), bounds = Json::array();
  for (const auto& c : r.cdf_rows) {
    cdf.push_back({{"n", c.n},
                   {"n2", c.n2},
                   {"distance", c.distance},
                   {"telescoping_bound", c.telescoping_bound},
                   {"level_bound", c.level_bound}});
  }
  for (const auto& l : r.limit_rows) {
    limit.push_back({{"n", l.n},
                     {"reference", l.reference},
                     {"lower", l.lower},
                     {"upper", l.upper},
                     {"bound", l.bound}});
  }
  for (const auto& b : r.bounds) {
    bounds.push_back({{"name", b.name},
                      {"checks", b.checks},
                      {"violations", b.violations},
                      {"worst_ratio", json_number(b.worst_ratio)},
                      {"worst_slack", json_number(b.worst_slack)},
                      {"worst_case", b.worst_case},
                      {"informational", b.informational}});
  }
  return Json{{"weights", weights_to_json(r.weights)},
              {"levels", r.levels},
              {"violations", r.violations()},
              {"cdf", cdf},
              {"limit", limit},
              {"bounds", bounds}};
}

inline void write_audit_csv(std::ostream& os, const AuditReport& r) {
  CsvWriter csv(os);
  csv.row("bound", "checks", "violations", "worst_ratio", "worst_slack", "worst_case",
          "informational");
  for (const auto& b : r.bounds) {
    csv.row(b.name, b.checks, b.violations, b.worst_ratio, b.worst_slack, b.worst_case,
            b.informational ? "yes" : "no");
  }
}

}  // namespace kfeller

// Command line front end for the kfeller library.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "kfeller/cli.hpp"

namespace {

using kfeller::cli::RunConfig;

void add_common(CLI::App* app, RunConfig& c, std::string& boundary, std::string& format,
                std::string& order) {
  app->add_option("--w", c.w1, "weight w1 of the left contraction, in (0,1)");
  app->add_option("--level", c.level, "Cantor approximation level");
  app->add_option("--boundary", boundary, "neumann, dirichlet or both");
  app->add_option("--m-max", c.m_max, "largest eigenvalue index");
  app->add_option("--tol", c.tol, "root tolerance, in [1e-14, 1e-4]");
  app->add_option("--order", order, "series order or 'auto'");
  app->add_option("--out", c.out_path, "output file (default: stdout)");
  app->add_option("--format", format, "csv or json");
  app->add_option("--level-cap", c.level_cap, "largest accepted level");
  app->add_option("--measure-file", c.measure_file,
                  "JSON measure {\"breakpoints\":[...],\"densities\":[...]} instead of a Cantor level");
  app->add_option("--dump-coeffs", c.dump_coeffs, "write n, p_n(1), q_n(1) as CSV");
  app->add_option("--dump-poly", c.dump_poly, "write p<n> or q<n> pieces as CSV: p5:path.csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigenvalues of Krein-Feller operators for Cantor-type measures"};
  app.require_subcommand(1);

  RunConfig c;
  std::string boundary = "neumann", format = "csv", order = "auto", levels, normalize = "series",
              target = "eigenvalues";

  std::map<std::string, CLI::App*> subs;
  const std::pair<const char*, const char*> commands[] = {
      {"eigvals", "eigenvalue list with brackets and error bounds"},
      {"eigfun", "eigenfunction samples on a uniform grid"},
      {"sincurve", "sinp and sinq over [0, z-max]"},
      {"rates", "convergence rates across Cantor levels"},
      {"audit", "check the proven inequalities across levels"},
      {"oracle-compare", "series eigenvalues against the finite element oracle"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, c, boundary, format, order);
    subs[name] = sub;
  }
  subs["eigfun"]->add_option("--samples", c.samples, "grid points in [0,1]");
  subs["eigfun"]->add_option("--normalize", normalize, "series or l2");
  subs["sincurve"]->add_option("--samples", c.samples, "grid points in [0, z-max]");
  subs["sincurve"]->add_option("--z-max", c.z_max, "upper end of the z range");
  subs["rates"]->add_option("--levels", levels, "level range a:b")->required();
  subs["rates"]->add_option("--target", target, "eigenvalues or eigenfunction (index m-max)");
  subs["audit"]->add_option("--levels", levels, "level range a:b")->required();
  subs["audit"]->add_option("--z-max", c.z_max, "largest frequency audited");
  subs["oracle-compare"]
      ->add_option("--elements", c.fem_elements, "FEM element counts, comma separated")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << kfeller::cli::error_json(kfeller::ErrorKind::config, e.what()) << '\n';
    return kfeller::exit_code(kfeller::ErrorKind::config);
  }

  try {
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) c.command = kfeller::cli::parse_command(name);
    }
    c.boundary = kfeller::cli::parse_boundary_choice(boundary);
    if (format == "csv") {
      c.format = kfeller::cli::Format::csv;
    } else if (format == "json") {
      c.format = kfeller::cli::Format::json;
    } else {
      throw kfeller::ConfigError("--format must be csv or json");
    }
    if (order != "auto") {
      std::size_t used = 0;
      const long v = std::stol(order, &used);
      if (used != order.size() || v < 1) throw kfeller::ConfigError("--order must be 'auto' or a positive integer");
      c.order = static_cast<std::size_t>(v);
    }
    if (!levels.empty()) c.levels = kfeller::cli::parse_levels(levels);
    if (normalize == "l2") {
      c.normalization = kfeller::cli::Normalization::l2;
    } else if (normalize != "series") {
      throw kfeller::ConfigError("--normalize must be series or l2");
    }
    if (target == "eigenfunction") {
      c.rate_target = kfeller::cli::RateTarget::eigenfunction;
    } else if (target != "eigenvalues") {
      throw kfeller::ConfigError("--target must be eigenvalues or eigenfunction");
    }
  } catch (const kfeller::Error& e) {
    std::cerr << kfeller::cli::error_json(e.kind(), e.what()) << '\n';
    return kfeller::exit_code(e.kind());
  } catch (const std::logic_error&) {
    std::cerr << kfeller::cli::error_json(kfeller::ErrorKind::config,
                                          "--order must be 'auto' or a positive integer")
              << '\n';
    return kfeller::exit_code(kfeller::ErrorKind::config);
  }
  return kfeller::cli::run_and_report(c);
}

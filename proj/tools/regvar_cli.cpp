#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <regvar/commands.hpp>

namespace {

void add_common(CLI::App* sub, regvar::commands::RunConfig& c, bool spec_required) {
  auto* spec = sub->add_option("--spec", c.spec_path, "map spec JSON file");
  if (spec_required) spec->required();
  sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
  sub->add_option("--tol-eq", c.tol_eq, "tolerance of equality atoms")->capture_default_str();
  sub->add_option("--delta0", c.delta0, "largest neighbourhood radius")->capture_default_str();
  sub->add_option("--levels", c.levels, "number of halvings of delta0")->capture_default_str();
  sub->add_option("--resolution", c.resolution, "range pitch as a fraction of delta (0 = auto)")
      ->capture_default_str();
  sub->add_option("--budget", c.budget, "samples, samples per shell or points (0 = command default)")
      ->capture_default_str();
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  namespace cmd = regvar::commands;
  cmd::RunConfig c;
  CLI::App app{"Metric regularity estimates for semialgebraic set-valued maps"};
  app.require_subcommand(1);

  auto* rate = app.add_subcommand("rate", "rate of surjection and regularity at a graph point");
  add_common(rate, c, true);
  rate->add_option("--x", c.x, "point in the domain, comma separated")->required();
  rate->add_option("--y", c.y, "point in the range (defaults to F(x) for polynomial maps)");
  rate->add_flag("--oracle", c.oracle, "also report the dense raster modulus")->group("");

  auto* critical = app.add_subcommand("critical", "critical values, their dimension, porosity and components");
  add_common(critical, c, true);
  critical->add_option("--tau", c.tau, "rate threshold for a critical flag")->capture_default_str();
  critical->add_option("--link", c.link, "linking radius for components (0 = auto)")->capture_default_str();

  auto* asym = app.add_subcommand("asymptotic", "asymptotically critical values over radial shells");
  add_common(asym, c, true);
  asym->add_option("--shells", c.shells, "first:last for [2^k, 2^(k+1)], or lo-hi,lo-hi,...")->capture_default_str();
  asym->add_option("--eta", c.eta, "linear | phi-default | custom:<file>")->capture_default_str();
  asym->add_option("--threshold", c.threshold, "decay threshold for eta * rate")->capture_default_str();

  auto* calc = app.add_subcommand("calculus", "sum, chain and radial rescaling checks");
  add_common(calc, c, false);
  calc->add_option("--rule", c.rule, "sum | chain | radial (with --spec)");
  calc->add_option("--matrix", c.matrix, "A for the sum rule, rows separated by ';'");
  calc->add_option("--inner", c.inner, "inner polynomial map G for the chain rule");
  calc->add_option("--rho", c.rho, "polynomial file for the radial rescaling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  c.command = app.get_subcommands().front()->get_name();

  try {
    const auto result = cmd::run(c);
    std::cout << result.summary;
    return 0;
  } catch (const regvar::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const regvar::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const regvar::DiagnosticError& e) {
    std::cerr << "diagnostic: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

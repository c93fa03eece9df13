// Command-line driver: parses global flags and a subcommand, layers
// flag overrides onto the key=value config, dispatches to the command
// implementations, and maps failures onto the exit-code contract
// (0 success, 2 invalid input, 3 numerical failure).
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sgdsde/errors.hpp"
#include "sgdsde_cli/commands.hpp"
#include "sgdsde_cli/config.hpp"

namespace {

using namespace sgdsde;

// Input/validation problems exit with 2; everything else derived from the
// library error base is a numerical failure and exits with 3.
bool is_validation_error(const Error& e) {
  return dynamic_cast<const NonSymmetric*>(&e) != nullptr ||
         dynamic_cast<const NotPSD*>(&e) != nullptr ||
         dynamic_cast<const LogOfZero*>(&e) != nullptr ||
         dynamic_cast<const DomainError*>(&e) != nullptr ||
         dynamic_cast<const NegativeVariance*>(&e) != nullptr ||
         dynamic_cast<const ParseError*>(&e) != nullptr ||
         dynamic_cast<const WrongShape*>(&e) != nullptr ||
         dynamic_cast<const ConfigError*>(&e) != nullptr ||
         dynamic_cast<const InsufficientPoints*>(&e) != nullptr;
}

void print_stats_line(const std::string& model,
                      const sgdsde::EnsembleStats& stats) {
  const std::size_t last = stats.times.size() - 1;
  std::printf("  %-6s E f(T) = %-12.6g", model.c_str(),
              stats.fn_mean[0][last]);
  std::printf(" mean(T) = (");
  for (Eigen::Index i = 0; i < stats.mean[last].size(); ++i) {
    std::printf("%s%.6g", i ? ", " : "", stats.mean[last](i));
  }
  std::printf(")");
  if (stats.nonfinite_count > 0) {
    std::printf("  [%lld diverged runs frozen]",
                static_cast<long long>(stats.nonfinite_count));
  }
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sgdsde: constant-stepsize SGD and its continuous-time diffusion "
      "proxies — simulation, analytic laws, weak-error and exit-time "
      "experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::string seed_str, runs_str, eta_str;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--seed", seed_str, "master seed (overrides config)");
  app.add_option("--runs", runs_str, "Monte Carlo runs (overrides config)");
  app.add_option("--eta", eta_str, "stepsize (overrides config)");

  std::string fig1_variant = "saddle";
  CLI::App* fig1 = app.add_subcommand(
      "fig1", "quadratic saddle/minimum ensembles vs analytic laws");
  fig1->add_option("--variant", fig1_variant,
                   "saddle (default) or minimum");

  CLI::App* fig2 = app.add_subcommand(
      "fig2", "piecewise-quadratic bimodal landscape ensembles");

  CLI::App* table1 = app.add_subcommand(
      "table1", "weak-error comparison of the proxies on an MLP classifier");

  CLI::App* quad_match = app.add_subcommand(
      "quad-match", "matched-diffusion diagnostics on a quadratic instance");
  quad_match->alias("quad_match");

  std::string coeff_order;
  CLI::App* coeff_verify = app.add_subcommand(
      "coeff-verify", "expansion-coefficient identities and table dump");
  coeff_verify->alias("coeff_verify");
  coeff_verify->add_option("--order", coeff_order, "table order (default 8)");

  std::string escape_kind = "min-exp";
  CLI::App* escape = app.add_subcommand(
      "escape", "first-exit-time scaling probes");
  escape->add_option("--kind", escape_kind,
                     "min-exp (default), max-log, or saddle-compare");

  CLI::App* weak_order = app.add_subcommand(
      "weak-order", "weak-approximation order fit on a smooth 2-d objective");
  weak_order->alias("weak_order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    sgdsde_cli::RunContext ctx;
    ctx.out_dir = out_dir;
    if (!config_path.empty()) {
      ctx.config = sgdsde_cli::ConfigMap::load(config_path);
    }
    if (!seed_str.empty()) {
      ctx.config.set("seed", seed_str);
    }
    if (!runs_str.empty()) {
      ctx.config.set("runs", runs_str);
    }
    if (!eta_str.empty()) {
      ctx.config.set("eta", eta_str);
    }
    if (!coeff_order.empty()) {
      ctx.config.set("order", coeff_order);
    }

    if (fig1->parsed()) {
      const auto s = sgdsde_cli::cmd_fig1(fig1_variant, ctx);
      std::printf("fig1 %s -> %s\n", fig1_variant.c_str(),
                  s.csv_path.c_str());
      for (const std::string& m : s.models) {
        print_stats_line(m, s.mc.at(m));
        const auto& law = s.law.at(m);
        std::printf("  %-6s law    = %-12.6g\n", "", law.f_mean.back());
      }
    } else if (fig2->parsed()) {
      const auto s = sgdsde_cli::cmd_fig2(ctx);
      std::printf("fig2 -> %s\n", s.csv_path.c_str());
      for (const std::string& m : s.models) {
        print_stats_line(m, s.mc.at(m));
      }
    } else if (table1->parsed()) {
      const auto s = sgdsde_cli::cmd_table1(ctx);
      std::printf("table1 -> %s\n", s.csv_path.c_str());
      for (const auto& r : s.rows) {
        std::printf("  %-6s max weak error = %.6g (stderr %.3g, at k=%d)\n",
                    r.model.c_str(), r.max_error, r.stderr_at_max, r.argmax_k);
      }
    } else if (quad_match->parsed()) {
      const auto s = sgdsde_cli::cmd_quad_match(ctx);
      std::printf("quad-match -> %s\n", s.csv_path.c_str());
      std::printf("  %s\n", s.verdict.c_str());
    } else if (coeff_verify->parsed()) {
      const auto s = sgdsde_cli::cmd_coeff_verify(ctx);
      std::printf("coeff-verify (order %d) -> %s\n", s.order,
                  s.csv_path.c_str());
      std::printf(
          "  c: %s  a-symmetry: %s  a-column: %s  a-closed-form: %s  "
          "b-antisymmetry: %s\n",
          s.c_ok ? "ok" : "FAIL", s.a_sym_ok ? "ok" : "FAIL",
          s.a_col_ok ? "ok" : "FAIL", s.a_closed_ok ? "ok" : "FAIL",
          s.b_antisym_ok ? "ok" : "FAIL");
      if (!(s.c_ok && s.a_sym_ok && s.a_col_ok && s.a_closed_ok &&
            s.b_antisym_ok)) {
        return 3;
      }
    } else if (escape->parsed()) {
      const auto s = sgdsde_cli::cmd_escape(escape_kind, ctx);
      std::printf("escape %s -> %s\n", escape_kind.c_str(),
                  s.csv_path.c_str());
      for (std::size_t i = 0; i < s.report.reports.size(); ++i) {
        const auto& r = s.report.reports[i];
        std::printf(
            "  eta=%-8g %-12s E[tau]=%-12.6g censored=%.3g statistic=%.6g\n",
            r.eta, r.method.c_str(), r.E_tau, r.censored_fraction,
            s.report.statistic[i]);
      }
      std::printf("  stable=%s  %s\n", s.report.stable ? "yes" : "no",
                  s.report.detail.c_str());
    } else if (weak_order->parsed()) {
      const auto s = sgdsde_cli::cmd_weak_order(ctx);
      std::printf("weak-order %s -> %s\n", s.model.c_str(),
                  s.csv_path.c_str());
      for (const auto& r : s.rows) {
        std::printf("  eta=%-8g max error=%.6g (stderr %.3g, at k=%d)\n",
                    r.eta, r.max_error, r.stderr_at_max, r.argmax_k);
      }
      if (s.fit_ok) {
        std::printf("  fitted order: %.4f (intercept %.4f)\n", s.slope,
                    s.intercept);
      } else {
        std::printf("  order fit unavailable: %s\n", s.fit_message.c_str());
      }
    }
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_validation_error(e) ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

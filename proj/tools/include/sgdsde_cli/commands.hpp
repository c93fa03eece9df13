#pragma once

// The experiment commands behind the sgdsde CLI.  Each command resolves its
// parameters from a ConfigMap (file merged with flag overrides), runs the
// experiment, writes one CSV plus a JSON run manifest into the output
// directory, and returns its results so tests can assert on them without
// re-parsing files.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sgdsde/escape.hpp"
#include "sgdsde/proxies.hpp"
#include "sgdsde/simulate.hpp"
#include "sgdsde/types.hpp"
#include "sgdsde_cli/config.hpp"

namespace sgdsde_cli {

struct RunContext {
  std::string out_dir = "out";
  ConfigMap config;
};

// Analytic per-time values of one model's law (empty when no law applies).
struct LawSeries {
  std::vector<sgdsde::Vector> mean;           // per recorded time
  std::vector<sgdsde::Vector> second_moment;  // E x_i^2 per coordinate
  std::vector<double> f_mean;                 // E f
};

// Ensemble statistics and analytic laws for the two-dimensional quadratic
// comparison.  Functional index 0 is f, then one x_i^2 per coordinate.
struct Fig1Summary {
  std::vector<double> times;
  std::vector<std::string> models;  // row order: sgd, sme1, sme2, hasme
  std::map<std::string, sgdsde::EnsembleStats> mc;
  std::map<std::string, LawSeries> law;
  std::string csv_path;
};
Fig1Summary cmd_fig1(const std::string& variant, const RunContext& ctx);

// Ensemble means on the piecewise double-well (no analytic laws).
struct Fig2Summary {
  std::vector<double> times;
  std::vector<std::string> models;  // sgd, spf, hasme
  std::map<std::string, sgdsde::EnsembleStats> mc;
  std::string csv_path;
};
Fig2Summary cmd_fig2(const RunContext& ctx);

// Weak error of each diffusion model against the discrete iteration on the
// iris classifier, test functional = the training objective.
struct Table1Row {
  double eta = 0.0;
  double sigma = 0.0;
  std::string model;
  double max_error = 0.0;
  double stderr_at_max = 0.0;
  int argmax_k = 0;
};
struct Table1Summary {
  std::vector<Table1Row> rows;  // sme1, sme2, hasme
  std::string csv_path;
};
Table1Summary cmd_table1(const RunContext& ctx);

// Covariance-matching diagnostics for one quadratic instance, plus law
// residuals against the discrete iteration when a matched factor exists.
struct QuadMatchSummary {
  bool matchable = false;
  double min_eig = 0.0;
  double max_imag = 0.0;
  double mean_residual = 0.0;  // max-abs, when matchable
  double cov_residual = 0.0;
  sgdsde::ExistenceReport existence;
  std::string verdict;  // one-line explanation
  std::string csv_path;
};
QuadMatchSummary cmd_quad_match(const RunContext& ctx);

// Coefficient-table identity checks and a table dump for golden-file
// regression.
struct CoeffVerifySummary {
  int order = 0;
  bool c_ok = false;        // c_s = -1/(s+1)
  bool a_sym_ok = false;    // a_{s,m} = a_{m,s}
  bool a_col_ok = false;    // a_{s,0} = 1/(s+1)
  bool a_closed_ok = false; // a_{s,m} = s! m! / (s+m+1)!
  bool b_antisym_ok = false;  // b_{s,m} + b_{m,s} = 0 for s+m >= 1
  std::string csv_path;
};
CoeffVerifySummary cmd_coeff_verify(const RunContext& ctx);

// Exit-time scaling probes (kinds: min-exp, max-log, saddle-compare).
struct EscapeSummary {
  sgdsde::ProbeReport report;
  std::string csv_path;
};
EscapeSummary cmd_escape(const std::string& kind, const RunContext& ctx);

// Weak-error decay over a stepsize ladder for one model on a smooth
// non-quadratic objective, with a log-log order fit.
struct WeakOrderRow {
  double eta = 0.0;
  double max_error = 0.0;
  double stderr_at_max = 0.0;
  int argmax_k = 0;
};
struct WeakOrderSummary {
  std::string model;
  std::vector<WeakOrderRow> rows;
  bool fit_ok = false;
  double slope = 0.0;
  double intercept = 0.0;
  std::string fit_message;  // reason when fit_ok is false
  std::string csv_path;
};
WeakOrderSummary cmd_weak_order(const RunContext& ctx);

}  // namespace sgdsde_cli

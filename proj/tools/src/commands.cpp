#include "sgdsde_cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <boost/multiprecision/cpp_int.hpp>

#include "sgdsde/coefficients.hpp"
#include "sgdsde/csvio.hpp"
#include "sgdsde/errors.hpp"
#include "sgdsde/linalg.hpp"
#include "sgdsde/problems.hpp"
#include "sgdsde/quadratic_analytics.hpp"

namespace sgdsde_cli {

using json = nlohmann::json;
using namespace sgdsde;

namespace {

constexpr std::uint64_t kStreamStride = std::uint64_t{1} << 40;

// Smooth non-quadratic two-dimensional objective: a coupled quadratic bowl
// with a low-frequency sinusoidal deformation.  Near the usual start point
// the deformation keeps both hessian * gradient (first-order drift
// correction, ~0.9) and the third derivative (~4.6) large and of persistent
// sign, so first- and second-order proxies separate cleanly in weak error;
// eta * ||hessian|| stays below one for stepsizes up to ~0.2.
class SinusoidalBowl : public Objective {
 public:
  static constexpr double kAmp = 0.4;
  static constexpr double kFreq = 2.5;
  int dim() const override { return 2; }
  double value(const Vector& x) const override {
    return 0.4 * (x(0) * x(0) + x(1) * x(1)) +
           kAmp * (std::sin(kFreq * x(0)) + std::sin(kFreq * x(1))) +
           0.1 * x(0) * x(1);
  }
  Vector gradient(const Vector& x) const override {
    Vector g(2);
    g(0) = 0.8 * x(0) + kAmp * kFreq * std::cos(kFreq * x(0)) + 0.1 * x(1);
    g(1) = 0.8 * x(1) + kAmp * kFreq * std::cos(kFreq * x(1)) + 0.1 * x(0);
    return g;
  }
  Matrix hessian(const Vector& x) const override {
    Matrix h(2, 2);
    h(0, 0) = 0.8 - kAmp * kFreq * kFreq * std::sin(kFreq * x(0));
    h(1, 1) = 0.8 - kAmp * kFreq * kFreq * std::sin(kFreq * x(1));
    h(0, 1) = h(1, 0) = 0.1;
    return h;
  }
};

std::string joined_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

// Compact decimal for filenames (full precision belongs in the CSV cells).
std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

json base_tolerances() {
  return json{{"eig_orthogonality", 1e-10},
              {"eig_reconstruction_rel", 1e-9},
              {"psd_sqrt_clamp_rel", 1e-10},
              {"diffusion_kernel_series_cutoff", 1e-6},
              {"ou_limit_denominator", 1e-10},
              {"law_match_rel", 1e-9},
              {"match_imag_rel", 1e-10}};
}

void write_manifest(const std::string& csv_path, const std::string& command,
                    const json& config, std::uint64_t seed,
                    const json& tolerances) {
  std::filesystem::path p(csv_path);
  p.replace_extension();           // strip .csv
  p += ".manifest.json";
  json manifest;
  manifest["schema_version"] = 1;
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["seed"] = seed;
  manifest["output_csv"] = std::filesystem::path(csv_path).filename().string();
  manifest["tolerances"] = tolerances;
  std::ofstream out(p);
  if (!out) {
    throw Error("cannot write manifest: " + p.string());
  }
  out << manifest.dump(2) << '\n';
}

double quad_f_mean(const Matrix& A, const Vector& mean, const Matrix& cov) {
  return 0.5 * (mean.dot(A * mean) + (A * cov).trace());
}

// Ensemble time-series rows in the shared stats schema.
void write_stats_rows(CsvWriter& csv, const std::string& model,
                      const EnsembleStats& stats, const LawSeries* law) {
  const int dim = stats.mean.empty() ? 0 : static_cast<int>(stats.mean[0].size());
  for (std::size_t k = 0; k < stats.times.size(); ++k) {
    const std::string t = fmt_double(stats.times[k]);
    for (int i = 0; i < dim; ++i) {
      csv.row({t, model + "_mc_mean", std::to_string(i),
               fmt_double(stats.mean[k](i)), fmt_double(stats.mean_stderr[k](i))});
    }
    for (int i = 0; i < dim; ++i) {
      csv.row({t, model + "_mc_second_moment", std::to_string(i),
               fmt_double(stats.fn_mean[1 + i][k]),
               fmt_double(stats.fn_stderr[1 + i][k])});
    }
    csv.row({t, model + "_mc_fmean", "-1", fmt_double(stats.fn_mean[0][k]),
             fmt_double(stats.fn_stderr[0][k])});
    if (law != nullptr) {
      for (int i = 0; i < dim; ++i) {
        csv.row({t, model + "_law_mean", std::to_string(i),
                 fmt_double(law->mean[k](i)), "0"});
      }
      for (int i = 0; i < dim; ++i) {
        csv.row({t, model + "_law_second_moment", std::to_string(i),
                 fmt_double(law->second_moment[k](i)), "0"});
      }
      csv.row({t, model + "_law_fmean", "-1", fmt_double(law->f_mean[k]), "0"});
    }
  }
}

std::vector<Functional> quad_functionals(const Objective& obj, int dim) {
  std::vector<Functional> fns;
  fns.push_back([&obj](const Vector& x) { return obj.value(x); });
  for (int i = 0; i < dim; ++i) {
    fns.push_back([i](const Vector& x) { return x(i) * x(i); });
  }
  return fns;
}

}  // namespace

Fig1Summary cmd_fig1(const std::string& variant, const RunContext& ctx) {
  if (variant != "saddle" && variant != "minimum") {
    throw ConfigError("fig1 variant must be 'saddle' or 'minimum', got '" +
                      variant + "'");
  }
  const ConfigMap& cfg = ctx.config;
  cfg.require_known({"seed", "runs", "eta", "steps", "substeps",
                     "noise.sigma2", "x0.x", "x0.y"});
  const double eta = cfg.get_double("eta", 2.1);
  const int runs = cfg.get_int("runs", 1000);
  const int steps = cfg.get_int("steps", 6);
  // The supercritical complex mode rotates by pi per eta of time, so the
  // Euler scheme inflates second moments by about exp(3 pi^2 / substeps)
  // over six steps; 2000 substeps keeps that bias inside Monte Carlo noise.
  const int substeps = cfg.get_int("substeps", 2000);
  const double sigma2 = cfg.get_double("noise.sigma2", 1.0);
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  Vector x0(2);
  x0 << cfg.get_double("x0.x", 1.0), cfg.get_double("x0.y", 1.0);

  Matrix A = Matrix::Identity(2, 2);
  if (variant == "saddle") {
    A(1, 1) = -1.0;
  }
  const QuadraticObjective obj(A);
  const NoiseModelPtr noise = make_isotropic_noise(2, sigma2);
  const Matrix Sigma = sigma2 * Matrix::Identity(2, 2);
  const double t_end = steps * eta;
  const std::vector<Functional> fns = quad_functionals(obj, 2);

  Fig1Summary out;
  out.models = {"sgd", "sme1", "sme2", "hasme"};

  out.mc["sgd"] = mc_run(
      [&](CounterRng& rng) { return run_sgd(obj, *noise, eta, x0, steps, rng); },
      runs, seed, fns, 0 * kStreamStride);
  {
    const SdeModel m = build_sme1(obj, noise, eta);
    out.mc["sme1"] = mc_run(
        [&](CounterRng& rng) {
          return euler_maruyama(m, x0, t_end, substeps, rng);
        },
        runs, seed, fns, 1 * kStreamStride);
  }
  {
    const SdeModel m = build_sme2(obj, noise, eta);
    out.mc["sme2"] = mc_run(
        [&](CounterRng& rng) {
          return euler_maruyama(m, x0, t_end, substeps, rng);
        },
        runs, seed, fns, 2 * kStreamStride);
  }
  const bool supercritical =
      (eta * eig_sym(A).lambda.array() > 1.0).any();
  {
    const SdeModel m = build_hasme(
        obj, noise, eta,
        supercritical ? SdeMode::complex_quadratic : SdeMode::real);
    out.mc["hasme"] = mc_run(
        [&](CounterRng& rng) {
          return euler_maruyama(m, x0, t_end, substeps, rng);
        },
        runs, seed, fns, 3 * kStreamStride);
  }
  out.times = out.mc["sgd"].times;

  // Analytic laws at the shared times.  The Hessian-aware law reports the
  // real-part marginal: mean Re(m), variance (Gamma + C)/2 restricted to the
  // real part.
  MatchResult match;
  ComplexVector S;
  if (supercritical) {
    match = complex_match_D(A, Sigma, eta);
    if (!match.matchable) {
      std::ostringstream msg;
      msg << "fig1: no matched diffusion factor for this instance (min "
          << "eigenvalue " << match.min_eig << ")";
      throw MatchConditionsViolated(msg.str());
    }
    S.resize(match.basis.lambda.size());
    for (Eigen::Index i = 0; i < S.size(); ++i) {
      S(i) = complex_log(Complex(1.0 - eta * match.basis.lambda(i), 0.0)) / eta;
    }
  }
  for (int k = 0; k <= steps; ++k) {
    const double t = k * eta;
    auto push = [&](const std::string& model, const Vector& mean,
                    const Matrix& v) {
      LawSeries& ls = out.law[model];
      ls.mean.push_back(mean);
      ls.second_moment.push_back(v.diagonal() + mean.cwiseProduct(mean));
      ls.f_mean.push_back(quad_f_mean(A, mean, v));
    };
    const GaussianLaw gl = sgd_law(A, Sigma, eta, x0, k);
    push("sgd", gl.mean, gl.cov);
    const GaussianLaw l1 = sme1_law(A, sigma2, eta, x0, t);
    push("sme1", l1.mean, l1.cov);
    const GaussianLaw l2 = sme2_law(A, sigma2, eta, x0, t);
    push("sme2", l2.mean, l2.cov);
    if (supercritical) {
      const ComplexGaussianLaw cl =
          complex_ou_law(match.basis.U, S, match.D.cast<Complex>(), t, x0);
      const Vector mean = cl.mean.real();
      const Matrix v_raw = 0.5 * (cl.Gamma + cl.C).real();
      push("hasme", mean, Matrix((v_raw + v_raw.transpose()) / 2.0));
    } else {
      const GaussianLaw hl = hasme_law_quadratic(A, Sigma, eta, x0, k);
      push("hasme", hl.mean, hl.cov);
    }
  }

  out.csv_path = joined_path(ctx.out_dir, "fig1_" + variant + ".csv");
  CsvWriter csv(out.csv_path, {"t", "stat_name", "dim_index", "value",
                               "stderr"});
  for (const std::string& model : out.models) {
    write_stats_rows(csv, model, out.mc[model], &out.law[model]);
  }

  json config{{"variant", variant},      {"eta", eta},
              {"runs", runs},            {"steps", steps},
              {"substeps", substeps},    {"noise.sigma2", sigma2},
              {"x0", {x0(0), x0(1)}},    {"hasme_mode",
               supercritical ? "complex" : "real"}};
  write_manifest(out.csv_path, "fig1", config, seed, base_tolerances());
  return out;
}

Fig2Summary cmd_fig2(const RunContext& ctx) {
  const ConfigMap& cfg = ctx.config;
  cfg.require_known(
      {"seed", "runs", "eta", "steps", "substeps", "noise.sigma2", "x0"});
  const double eta = cfg.get_double("eta", 0.999);
  const int runs = cfg.get_int("runs", 100);
  const int steps = cfg.get_int("steps", 200);
  const int substeps = cfg.get_int("substeps", 100);
  const double sigma2 = cfg.get_double("noise.sigma2", 1.0);
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  Vector x0(1);
  x0 << cfg.get_double("x0", 0.0);

  const BimodalPiecewise obj;
  const NoiseModelPtr noise = make_isotropic_noise(1, sigma2);
  const double t_end = steps * eta;
  const std::vector<Functional> fns = quad_functionals(obj, 1);

  Fig2Summary out;
  out.models = {"sgd", "spf", "hasme"};
  out.mc["sgd"] = mc_run(
      [&](CounterRng& rng) { return run_sgd(obj, *noise, eta, x0, steps, rng); },
      runs, seed, fns, 0 * kStreamStride);
  {
    const SdeModel m = build_spf(obj, noise, eta);
    out.mc["spf"] = mc_run(
        [&](CounterRng& rng) {
          return euler_maruyama(m, x0, t_end, substeps, rng);
        },
        runs, seed, fns, 1 * kStreamStride);
  }
  {
    const SdeModel m = build_hasme(obj, noise, eta, SdeMode::real);
    out.mc["hasme"] = mc_run(
        [&](CounterRng& rng) {
          return euler_maruyama(m, x0, t_end, substeps, rng);
        },
        runs, seed, fns, 2 * kStreamStride);
  }
  out.times = out.mc["sgd"].times;

  out.csv_path = joined_path(ctx.out_dir, "fig2.csv");
  CsvWriter csv(out.csv_path, {"t", "stat_name", "dim_index", "value",
                               "stderr"});
  for (const std::string& model : out.models) {
    write_stats_rows(csv, model, out.mc[model], nullptr);
  }

  json config{{"eta", eta},           {"runs", runs},
              {"steps", steps},       {"substeps", substeps},
              {"noise.sigma2", sigma2}, {"x0", x0(0)}};
  write_manifest(out.csv_path, "fig2", config, seed, base_tolerances());
  return out;
}

Table1Summary cmd_table1(const RunContext& ctx) {
  const ConfigMap& cfg = ctx.config;
  cfg.require_known(
      {"seed", "runs", "eta", "sigma", "k", "substeps", "iris", "init_seed"});
  const double eta = cfg.get_double("eta", 0.5);
  const double sigma = cfg.get_double("sigma", 0.01);
  const int runs = cfg.get_int("runs", 100);
  const int K = cfg.get_int("k", 10);
  const int substeps = cfg.get_int("substeps", 2);
  const std::string iris_path = cfg.get_string("iris", "data/iris.csv");
  const std::uint64_t init_seed = cfg.get_u64("init_seed", 1);
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  if (sigma < 0.0) {
    throw NegativeVariance("table1: sigma must be nonnegative");
  }

  const MlpClassifier mlp(load_iris(iris_path));
  const Vector x0 = mlp.initial_point(init_seed);
  const NoiseModelPtr noise = make_isotropic_noise(mlp.dim(), sigma * sigma);
  const Functional u = [&mlp](const Vector& x) { return mlp.value(x); };

  Table1Summary out;
  // The exponential (frozen-eigensystem) window stepper keeps the integrator
  // bias far below the model differences at a single substep per window,
  // which an Euler scheme only reaches with orders of magnitude more steps.
  auto run_model = [&](const std::string& name, ProxyKind kind) {
    const WindowStepper stepper = make_ou_window_stepper(mlp, noise, eta, kind);
    const WeakErrorReport rep =
        weak_error(mlp, *noise, stepper, u, eta, K, runs, seed, x0, substeps);
    out.rows.push_back(
        {eta, sigma, name, rep.max_error, rep.stderr_at_max, rep.argmax_k});
  };
  run_model("sme1", ProxyKind::sme1);
  run_model("sme2", ProxyKind::sme2);
  run_model("hasme", ProxyKind::hasme);

  out.csv_path = joined_path(
      ctx.out_dir,
      "table1_eta" + short_num(eta) + "_sigma" + short_num(sigma) + ".csv");
  CsvWriter csv(out.csv_path,
                {"eta", "sigma", "model", "max_error", "stderr", "argmax_k"});
  for (const Table1Row& r : out.rows) {
    csv.row({fmt_double(r.eta), fmt_double(r.sigma), r.model,
             fmt_double(r.max_error), fmt_double(r.stderr_at_max),
             std::to_string(r.argmax_k)});
  }

  json config{{"eta", eta},           {"sigma", sigma},
              {"runs", runs},         {"k", K},
              {"substeps", substeps}, {"iris", iris_path},
              {"init_seed", init_seed}};
  write_manifest(out.csv_path, "table1", config, seed, base_tolerances());
  return out;
}

QuadMatchSummary cmd_quad_match(const RunContext& ctx) {
  const ConfigMap& cfg = ctx.config;
  cfg.require_known({"seed", "eta", "k", "A.a11", "A.a12", "A.a22",
                     "sigma.s11", "sigma.s12", "sigma.s22", "x0.x", "x0.y"});
  const double eta = cfg.get_double("eta", 0.5);
  const int k = cfg.get_int("k", 10);
  Matrix A(2, 2);
  A << cfg.get_double("A.a11", 1.0), cfg.get_double("A.a12", 0.0),
      cfg.get_double("A.a12", 0.0), cfg.get_double("A.a22", -1.0);
  Matrix Sigma(2, 2);
  Sigma << cfg.get_double("sigma.s11", 1.0), cfg.get_double("sigma.s12", 2.0),
      cfg.get_double("sigma.s12", 2.0), cfg.get_double("sigma.s22", 4.0);
  Vector x0(2);
  x0 << cfg.get_double("x0.x", 1.0), cfg.get_double("x0.y", 1.0);
  const std::uint64_t seed = cfg.get_u64("seed", 1);

  const QuadraticObjective obj(A);
  const NoiseModelPtr noise = make_constant_noise(Sigma);

  QuadMatchSummary out;
  const MatchResult match = complex_match_D(A, Sigma, eta);
  out.matchable = match.matchable;
  out.min_eig = match.min_eig;
  out.max_imag = match.max_imag;
  out.existence = hasme_existence_check(obj, *noise, x0, eta);

  double mean_resid = std::numeric_limits<double>::quiet_NaN();
  double cov_resid = std::numeric_limits<double>::quiet_NaN();
  if (match.matchable) {
    const GaussianLaw hl = hasme_law_quadratic(A, Sigma, eta, x0, k);
    const GaussianLaw sl = sgd_law(A, Sigma, eta, x0, k);
    mean_resid = max_abs(Vector(hl.mean - sl.mean));
    cov_resid = max_abs(Matrix(hl.cov - sl.cov));
    std::ostringstream v;
    v << "matched: law equals the discrete iteration at k=" << k
      << " (mean residual " << mean_resid << ", covariance residual "
      << cov_resid << ")";
    out.verdict = v.str();
  } else {
    std::ostringstream v;
    v << "unmatchable: diffusion target matrix has min eigenvalue "
      << match.min_eig << " (max imaginary entry " << match.max_imag << ");";
    v << (out.existence.commuting ? " hessian and covariance commute"
                                  : " hessian and covariance do not commute");
    if (std::isfinite(out.existence.eta_threshold)) {
      v << "; eta " << eta
        << (eta <= out.existence.eta_threshold ? " at or below" : " above")
        << " the sufficient bound " << out.existence.eta_threshold;
    }
    out.verdict = v.str();
  }
  out.mean_residual = mean_resid;
  out.cov_residual = cov_resid;

  out.csv_path = joined_path(ctx.out_dir, "quad_match.csv");
  CsvWriter csv(out.csv_path, {"quantity", "value"});
  csv.row({"matchable", out.matchable ? "1" : "0"});
  csv.row({"target_min_eig", fmt_double(out.min_eig)});
  csv.row({"target_max_imag", fmt_double(out.max_imag)});
  csv.row({"mean_residual", fmt_double(mean_resid)});
  csv.row({"cov_residual", fmt_double(cov_resid)});
  csv.row({"commuting", out.existence.commuting ? "1" : "0"});
  csv.row({"commutator_residual",
           fmt_double(out.existence.commutator_residual)});
  csv.row({"diffusion_psd", out.existence.psd ? "1" : "0"});
  csv.row({"diffusion_min_eig", fmt_double(out.existence.min_eig)});
  csv.row({"eta_threshold", fmt_double(out.existence.eta_threshold)});

  json config{{"eta", eta},
              {"k", k},
              {"A", {A(0, 0), A(0, 1), A(1, 1)}},
              {"sigma", {Sigma(0, 0), Sigma(0, 1), Sigma(1, 1)}},
              {"x0", {x0(0), x0(1)}},
              {"verdict", out.verdict}};
  write_manifest(out.csv_path, "quad-match", config, seed, base_tolerances());
  return out;
}

CoeffVerifySummary cmd_coeff_verify(const RunContext& ctx) {
  const ConfigMap& cfg = ctx.config;
  cfg.require_known({"seed", "order"});
  const int P = cfg.get_int("order", 8);
  const std::uint64_t seed = cfg.get_u64("seed", 1);

  CoeffVerifySummary out;
  out.order = P;
  const Series2D a = a_coeff_table(P);
  const int Pb = std::min(P, 20);
  const Series2D b = b_coeff_table(Pb);

  out.c_ok = true;
  for (int s = 0; s <= std::min(P, 20); ++s) {
    if (c_coeff(s) != Rational(-1, s + 1)) {
      out.c_ok = false;
    }
  }

  const BigFloat tol("1e-18");
  out.a_sym_ok = true;
  out.a_col_ok = true;
  out.a_closed_ok = true;
  // Closed form a_{s,m} = s! m! / (s+m+1)!; exact when the table is exact.
  std::vector<Rational> fact(2 * P + 2);
  fact[0] = 1;
  for (int i = 1; i <= 2 * P + 1; ++i) {
    fact[i] = fact[i - 1] * i;
  }
  for (int s = 0; s <= P; ++s) {
    if (a.is_exact()) {
      if (a.exact_at(s, 0) != Rational(1, s + 1)) {
        out.a_col_ok = false;
      }
    } else if (abs(a.wide_at(s, 0) - BigFloat(1) / (s + 1)) > tol) {
      out.a_col_ok = false;
    }
    for (int m = 0; m <= P; ++m) {
      if (a.is_exact()) {
        if (a.exact_at(s, m) != a.exact_at(m, s)) {
          out.a_sym_ok = false;
        }
        if (a.exact_at(s, m) != fact[s] * fact[m] / fact[s + m + 1]) {
          out.a_closed_ok = false;
        }
      } else {
        if (abs(a.wide_at(s, m) - a.wide_at(m, s)) > tol) {
          out.a_sym_ok = false;
        }
        const BigFloat closed = BigFloat(static_cast<Rational>(
            fact[s] * fact[m] / fact[s + m + 1]));
        if (abs(a.wide_at(s, m) - closed) > tol * (1 + abs(closed))) {
          out.a_closed_ok = false;
        }
      }
    }
  }

  out.b_antisym_ok = true;
  for (int s = 0; s <= Pb; ++s) {
    for (int m = 0; m <= Pb; ++m) {
      if (s + m == 0) {
        if (b.exact_at(0, 0) != Rational(1, 2)) {
          out.b_antisym_ok = false;
        }
      } else if (b.exact_at(s, m) + b.exact_at(m, s) != 0) {
        out.b_antisym_ok = false;
      }
    }
  }

  out.csv_path = joined_path(ctx.out_dir, "coeff_tables.csv");
  CsvWriter csv(out.csv_path, {"kind", "s", "m", "value"});
  for (int s = 0; s <= std::min(P, 20); ++s) {
    csv.row({"c", std::to_string(s), "-1",
             fmt_double(-1.0 / static_cast<double>(s + 1))});
  }
  for (int s = 0; s <= P; ++s) {
    for (int m = 0; m <= P; ++m) {
      csv.row({"a", std::to_string(s), std::to_string(m),
               fmt_double(a.at(s, m))});
    }
  }
  for (int s = 0; s <= Pb; ++s) {
    for (int m = 0; m <= Pb; ++m) {
      csv.row({"b", std::to_string(s), std::to_string(m),
               fmt_double(b.at(s, m))});
    }
  }

  json config{{"order", P},
              {"checks",
               {{"c_values", out.c_ok},
                {"a_symmetry", out.a_sym_ok},
                {"a_first_column", out.a_col_ok},
                {"a_closed_form", out.a_closed_ok},
                {"b_antisymmetry", out.b_antisym_ok}}}};
  json tols = base_tolerances();
  tols["coefficient_identity"] = 1e-18;
  write_manifest(out.csv_path, "coeff-verify", config, seed, tols);
  return out;
}

EscapeSummary cmd_escape(const std::string& kind, const RunContext& ctx) {
  ProbeKind pk;
  if (kind == "min-exp" || kind == "min_exp") {
    pk = ProbeKind::min_exp;
  } else if (kind == "max-log" || kind == "max_log") {
    pk = ProbeKind::max_log;
  } else if (kind == "saddle-compare" || kind == "saddle_compare") {
    pk = ProbeKind::saddle_compare;
  } else {
    throw ConfigError(
        "escape kind must be min-exp, max-log, or saddle-compare; got '" +
        kind + "'");
  }
  const ConfigMap& cfg = ctx.config;
  cfg.require_known({"seed", "eta", "etas", "lambda", "sigma2", "half_width",
                     "quad_tol", "runs", "t_cap_factor", "substeps", "A.a11",
                     "A.a12", "A.a22", "x0.x", "x0.y"});
  const std::uint64_t seed = cfg.get_u64("seed", 1);

  ProbeConfig pc;
  pc.seed = seed;
  if (cfg.has("eta")) {
    pc.etas = {cfg.get_double("eta", 0.0)};
  } else if (pk == ProbeKind::saddle_compare) {
    pc.etas = cfg.get_double_list("etas", {0.05});
  } else {
    pc.etas = cfg.get_double_list("etas", {0.1, 0.05, 0.025, 0.0125});
  }
  pc.lambda = cfg.get_double("lambda", 1.0);
  pc.sigma2 = cfg.get_double("sigma2", 1.0);
  pc.half_width = cfg.get_double("half_width", 0.5);
  pc.quad_tol = cfg.get_double("quad_tol", 1e-6);
  pc.n_runs = cfg.get_int("runs", 1000);
  pc.t_cap_factor = cfg.get_double("t_cap_factor", 1000.0);
  pc.substeps = cfg.get_int("substeps", 20);
  pc.A.resize(2, 2);
  pc.A << cfg.get_double("A.a11", 10.0), cfg.get_double("A.a12", 0.0),
      cfg.get_double("A.a12", 0.0), cfg.get_double("A.a22", -50.0);
  pc.x0.resize(2);
  pc.x0 << cfg.get_double("x0.x", 0.45), cfg.get_double("x0.y", 0.001);

  EscapeSummary out;
  out.report = scaling_probe(pk, pc);

  std::string stem = kind;
  for (char& c : stem) {
    if (c == '-') {
      c = '_';
    }
  }
  out.csv_path = joined_path(ctx.out_dir, "escape_" + stem + ".csv");
  CsvWriter csv(out.csv_path,
                {"eta", "method", "E_tau", "stderr_or_tol",
                 "censored_fraction"});
  const bool saddle = pk == ProbeKind::saddle_compare;
  for (std::size_t i = 0; i < out.report.reports.size(); ++i) {
    const ExitTimeReport& r = out.report.reports[i];
    std::string method = r.method;
    if (saddle) {
      method += i == 0 ? ":hasme" : ":sme2";
    }
    csv.row({fmt_double(r.eta), method, fmt_double(r.E_tau),
             fmt_double(r.tol_or_stderr), fmt_double(r.censored_fraction)});
  }

  json config{{"kind", kind},
              {"etas", pc.etas},
              {"lambda", pc.lambda},
              {"sigma2", pc.sigma2},
              {"half_width", pc.half_width},
              {"quad_tol", pc.quad_tol},
              {"runs", pc.n_runs},
              {"t_cap_factor", pc.t_cap_factor},
              {"substeps", pc.substeps},
              {"stable", out.report.stable},
              {"statistic", out.report.statistic},
              {"detail", out.report.detail}};
  if (saddle) {
    config["A"] = {pc.A(0, 0), pc.A(0, 1), pc.A(1, 1)};
    config["x0"] = {pc.x0(0), pc.x0(1)};
  }
  write_manifest(out.csv_path, "escape", config, seed, base_tolerances());
  return out;
}

WeakOrderSummary cmd_weak_order(const RunContext& ctx) {
  const ConfigMap& cfg = ctx.config;
  cfg.require_known({"seed", "model", "etas", "runs", "horizon", "substeps",
                     "sigma2", "x0.x", "x0.y"});
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const std::string model_name = cfg.get_string("model", "hasme");
  const std::vector<double> etas =
      cfg.get_double_list("etas", {0.04, 0.02, 0.01});
  const int runs = cfg.get_int("runs", 2000);
  const double horizon = cfg.get_double("horizon", 0.2);
  const double sigma2 = cfg.get_double("sigma2", 1.0);
  std::vector<double> substeps_list =
      cfg.get_double_list("substeps", {20, 40, 80});
  if (substeps_list.size() == 1) {
    substeps_list.assign(etas.size(), substeps_list[0]);
  }
  if (substeps_list.size() != etas.size()) {
    throw ConfigError("weak-order: substeps list must have one entry or one "
                      "per eta");
  }
  Vector x0(2);
  x0 << cfg.get_double("x0.x", 0.3), cfg.get_double("x0.y", -0.2);

  const SinusoidalBowl obj;
  const NoiseModelPtr noise = make_isotropic_noise(2, sigma2);
  const Functional u = [&obj](const Vector& x) { return obj.value(x); };

  auto build = [&](double eta) -> SdeModel {
    if (model_name == "sme1") {
      return build_sme1(obj, noise, eta);
    }
    if (model_name == "sme2") {
      return build_sme2(obj, noise, eta);
    }
    if (model_name == "spf") {
      return build_spf(obj, noise, eta);
    }
    if (model_name == "hasme") {
      return build_hasme(obj, noise, eta, SdeMode::real);
    }
    throw ConfigError("weak-order: unknown model '" + model_name + "'");
  };

  WeakOrderSummary out;
  out.model = model_name;
  out.csv_path =
      joined_path(ctx.out_dir, "weak_order_" + model_name + ".csv");
  CsvWriter csv(out.csv_path, {"eta", "k", "t", "error", "stderr"});

  std::vector<double> errors;
  std::vector<double> stderrs;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double eta = etas[i];
    const int K = static_cast<int>(std::lround(horizon / eta));
    if (K < 1 || std::abs(K * eta - horizon) > 1e-9 * horizon) {
      throw ConfigError(
          "weak-order: horizon must be an integer multiple of each eta");
    }
    const SdeModel m = build(eta);
    const WeakErrorReport rep =
        weak_error(obj, *noise, m, u, eta, K, runs, seed, x0,
                   static_cast<int>(substeps_list[i]));
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      csv.row({fmt_double(eta), std::to_string(k), fmt_double(rep.times[k]),
               fmt_double(rep.per_k_error[k]),
               fmt_double(rep.per_k_stderr[k])});
    }
    out.rows.push_back({eta, rep.max_error, rep.stderr_at_max, rep.argmax_k});
    errors.push_back(rep.max_error);
    stderrs.push_back(rep.stderr_at_max);
  }

  try {
    const OrderFit fit = weak_order_fit(etas, errors, stderrs);
    out.fit_ok = true;
    out.slope = fit.slope;
    out.intercept = fit.intercept;
  } catch (const BelowNoiseFloor& e) {
    out.fit_message = e.what();
  } catch (const InsufficientPoints& e) {
    out.fit_message = e.what();
  }

  json config{{"model", model_name},
              {"etas", etas},
              {"runs", runs},
              {"horizon", horizon},
              {"sigma2", sigma2},
              {"substeps", substeps_list},
              {"x0", {x0(0), x0(1)}},
              {"fit_ok", out.fit_ok},
              {"slope", out.slope},
              {"intercept", out.intercept},
              {"fit_message", out.fit_message}};
  write_manifest(out.csv_path, "weak-order", config, seed, base_tolerances());
  return out;
}

}  // namespace sgdsde_cli

#include "fsilab/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>

#include "fsilab/evolution.hpp"

namespace fsilab {

using json = nlohmann::ordered_json;

namespace {

namespace fs = std::filesystem;

// Artifacts leave out output_dir so runs into different directories compare
// byte for byte.
std::string provenance(const RunConfig& cfg, const std::string& command) {
  std::ostringstream o;
  o << "# fsilab " << command << '\n'
    << "# config_hash=" << config_hash(cfg) << " mode=" << to_string(cfg.mode)
    << " rho=" << format_double(cfg.rho) << " n_fluid=" << cfg.n_fluid << '\n';
  std::istringstream lines(serialize(cfg));
  std::string line;
  while (std::getline(lines, line))
    if (line.rfind("output_dir=", 0) != 0) o << "# config " << line << '\n';
  return o.str();
}

void write_csv(const RunConfig& cfg, const std::string& command, const std::string& name,
               const std::vector<std::string>& extra_comments, const std::string& columns,
               const std::vector<std::vector<double>>& cols) {
  fs::create_directories(cfg.output_dir);
  std::ofstream f(fs::path(cfg.output_dir) / name, std::ios::binary);
  if (!f) throw ConfigError("output_dir: cannot write " + name);
  f << provenance(cfg, command);
  for (const auto& c : extra_comments) f << "# " << c << '\n';
  f << columns << '\n';
  const size_t rows = cols.empty() ? 0 : cols.front().size();
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols.size(); ++c) f << (c ? "," : "") << format_double(cols[c][r]);
    f << '\n';
  }
}

json config_json(const RunConfig& cfg) {
  json j;
  std::istringstream lines(serialize(cfg));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (line.substr(0, eq) != "output_dir") j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

void write_summary(const RunConfig& cfg, const std::string& name, const json& results) {
  json j;
  j["config_hash"] = config_hash(cfg);
  j["mode"] = to_string(cfg.mode);
  j["rho"] = cfg.rho;
  j["n_fluid"] = cfg.n_fluid;
  j["config"] = config_json(cfg);
  j["results"] = results;
  fs::create_directories(cfg.output_dir);
  std::ofstream f(fs::path(cfg.output_dir) / name, std::ios::binary);
  if (!f) throw ConfigError("output_dir: cannot write " + name);
  f << j.dump(2) << '\n';
}

json spectrum_json(const SpectrumReport& s) {
  return {{"eigenvalue_count", s.eigs.size()},
          {"max_real_part", s.max_real_part},
          {"min_abs_real_part", s.min_abs_real_part},
          {"imag_axis_margin", s.imag_axis_margin},
          {"max_abs_imag", s.max_abs_imag}};
}

Vec random_coords(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec y(dim);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = nd(rng);
  return y;
}

double energy_diff(const StateVector& a, const StateVector& b, const Model& m) {
  return energy_norm({a.w - b.w, a.v - b.v, a.u - b.u}, m);
}

}  // namespace

int cmd_spectrum(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Problem pr(cfg.model_params());
  const ReducedGenerator red = reduce(pr.gen);
  const SpectrumReport spec = compute_spectrum(red);
  std::vector<double> re, im;
  for (const cplx& z : spec.eigs) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  write_csv(cfg, "spectrum", "spectrum.csv", {}, "re,im", {re, im});
  json res = spectrum_json(spec);
  res["dim"] = red.dim;
  res["reduce_consistency"] = red.consistency;
  write_summary(cfg, "spectrum.json", res);
  const bool ok = spec.max_real_part < 0;
  log << "spectrum: dim=" << red.dim << " max Re=" << format_double(spec.max_real_part)
      << " margin=" << format_double(spec.imag_axis_margin) << (ok ? "" : "  [Re >= 0 found]")
      << '\n';
  return ok ? kPass : kPropertyFailure;
}

int cmd_resolvent_sweep(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Problem pr(cfg.model_params());
  const ReducedGenerator red = reduce(pr.gen);
  const SpectrumReport spec = compute_spectrum(red);
  const auto betas = log_spaced(cfg.beta_min, cfg.beta_max, cfg.beta_count);
  ResolventSweep sw;
  try {
    sw = resolvent_sweep(red.A_red, betas, {cfg.fit_lo, cfg.fit_hi}, spec.max_abs_imag);
  } catch (const NumericallySingular& e) {
    log << "resolvent-sweep: " << e.what() << '\n';
    return kPropertyFailure;
  }
  const DecayPrediction pred = predict_decay(sw);
  const ResonanceGrowth res =
      resonance_growth(red.A_red, spec, cfg.beta_min, std::min(cfg.beta_max, 0.5 * spec.max_abs_imag));

  write_csv(cfg, "resolvent-sweep", "resolvent.csv", {"window caveat: " + sw.caveat}, "beta,norm",
            {sw.betas, sw.norms});
  json out;
  out["fitted_alpha"] = sw.fitted_alpha;
  out["fit_window"] = {sw.fit_window.lo, sw.fit_window.hi};
  out["fit_r2"] = sw.fit_r2;
  out["fit_points"] = sw.fit_points;
  out["spearman"] = sw.spearman;
  out["cutoff_beta"] = sw.cutoff_beta;
  out["window_caveat"] = sw.caveat;
  out["margins"] = spectrum_json(spec);
  out["prediction"] = {{"exponential_regime", pred.exponential_regime},
                       {"predicted_rate_exponent",
                        pred.exponential_regime ? json(nullptr) : json(pred.predicted_rate_exponent)}};
  out["resonance_diagnostic"] = {{"points", res.betas.size()},
                                 {"alpha", res.fit.slope},
                                 {"r2", res.fit.r2}};
  write_summary(cfg, "resolvent.json", out);
  log << "resolvent-sweep: alpha=" << format_double(sw.fitted_alpha)
      << " r2=" << format_double(sw.fit_r2) << " spearman=" << format_double(sw.spearman) << '\n'
      << "  caveat: " << sw.caveat << '\n';
  return kPass;
}

namespace {

// Earliest time from which the local log-log slope over a factor-two span
// stays at or below -1/2 up to t_hi; NaN when never reached.
double decay_onset(const DecayTrace& tr, double t_hi) {
  const double dt = tr.times.size() > 1 ? tr.times[1] : 1.0;
  auto norm_at = [&](double t) {
    const size_t i = std::min(tr.times.size() - 1, static_cast<size_t>(std::llround(t / dt)));
    return tr.norm_H[i];
  };
  double onset = NAN;
  for (size_t i = tr.times.size(); i-- > 1;) {
    const double t = tr.times[i];
    if (2 * t > t_hi) continue;
    const double a = norm_at(t), b = norm_at(2 * t);
    if (!(a > 0 && b > 0)) break;
    if (std::log(b / a) / std::log(2.0) > -0.5) break;
    onset = t;
  }
  return onset;
}

}  // namespace

int cmd_evolve(const RunConfig& cfg, std::ostream& log, bool violate_x0) {
  cfg.validate();
  const Problem pr(cfg.model_params());
  const ReducedGenerator red = reduce(pr.gen);
  const SpectrumReport spec = compute_spectrum(red);
  const DecayWindows auto_w = suggest_windows(spec);

  FitWindow inter = auto_w.intermediate;
  bool has_inter = auto_w.has_intermediate;
  if (cfg.decay_hi > 0) {
    inter = {cfg.decay_lo, cfg.decay_hi};
    has_inter = true;
  }
  const FitWindow late = cfg.late_hi > 0 ? FitWindow{cfg.late_lo, cfg.late_hi} : auto_w.late;
  double t_final = cfg.t_final;
  if (t_final <= 0) t_final = (cfg.rho > 0 && has_inter) ? 1.25 * inter.hi : 1.05 * late.hi;

  SmoothData sd = smooth_data(cfg.seed, pr.gen);
  if (violate_x0) sd.x0.u[pr.model.grid().s_faces().front()] += 1.0;
  const Vec packed = pr.model.pack(sd.x0);
  if (pr.model.constraint_defect(packed) > 1e-8)
    throw PreconditionError("evolve: initial state violates the constraints");
  const Vec y0 = pr.subspace.coords(packed);
  const DtChoice dtc = choose_dt(red.A_red, y0, std::min(t_final, 5.0), cfg.dt, cfg.dt_tol);
  const CayleyStepper stepper(red.A_red, dtc.dt);
  const DecayTrace tr = evolve(y0, t_final, stepper, pr.gen.domain_norm(sd.x0));

  // The CSV keeps every stride-th step; fits below use the full trace.
  const size_t stride = std::max<size_t>(1, tr.times.size() / 4000);
  std::vector<std::vector<double>> cols(3);
  for (size_t i = 0; i < tr.times.size(); i += stride) {
    cols[0].push_back(tr.times[i]);
    cols[1].push_back(tr.norm_H[i]);
    cols[2].push_back(tr.t_times_norm[i]);
  }
  write_csv(cfg, "evolve", "decay.csv",
            {"dt=" + format_double(dtc.dt) + " x0_domain_norm=" + format_double(tr.x0_domain_norm) +
             " stride=" + std::to_string(stride)},
            "t,norm_H,t_times_norm", cols);

  json out;
  out["dt"] = {{"chosen", dtc.dt},
               {"observed_order", dtc.observed_order},
               {"relative_error", dtc.relative_error},
               {"halvings", dtc.halvings},
               {"implicit_condition", stepper.condition()}};
  out["t_final"] = t_final;
  out["x0_domain_norm"] = tr.x0_domain_norm;
  out["x0_domain_norm_identity"] = sd.domain_norm;
  out["max_step_growth"] = tr.max_step_growth;
  out["spectral_abscissa"] = spec.max_real_part;
  if (has_inter && inter.hi <= t_final) {
    const DecayFit f = fit_decay(tr, inter);
    out["decay_fit"] = {{"window", {inter.lo, inter.hi}},
                        {"rate_exponent", f.rate_exponent},
                        {"r2", f.r2},
                        {"sup_t_times_norm_over_domain_norm", f.sup_t_times_norm},
                        {"super_polynomial", f.super_polynomial},
                        {"samples", f.samples}};
    const double onset = decay_onset(tr, inter.hi);
    out["onset_time"] = std::isnan(onset) ? json(nullptr) : json(onset);
    log << "evolve: rate_exponent=" << format_double(f.rate_exponent)
        << " r2=" << format_double(f.r2) << " on [" << inter.lo << ", " << inter.hi << "]\n";
  }
  if (late.hi > 0 && late.hi <= t_final) {
    const ExponentialFit e = fit_exponential(tr, late);
    out["exponential_fit"] = {{"window", {late.lo, late.hi}}, {"rate", e.rate}, {"r2", e.r2},
                              {"samples", e.samples}};
    log << "evolve: exponential rate=" << format_double(e.rate) << " r2=" << format_double(e.r2)
        << " on [" << late.lo << ", " << late.hi << "]\n";
  }
  write_summary(cfg, "decay.json", out);
  return tr.max_step_growth <= 1e-12 ? kPass : kPropertyFailure;
}

std::vector<CheckResult> run_invariant_suite(const RunConfig& cfg, const VerifyOptions& opt) {
  ModelParams params = cfg.model_params();
  params.debug_flip_stencil = opt.flip_stencil;
  const Problem pr(params);
  const Model& m = pr.model;
  const Generator& gen = pr.gen;
  const Subspace& sub = pr.subspace;
  const PlateOperators& pl = m.plate();
  const FluidOperators& fl = m.fluid();
  const int samples = opt.quick ? std::min(cfg.samples, 5) : cfg.samples;
  std::mt19937_64 rng(cfg.seed);
  std::vector<CheckResult> out;
  auto check = [&](const std::string& name, double value, double tol) {
    out.push_back({name, value <= tol, value, tol});
  };
  auto rnd_state = [&] { return m.unpack(sub.expand(random_coords(rng, sub.dim()))); };

  check("plate_P_equals_I_plus_rho_AD",
        (pl.P_rho - Mat::Identity(pl.A_D.rows(), pl.A_D.cols()) - cfg.rho * pl.A_D).cwiseAbs().maxCoeff(),
        0.0);
  check("plate_P_half_squared", (pl.P_rho_half * pl.P_rho_half - pl.P_rho).norm() / pl.P_rho.norm(),
        1e-12);
  {
    const Mat& Z = pl.zero_mean_proj;
    const Mat W = pl.quad_w.asDiagonal();
    check("zero_mean_proj_idempotent", (Z * Z - Z).norm(), 1e-12);
    check("zero_mean_proj_self_adjoint", (W * Z - (W * Z).transpose()).norm() / W.norm(), 1e-12);
  }
  {
    std::normal_distribution<double> nd;
    Vec a = Vec::Zero(m.fluid_size());
    for (int f : m.grid().interior_faces()) a[f] = nd(rng);
    Vec q(m.grid().num_cells());
    for (auto& x : q) x = nd(rng);
    q.array() -= q.mean();
    const double cellvol = std::pow(m.grid().h(), m.grid().dim());
    const double lhs = (fl.weights.asDiagonal() * (fl.Grad * q)).dot(a);
    const double rhs = cellvol * q.dot(fl.Div * a);
    check("grad_div_adjoint", std::abs(lhs + rhs) / (std::abs(lhs) + 1e-300), 1e-12);
  }
  {
    const Mat G = sub.Q().transpose() * (m.energy_matrix() * sub.Q());
    check("basis_energy_orthonormal", (G - Mat::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(),
          1e-10);
    double worst = 0;
    for (Eigen::Index j = 0; j < sub.Q().cols(); ++j)
      worst = std::max(worst, m.constraint_defect(sub.Q().col(j)));
    check("basis_satisfies_constraints", worst, 1e-10);
  }
  {
    std::normal_distribution<double> nd;
    double idem = 0, adj = 0;
    for (int s = 0; s < samples; ++s) {
      Vec r(m.size()), t(m.size());
      for (auto& x : r) x = nd(rng);
      for (auto& x : t) x = nd(rng);
      const Vec pr1 = sub.project(r);
      const Vec pt = sub.project(t);
      const SpMat& M = m.energy_matrix();
      idem = std::max(idem, std::sqrt((sub.project(pr1) - pr1).dot(M * (sub.project(pr1) - pr1))) /
                                std::sqrt(pr1.dot(M * pr1)));
      adj = std::max(adj, std::abs(pr1.dot(M * t) - r.dot(M * pt)) /
                              std::sqrt(r.dot(M * r) * t.dot(M * t)));
    }
    check("projection_idempotent", idem, 1e-10);
    check("projection_self_adjoint", adj, 1e-10);
  }

  double diss = 0, adjoint = 0, skew = 0, corr = 0, inv = 0, bvp = 0, orc = 0;
  const int oracle_samples = opt.quick ? 2 : std::min(samples, 10);
  std::unique_ptr<SaddleOracle> oracle;
  for (int s = 0; s < samples; ++s) {
    const StateVector x = rnd_state();
    const StateVector y = rnd_state();
    const ApplyResult ax = gen.apply(x, false);
    const double nx = energy_norm(x, m), nax = energy_norm(ax.out, m);
    const double g = m.velocity_gradient_sq(x.u);
    diss = std::max(diss, std::abs(energy_inner_product(ax.out, x, m).real() + g) / (nx * nax + g));
    corr = std::max(corr, ax.correction / nx);

    const StateVector asy = gen.apply_A_star(y);
    const double l = energy_inner_product(ax.out, y, m).real();
    const double r = energy_inner_product(x, asy, m).real();
    adjoint = std::max(adjoint, std::abs(l - r) / (nax * energy_norm(y, m) +
                                                   nx * energy_norm(asy, m)));

    // Complex state x + i y: the imaginary part comes from the plate coupling.
    const ComplexState z{x.w.cast<cplx>() + cplx(0, 1) * y.w.cast<cplx>(),
                         x.v.cast<cplx>() + cplx(0, 1) * y.v.cast<cplx>(),
                         x.u.cast<cplx>() + cplx(0, 1) * y.u.cast<cplx>()};
    const StateVector ay = gen.apply_A(y);
    const ComplexState az{ax.out.w.cast<cplx>() + cplx(0, 1) * ay.w.cast<cplx>(),
                          ax.out.v.cast<cplx>() + cplx(0, 1) * ay.v.cast<cplx>(),
                          ax.out.u.cast<cplx>() + cplx(0, 1) * ay.u.cast<cplx>()};
    const ComplexState zw{z.w, CVec::Zero(z.v.size()), CVec::Zero(z.u.size())};
    const ComplexState zv{z.v, CVec::Zero(z.v.size()), CVec::Zero(z.u.size())};
    const double im_lhs = energy_inner_product(az, z, m).imag();
    const double im_rhs = -2.0 * energy_inner_product(zw, zv, m).imag();
    const double zn = std::sqrt(energy_inner_product(z, z, m).real());
    const double azn = std::sqrt(energy_inner_product(az, az, m).real());
    skew = std::max(skew, std::abs(im_lhs - im_rhs) / (zn * azn));

    const StateVector sx = gen.static_solve(x);
    inv = std::max(inv, energy_diff(gen.apply_A(sx), x, m) / nx);

    const PressureField p1 = apply_G1(x.w, pr.robin);
    const PressureField p2 = apply_G2(x.u, pr.robin);
    const BoundaryData d1 = g1_data(x.w, m), d2 = g2_data(x.u, m);
    const PressureField p{p1.p + p2.p, p1.dn + p2.dn};
    const BoundaryData d{d1.omega + d2.omega, d1.s + d2.s};
    const BvpResidual res = pr.robin.residual(p, d);
    const double scale = p.p.norm() + p.dn.norm() + d.omega.norm() + d.s.norm();
    bvp = std::max(bvp, std::max(res.interior, res.boundary) / scale);
    if (s < oracle_samples) {
      if (!oracle) oracle = std::make_unique<SaddleOracle>(m);
      const Vec po = oracle->pressure(x.w, x.u);
      orc = std::max(orc, (match_constant(po, p.p) - p.p).norm() / p.p.norm());
    }
  }
  check("dissipation_identity", diss, 1e-10);
  check("adjoint_identity", adjoint, 1e-9);
  check("skew_part_matches_plate_coupling", skew, 1e-9);
  check("post_projection_correction", corr, 1e-8);
  check("static_solve_inverse", inv, 1e-9);
  check("pressure_bvp_rows", bvp, 1e-9);
  check("pressure_oracle_agreement", orc, 1e-8);

  const ReducedGenerator red = reduce(gen);
  check("reduce_consistency", red.consistency, 1e-9);
  {
    double worst = 0;
    for (int s = 0; s < samples; ++s) {
      const Vec y = random_coords(rng, red.dim);
      worst = std::max(worst, y.dot(red.A_red * y) / y.squaredNorm());
    }
    check("reduced_rayleigh_dissipative", worst, 1e-10);
  }
  const SpectrumReport spec = compute_spectrum(red);
  check("spectrum_open_left_half_plane", spec.max_real_part < 0 ? 0.0 : 1.0, 0.0);
  {
    double worst = 0;
    for (const cplx& z : spec.eigs) {
      double best = INFINITY;
      for (const cplx& w : spec.eigs) best = std::min(best, std::abs(w - std::conj(z)));
      worst = std::max(worst, best / std::max(1.0, std::abs(z)));
    }
    check("spectrum_conjugate_closed", worst, 1e-9);
  }
  if (!opt.quick) {
    double sym = 0, lower = 0;
    for (double beta : {5.0, 20.0}) {
      const double rp = resolvent_norm(red, beta), rm = resolvent_norm(red, -beta);
      sym = std::max(sym, std::abs(rp - rm) / rp);
      double dist = INFINITY;
      for (const cplx& z : spec.eigs) dist = std::min(dist, std::abs(cplx(0, beta) - z));
      lower = std::max(lower, (1.0 / dist - rp) / rp);
    }
    check("resolvent_even_in_beta", sym, 1e-8);
    check("resolvent_spectral_lower_bound", std::max(lower, 0.0), 1e-8);
  }
  {
    const CayleyStepper st(red.A_red, cfg.dt);
    const double smax = Eigen::BDCSVD<Mat>(st.propagator()).singularValues()(0);
    check("cayley_step_contractive", std::max(0.0, smax - 1.0), 1e-12);
  }
  return out;
}

int cmd_verify(const RunConfig& cfg, const VerifyOptions& opt, std::ostream& log) {
  cfg.validate();
  const auto checks = run_invariant_suite(cfg, opt);
  json items = json::array();
  bool ok = true;
  for (const auto& c : checks) {
    ok = ok && c.pass;
    log << (c.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(36) << c.name << ' '
        << format_double(c.value) << " (tol " << format_double(c.tolerance) << ")\n";
    items.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value},
                     {"tolerance", c.tolerance}});
  }
  json res;
  res["quick"] = opt.quick;
  res["fault_injection"] = opt.flip_stencil;
  res["checks"] = items;
  res["all_pass"] = ok;
  write_summary(cfg, "verify.json", res);
  if (!ok) {
    log << "verify: failed invariants:";
    for (const auto& c : checks)
      if (!c.pass) log << ' ' << c.name;
    log << '\n';
  }
  return ok ? kPass : kPropertyFailure;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const RunConfig defaults;
  CLI::App app{"Stokes-plate semigroup laboratory: spectra, resolvent growth and decay rates"};
  app.require_subcommand(1);

  // Per-subcommand copies of the overridable fields, seeded with defaults so
  // --help shows them.
  struct Flags {
    std::string config, mode = to_string(RunConfig{}.mode), out = RunConfig{}.output_dir;
    RunConfig v;
    bool quick = false, flip = false, violate = false;
    std::vector<std::pair<std::string, CLI::Option*>> opts;
  };
  std::map<std::string, Flags> flags;
  auto add_common = [&](CLI::App* sub) {
    Flags& f = flags[sub->get_name()];
    sub->add_option("--config", f.config, "flat key = value configuration file");
    f.opts.emplace_back("mode", sub->add_option("--mode", f.mode, "section2d or box3d")->capture_default_str());
    f.opts.emplace_back("rho", sub->add_option("--rho", f.v.rho, "rotational inertia rho >= 0")->capture_default_str());
    f.opts.emplace_back("n_fluid", sub->add_option("--n-fluid", f.v.n_fluid, "fluid cells per side")->capture_default_str());
    f.opts.emplace_back("seed", sub->add_option("--seed", f.v.seed, "random seed")->capture_default_str());
    f.opts.emplace_back("output_dir", sub->add_option("--out", f.out, "output directory")->capture_default_str());
    f.opts.emplace_back("beta_min", sub->add_option("--beta-min", f.v.beta_min, "smallest sweep frequency")->capture_default_str());
    f.opts.emplace_back("beta_max", sub->add_option("--beta-max", f.v.beta_max, "largest sweep frequency")->capture_default_str());
    f.opts.emplace_back("beta_count", sub->add_option("--beta-count", f.v.beta_count, "number of log-spaced frequencies (>= 5)")->capture_default_str());
    f.opts.emplace_back("fit_lo", sub->add_option("--fit-lo", f.v.fit_lo, "resolvent fit window start (0 = sweep range)")->capture_default_str());
    f.opts.emplace_back("fit_hi", sub->add_option("--fit-hi", f.v.fit_hi, "resolvent fit window end (0 = sweep range)")->capture_default_str());
    f.opts.emplace_back("t_final", sub->add_option("--t-final", f.v.t_final, "final time (0 = from spectrum)")->capture_default_str());
    f.opts.emplace_back("dt", sub->add_option("--dt", f.v.dt, "initial time step for the convergence check")->capture_default_str());
    f.opts.emplace_back("dt_tol", sub->add_option("--dt-tol", f.v.dt_tol, "relative error target of the dt check")->capture_default_str());
    f.opts.emplace_back("decay_lo", sub->add_option("--decay-lo", f.v.decay_lo, "polynomial fit window start (0 = auto)")->capture_default_str());
    f.opts.emplace_back("decay_hi", sub->add_option("--decay-hi", f.v.decay_hi, "polynomial fit window end (0 = auto)")->capture_default_str());
    f.opts.emplace_back("late_lo", sub->add_option("--late-lo", f.v.late_lo, "exponential fit window start (0 = auto)")->capture_default_str());
    f.opts.emplace_back("late_hi", sub->add_option("--late-hi", f.v.late_hi, "exponential fit window end (0 = auto)")->capture_default_str());
    f.opts.emplace_back("samples", sub->add_option("--samples", f.v.samples, "random states per invariant")->capture_default_str());
    return &f;
  };
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of the reduced generator");
  auto* sweep = app.add_subcommand("resolvent-sweep", "resolvent norm along the imaginary axis");
  auto* evolve_cmd = app.add_subcommand("evolve", "Crank-Nicolson decay of smooth data");
  auto* verify = app.add_subcommand("verify", "invariant suite of all modules");
  add_common(spectrum);
  add_common(sweep);
  Flags* ef = add_common(evolve_cmd);
  evolve_cmd->add_flag("--debug-violate-x0", ef->violate, "perturb x0 off the constraint set");
  Flags* vf = add_common(verify);
  verify->add_flag("--quick", vf->quick, "reduced sample counts, skips resolvent checks");
  verify->add_flag("--debug-flip-stencil", vf->flip, "flip one fluid stencil sign (fault injection)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Flags& f = flags[chosen->get_name()];
  try {
    RunConfig cfg = f.config.empty() ? defaults : load_config_file(f.config);
    for (const auto& [key, opt] : f.opts) {
      if (opt->count() == 0) continue;
      if (key == "mode") cfg.mode = parse_mode(f.mode);
      else if (key == "output_dir") cfg.output_dir = f.out;
      else if (key == "rho") cfg.rho = f.v.rho;
      else if (key == "n_fluid") cfg.n_fluid = f.v.n_fluid;
      else if (key == "seed") cfg.seed = f.v.seed;
      else if (key == "beta_min") cfg.beta_min = f.v.beta_min;
      else if (key == "beta_max") cfg.beta_max = f.v.beta_max;
      else if (key == "beta_count") cfg.beta_count = f.v.beta_count;
      else if (key == "fit_lo") cfg.fit_lo = f.v.fit_lo;
      else if (key == "fit_hi") cfg.fit_hi = f.v.fit_hi;
      else if (key == "t_final") cfg.t_final = f.v.t_final;
      else if (key == "dt") cfg.dt = f.v.dt;
      else if (key == "dt_tol") cfg.dt_tol = f.v.dt_tol;
      else if (key == "decay_lo") cfg.decay_lo = f.v.decay_lo;
      else if (key == "decay_hi") cfg.decay_hi = f.v.decay_hi;
      else if (key == "late_lo") cfg.late_lo = f.v.late_lo;
      else if (key == "late_hi") cfg.late_hi = f.v.late_hi;
      else if (key == "samples") cfg.samples = f.v.samples;
    }
    cfg.validate();
    const std::string name = chosen->get_name();
    if (name == "spectrum") return cmd_spectrum(cfg, out);
    if (name == "resolvent-sweep") return cmd_resolvent_sweep(cfg, out);
    if (name == "evolve") return cmd_evolve(cfg, out, f.violate);
    return cmd_verify(cfg, {f.quick, f.flip}, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << '\n';
    return kPreconditionError;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kPropertyFailure;
  }
}

}  // namespace fsilab

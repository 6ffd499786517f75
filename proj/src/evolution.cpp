#include "fsilab/evolution.hpp"

#include <cmath>
#include <memory>
#include <random>

namespace fsilab {

CayleyStepper::CayleyStepper(const Mat& A, double dt) : dt_(dt) {
  if (!(dt > 0) || !std::isfinite(dt)) throw ConfigError("dt: must be positive");
  const Eigen::Index n = A.rows();
  const Mat I = Mat::Identity(n, n);
  Eigen::PartialPivLU<Mat> lu(I - 0.5 * dt * A);
  const double rc = lu.rcond();
  cond_ = rc > 0 ? 1.0 / rc : INFINITY;
  if (cond_ > 1e14) throw ConfigError("dt: implicit factor is ill-conditioned (cond > 1e14)");
  S_ = lu.solve(I + 0.5 * dt * A);
}

DecayTrace evolve(const Vec& y0, double t_final, const CayleyStepper& stepper,
                  double x0_domain_norm) {
  if (!(t_final > 0)) throw ConfigError("t_final: must be positive");
  const double dt = stepper.dt();
  const long steps = static_cast<long>(std::ceil(t_final / dt - 1e-9));
  DecayTrace tr;
  tr.x0_domain_norm = x0_domain_norm;
  tr.times.reserve(steps + 1);
  tr.norm_H.reserve(steps + 1);
  tr.t_times_norm.reserve(steps + 1);
  Vec y = y0;
  double prev = y.norm();
  tr.times.push_back(0.0);
  tr.norm_H.push_back(prev);
  tr.t_times_norm.push_back(0.0);
  for (long k = 1; k <= steps; ++k) {
    y = stepper.step(y);
    const double t = static_cast<double>(k) * dt;
    const double nrm = y.norm();
    if (prev > 0) tr.max_step_growth = std::max(tr.max_step_growth, (nrm - prev) / prev);
    prev = nrm;
    tr.times.push_back(t);
    tr.norm_H.push_back(nrm);
    tr.t_times_norm.push_back(t * nrm);
  }
  return tr;
}

DecayTrace evolve(const StateVector& x0, double t_final, double dt, const ReducedGenerator& red,
                  const Generator& gen) {
  const Model& model = gen.model();
  const Vec packed = model.pack(x0);
  if (model.constraint_defect(packed) > 1e-8)
    throw PreconditionError("evolve: initial state violates the constraints");
  const Vec y0 = gen.subspace().coords(packed);
  const CayleyStepper stepper(red.A_red, dt);
  return evolve(y0, t_final, stepper, gen.domain_norm(x0));
}

SmoothData smooth_data(std::uint64_t seed, const Generator& gen) {
  const Model& model = gen.model();
  const Subspace& sub = gen.subspace();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec xi(sub.dim());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);

  StateVector b = gen.static_solve(model.unpack(sub.expand(xi)));
  const double nb = energy_norm(b, model);
  b.w /= nb;
  b.v /= nb;
  b.u /= nb;
  StateVector x = gen.static_solve(b);
  const double nx = energy_norm(x, model);
  x.w /= nx;
  x.v /= nx;
  x.u /= nx;
  return {x, b, std::sqrt(1.0 + 1.0 / (nx * nx))};
}

namespace {

struct WindowSamples {
  std::vector<double> t, n;
};

WindowSamples select(const DecayTrace& trace, FitWindow w) {
  WindowSamples s;
  for (size_t i = 0; i < trace.times.size(); ++i) {
    const double t = trace.times[i];
    if (t >= w.lo && t <= w.hi && t > 0 && trace.norm_H[i] > 0) {
      s.t.push_back(t);
      s.n.push_back(trace.norm_H[i]);
    }
  }
  if (s.t.size() < 10) throw ConfigError("decay fit window holds fewer than 10 samples");
  return s;
}

}  // namespace

DecayFit fit_decay(const DecayTrace& trace, FitWindow window) {
  const WindowSamples s = select(trace, window);
  std::vector<double> lt, ln;
  DecayFit f;
  f.window = window;
  for (size_t i = 0; i < s.t.size(); ++i) {
    lt.push_back(std::log(s.t[i]));
    ln.push_back(std::log(s.n[i]));
    const double scale = trace.x0_domain_norm > 0 ? trace.x0_domain_norm : 1.0;
    f.sup_t_times_norm = std::max(f.sup_t_times_norm, s.t[i] * s.n[i] / scale);
  }
  const LineFit line = fit_line(lt, ln);
  f.rate_exponent = -line.slope;
  f.r2 = line.r2;
  f.samples = line.count;

  // Local log-log slopes on consecutive blocks; a steadily steepening slope
  // is the signature of faster-than-polynomial decay.
  const size_t blocks = 6;
  const size_t per = lt.size() / blocks;
  if (per >= 2) {
    std::vector<double> mags;
    for (size_t b = 0; b < blocks; ++b) {
      const size_t lo = b * per;
      const size_t hi = b + 1 == blocks ? lt.size() : lo + per;
      const LineFit lf = fit_line({lt.begin() + lo, lt.begin() + hi}, {ln.begin() + lo, ln.begin() + hi});
      mags.push_back(std::abs(lf.slope));
    }
    bool growing = true;
    for (size_t b = 1; b < mags.size(); ++b) growing = growing && mags[b] > mags[b - 1] * (1 + 1e-3);
    f.super_polynomial = growing && mags.back() > 1.2 * mags.front();
  }
  return f;
}

ExponentialFit fit_exponential(const DecayTrace& trace, FitWindow window) {
  const WindowSamples s = select(trace, window);
  std::vector<double> ln;
  for (double v : s.n) ln.push_back(std::log(v));
  const LineFit line = fit_line(s.t, ln);
  return {-line.slope, line.r2, line.count, window};
}

DecayWindows suggest_windows(const SpectrumReport& spec) {
  DecayWindows w;
  const double s = std::abs(spec.max_real_part);
  double eps_max = 0;
  for (const cplx& z : spec.eigs)
    if (std::abs(z.real()) < 0.5 * std::abs(z.imag())) eps_max = std::max(eps_max, std::abs(z.real()));
  if (s > 0) w.late = {2.0 / s, 8.0 / s};
  if (eps_max > 0 && s > 0 && 1.0 / s > 4.0 / eps_max) {
    w.has_intermediate = true;
    w.intermediate = {2.0 / eps_max, 1.0 / s};
  }
  return w;
}

static Vec propagate(const CayleyStepper& st, Vec y, long steps) {
  for (long k = 0; k < steps; ++k) y = st.step(y);
  return y;
}

DtChoice choose_dt(const Mat& A, const Vec& y0, double horizon, double dt_start, double tol,
                   int max_halvings) {
  if (!(dt_start > 0)) throw ConfigError("dt: must be positive");
  DtChoice c;
  const double y0n = y0.norm();
  double dt = dt_start;
  const long base = std::max(1L, static_cast<long>(std::llround(horizon / dt_start)));
  auto coarse = std::make_unique<CayleyStepper>(A, dt);
  auto mid = std::make_unique<CayleyStepper>(A, dt / 2);
  Vec y1 = propagate(*coarse, y0, base);
  Vec y2 = propagate(*mid, y0, 2 * base);
  for (int k = 0; k <= max_halvings; ++k) {
    const long mult = 1L << k;
    auto fine = std::make_unique<CayleyStepper>(A, dt / 4);
    const Vec y3 = propagate(*fine, y0, 4 * base * mult);
    const double e1 = (y1 - y2).norm();
    const double e2 = (y2 - y3).norm();
    c.dt = dt;
    c.halvings = k;
    c.observed_order = (e1 > 0 && e2 > 0) ? std::log2(e1 / e2) : INFINITY;
    c.relative_error = y0n > 0 ? e1 * 4.0 / 3.0 / y0n : 0.0;
    if (y0n == 0 || (c.observed_order >= 1.9 && c.relative_error <= tol)) return c;
    dt /= 2;
    y1 = y2;
    y2 = y3;
    coarse = std::move(mid);
    mid = std::move(fine);
  }
  return c;
}

}  // namespace fsilab

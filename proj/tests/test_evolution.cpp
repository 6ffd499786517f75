#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "fsilab/evolution.hpp"
#include "support.hpp"

using namespace fsilab;
using namespace fsilab::testing;

namespace {

DecayTrace synthetic(double t0, double t1, double dt, double (*f)(double)) {
  DecayTrace tr;
  for (double t = t0; t <= t1 + 1e-12; t += dt) {
    tr.times.push_back(t);
    tr.norm_H.push_back(f(t));
    tr.t_times_norm.push_back(t * f(t));
  }
  tr.x0_domain_norm = 1;
  return tr;
}

// exp(tA) y0 through a dense eigendecomposition.
Vec exact_flow(const Mat& A, const Vec& y0, double t) {
  const Eigen::EigenSolver<Mat> es(A);
  const CMat V = es.eigenvectors();
  const CVec c = V.partialPivLu().solve(y0.cast<cplx>());
  const CVec e = (es.eigenvalues() * t).array().exp();
  return (V * (e.array() * c.array()).matrix()).real();
}

}  // namespace

TEST_CASE("cayley stepper basics") {
  const Problem pr(section(10, 1));
  const ReducedGenerator red = reduce(pr.gen);
  const CayleyStepper st(red.A_red, 0.05);
  CHECK(st.step(Vec::Zero(red.dim)).norm() == 0.0);
  CHECK(Eigen::BDCSVD<Mat>(st.propagator()).singularValues()(0) <= 1 + 1e-12);

  std::mt19937_64 rng(41);
  for (int i = 0; i < 10; ++i) {
    const Vec y = gaussian(rng, red.dim);
    CHECK(st.step(y).norm() <= y.norm() * (1 + 1e-12));
  }

  // Eigenvectors are scaled by the Cayley factor.
  const Eigen::EigenSolver<Mat> es(red.A_red);
  for (Eigen::Index k = 0; k < red.dim; k += 17) {
    const cplx lam = es.eigenvalues()[k];
    const CVec z = es.eigenvectors().col(k);
    const cplx g = (1.0 + 0.025 * lam) / (1.0 - 0.025 * lam);
    const CVec sz = st.propagator().cast<cplx>() * z;
    CHECK((sz - g * z).norm() <= 1e-9 * z.norm());
  }

  CHECK_THROWS_AS(CayleyStepper(red.A_red, 0.0), ConfigError);
  CHECK_THROWS_AS(CayleyStepper(red.A_red, -1.0), ConfigError);
  // I - dt/2 A singular when A has eigenvalue 2/dt.
  CHECK_THROWS_AS(CayleyStepper(Mat::Identity(3, 3) * 20.0, 0.1), ConfigError);
}

TEST_CASE("traces") {
  const Problem pr(section(10, 1));
  const ReducedGenerator red = reduce(pr.gen);
  const CayleyStepper st(red.A_red, 0.05);
  const DecayTrace zero = evolve(Vec::Zero(red.dim), 2.0, st);
  for (double v : zero.norm_H) CHECK(v == 0.0);

  std::mt19937_64 rng(42);
  const DecayTrace tr = evolve(gaussian(rng, red.dim), 5.0, st);
  CHECK(tr.times.size() == 101);
  CHECK(tr.times.back() == doctest::Approx(5.0));
  for (size_t i = 1; i < tr.norm_H.size(); ++i)
    CHECK(tr.norm_H[i] <= tr.norm_H[i - 1] * (1 + 1e-12));
  CHECK(tr.max_step_growth <= 1e-12);

  StateVector bad = pr.model.zero_state();
  bad.u[pr.model.grid().s_faces().front()] = 1;
  CHECK_THROWS_AS(evolve(bad, 1.0, 0.05, red, pr.gen), PreconditionError);
}

TEST_CASE("second order against exact propagation") {
  const Problem pr(section(16, 1));
  const ReducedGenerator red = reduce(pr.gen);
  REQUIRE(red.dim <= 400);
  const SmoothData sd = smooth_data(3, pr.gen);
  const Vec y0 = pr.subspace.coords(pr.model.pack(sd.x0));
  const double T = 1.0;
  const Vec exact = exact_flow(red.A_red, y0, T);
  std::vector<double> err;
  for (double dt : {0.02, 0.01, 0.005}) {
    const CayleyStepper st(red.A_red, dt);
    Vec y = y0;
    for (int k = 0; k < static_cast<int>(std::lround(T / dt)); ++k) y = st.step(y);
    err.push_back((y - exact).norm() / exact.norm());
  }
  for (size_t i = 1; i < err.size(); ++i) CHECK(std::log2(err[i - 1] / err[i]) >= 1.9);
}

TEST_CASE("smooth data") {
  const Problem pr(section(12, 1));
  const Model& m = pr.model;
  const SmoothData a = smooth_data(5, pr.gen), b = smooth_data(5, pr.gen);
  CHECK(m.pack(a.x0) == m.pack(b.x0));
  CHECK(m.constraint_report(a.x0).max() <= 1e-10);
  CHECK(energy_norm(a.x0, m) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(energy_norm(a.source, m) == doctest::Approx(1.0).epsilon(1e-12));
  // A x0 = source / |A^{-1} source|, so |x0|_D^2 = 1 + |A x0|^2.
  const double dn = pr.gen.domain_norm(a.x0);
  CHECK(std::isfinite(dn));
  CHECK(dn == doctest::Approx(a.domain_norm).epsilon(1e-9));
  const StateVector ax = pr.gen.apply_A(a.x0);
  const double k = energy_norm(ax, m);
  CHECK(state_diff(ax, {a.source.w * k, a.source.v * k, a.source.u * k}, m) <= 1e-9 * k);
  const SmoothData c = smooth_data(6, pr.gen);
  CHECK(m.pack(c.x0) != m.pack(a.x0));
}

TEST_CASE("decay fits on synthetic traces") {
  const DecayTrace inv = synthetic(1, 100, 0.1, [](double t) { return 1.0 / t; });
  const DecayFit f = fit_decay(inv, {10, 100});
  CHECK(f.rate_exponent == doctest::Approx(1.0).epsilon(0.01));
  CHECK(f.r2 > 0.9999);
  CHECK_FALSE(f.super_polynomial);
  CHECK(f.sup_t_times_norm == doctest::Approx(1.0));

  const DecayTrace ex = synthetic(0.1, 20, 0.01, [](double t) { return std::exp(-t); });
  CHECK(fit_decay(ex, {1, 20}).super_polynomial);
  const ExponentialFit e = fit_exponential(ex, {1, 20});
  CHECK(e.rate == doctest::Approx(1.0));
  CHECK(e.r2 > 0.9999);

  CHECK_THROWS_AS(fit_decay(inv, {10, 10.5}), ConfigError);
  CHECK_THROWS_AS(fit_exponential(inv, {10, 10.5}), ConfigError);
}

TEST_CASE("windows from the spectrum") {
  SpectrumReport s;
  s.eigs = {{-0.1, -5}, {-0.1, 5}, {-0.01, 0}, {-3, 0.5}};
  s.max_real_part = -0.01;
  const DecayWindows w = suggest_windows(s);
  CHECK(w.has_intermediate);
  CHECK(w.intermediate.lo == doctest::Approx(20));
  CHECK(w.intermediate.hi == doctest::Approx(100));
  CHECK(w.late.lo == doctest::Approx(200));
  CHECK(w.late.hi == doctest::Approx(800));

  s.eigs = {{-1, 0}, {-2, 1}};
  s.max_real_part = -1;
  CHECK_FALSE(suggest_windows(s).has_intermediate);
}

TEST_CASE("dt selection") {
  const Problem pr(section(8, 1));
  const ReducedGenerator red = reduce(pr.gen);
  const SmoothData sd = smooth_data(1, pr.gen);
  const Vec y0 = pr.subspace.coords(pr.model.pack(sd.x0));
  const DtChoice c = choose_dt(red.A_red, y0, 1.0, 0.1, 1e-3);
  CHECK(c.observed_order >= 1.9);
  CHECK(c.relative_error <= 1e-3);
  CHECK(c.dt == doctest::Approx(0.1 / (1 << c.halvings)));
  CHECK_THROWS_AS(choose_dt(red.A_red, y0, 1.0, 0.0, 1e-3), ConfigError);
}

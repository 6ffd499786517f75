#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "support.hpp"

using namespace fsilab;
using namespace fsilab::testing;

TEST_CASE("first row of A and A* is the plate velocity") {
  std::mt19937_64 rng(31);
  const Problem pr(section(10, 1));
  const Model& m = pr.model;
  StateVector x = m.zero_state();
  x.w = m.plate_embed(m.plate().zero_mean_proj * gaussian(rng, m.plate().interior.size()));
  REQUIRE(m.constraint_defect(m.pack(x)) < 1e-12);
  const StateVector ax = pr.gen.apply_A(x), asx = pr.gen.apply_A_star(x);
  CHECK(ax.w.norm() <= 1e-12 * m.pack(ax).norm());
  CHECK(asx.w.norm() <= 1e-12 * m.pack(asx).norm());
  CHECK(energy_norm(pr.gen.apply_A(m.zero_state()), m) == 0.0);
}

TEST_CASE("dissipation, adjoint and skew part") {
  std::mt19937_64 rng(32);
  for (double rho : {0.0, 1.0}) {
    const Problem pr(section(12, rho));
    const Model& m = pr.model;
    for (int i = 0; i < 10; ++i) {
      const StateVector x = random_state(pr.subspace, rng);
      const StateVector y = random_state(pr.subspace, rng);
      const double g = m.velocity_gradient_sq(x.u);
      for (bool adj : {false, true}) {
        const StateVector ax = pr.gen.apply(x, adj).out;
        const double re = energy_inner_product(ax, x, m).real();
        CHECK(std::abs(re + g) <= 1e-10 * (energy_norm(x, m) * energy_norm(ax, m) + g));
      }
      const StateVector ax = pr.gen.apply_A(x), asy = pr.gen.apply_A_star(y);
      const double l = energy_inner_product(ax, y, m).real();
      const double r = energy_inner_product(x, asy, m).real();
      CHECK(std::abs(l - r) <= 1e-9 * (energy_norm(ax, m) * energy_norm(y, m) +
                                       energy_norm(x, m) * energy_norm(asy, m)));

      // Im<Ax, x> over real fields is zero; build a complex state instead.
      const ComplexState z{x.w.cast<cplx>() + cplx(0, 1) * y.w.cast<cplx>(),
                           x.v.cast<cplx>() + cplx(0, 1) * y.v.cast<cplx>(),
                           x.u.cast<cplx>() + cplx(0, 1) * y.u.cast<cplx>()};
      const StateVector ay = pr.gen.apply_A(y);
      const ComplexState az{ax.w.cast<cplx>() + cplx(0, 1) * ay.w.cast<cplx>(),
                            ax.v.cast<cplx>() + cplx(0, 1) * ay.v.cast<cplx>(),
                            ax.u.cast<cplx>() + cplx(0, 1) * ay.u.cast<cplx>()};
      const CVec zu = CVec::Zero(z.u.size()), zv = CVec::Zero(z.v.size());
      const double lhs = energy_inner_product(az, z, m).imag();
      const double rhs = -2.0 * energy_inner_product(ComplexState{z.w, zv, zu},
                                                     ComplexState{z.v, zv, zu}, m)
                                    .imag();
      CHECK(std::abs(lhs - rhs) <=
            1e-9 * std::sqrt(energy_inner_product(z, z, m).real() *
                             energy_inner_product(az, az, m).real()));
    }
  }
}

TEST_CASE("post-projection correction stays small") {
  std::mt19937_64 rng(33);
  for (int n : {12, 16}) {
    const Problem pr(section(n, 1));
    double worst = 0;
    for (int i = 0; i < 5; ++i) {
      const StateVector x = random_state(pr.subspace, rng);
      worst = std::max(worst, pr.gen.apply(x, false).correction / energy_norm(x, pr.model));
    }
    MESSAGE("n=" << n << " correction " << worst);
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("apply rejects unconstrained input") {
  std::mt19937_64 rng(34);
  const Problem pr(section(8, 1));
  CHECK_THROWS_AS(pr.gen.apply_A(raw_state(pr.model, rng)), PreconditionError);
  StateVector bad = pr.model.zero_state();
  bad.u.resize(2);
  CHECK_THROWS_AS(pr.gen.apply_A(bad), DimensionError);
}

TEST_CASE("static solve") {
  std::mt19937_64 rng(35);
  for (double rho : {0.0, 1.0}) {
    const Problem pr(section(12, rho));
    const Model& m = pr.model;
    const ReducedGenerator red = reduce(pr.gen);
    const Eigen::PartialPivLU<Mat> lu(red.A_red);

    CHECK(energy_norm(pr.gen.static_solve(m.zero_state()), m) == 0.0);

    StateVector c = m.zero_state();
    c.w = m.plate_embed(Vec::Ones(m.plate().interior.size()));
    CHECK_THROWS_AS(pr.gen.static_solve(c), PreconditionError);

    for (int i = 0; i < 10; ++i) {
      const StateVector b = random_state(pr.subspace, rng);
      const StateVector x = pr.gen.static_solve(b);
      const double nb = energy_norm(b, m);
      CHECK(state_diff(pr.gen.apply_A(x), b, m) <= 1e-9 * nb);
      CHECK(m.constraint_defect(m.pack(x)) < 1e-9);
      // Dense solve in energy coordinates.
      const Vec yb = pr.subspace.coords(m.pack(b));
      const Vec yx = pr.subspace.coords(m.pack(x));
      CHECK((lu.solve(yb) - yx).norm() <= 1e-8 * yx.norm());
      CHECK((red.A_red * yx - yb).norm() <= 1e-8 * yb.norm());
      // Left inverse as well.
      const StateVector back = pr.gen.static_solve(pr.gen.apply_A(b));
      CHECK(state_diff(back, b, m) <= 1e-8 * nb);
    }
  }
}

TEST_CASE("reduced generator") {
  std::mt19937_64 rng(36);
  const Problem pr(section(12, 0.1));
  const ReducedGenerator red = reduce(pr.gen);
  CHECK(red.dim == pr.subspace.dim());
  CHECK(red.consistency < 1e-9);
  for (int i = 0; i < 20; ++i) {
    const Vec y = gaussian(rng, red.dim);
    CHECK(y.dot(red.A_red * y) / y.squaredNorm() <= 1e-10);
  }
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Mat>(red.A_red, false).eigenvalues();
  for (const cplx& z : ev) {
    double best = INFINITY;
    for (const cplx& w : ev) best = std::min(best, std::abs(w - std::conj(z)));
    CHECK(best <= 1e-9 * std::max(1.0, std::abs(z)));
  }
}

TEST_CASE("domain norm") {
  std::mt19937_64 rng(37);
  const Problem pr(section(10, 1));
  const Model& m = pr.model;
  CHECK(pr.gen.domain_norm(m.zero_state()) == 0.0);
  for (int i = 0; i < 5; ++i) {
    const StateVector x = random_state(pr.subspace, rng);
    CHECK(pr.gen.domain_norm(x) >= energy_norm(x, m));
  }
  // Real eigenvectors of A_red map to real states.
  const ReducedGenerator red = reduce(pr.gen);
  const Eigen::EigenSolver<Mat> es(red.A_red);
  int used = 0;
  for (Eigen::Index k = 0; k < red.dim && used < 3; ++k) {
    if (std::abs(es.eigenvalues()[k].imag()) > 0) continue;
    const double lam = es.eigenvalues()[k].real();
    const Vec y = es.eigenvectors().col(k).real();
    const StateVector x = m.unpack(pr.subspace.expand(y));
    CHECK(pr.gen.domain_norm(x) ==
          doctest::Approx(energy_norm(x, m) * std::sqrt(1 + lam * lam)).epsilon(1e-9));
    ++used;
  }
  CHECK(used > 0);
}

TEST_CASE("box3d generator") {
  std::mt19937_64 rng(38);
  ModelParams p = section(5, 1);
  p.mode = Mode::box3d;
  const Problem pr(p);
  const Model& m = pr.model;
  for (int i = 0; i < 3; ++i) {
    const StateVector x = random_state(pr.subspace, rng);
    const StateVector ax = pr.gen.apply_A(x);
    const double g = m.velocity_gradient_sq(x.u);
    CHECK(std::abs(energy_inner_product(ax, x, m).real() + g) <=
          1e-10 * (energy_norm(x, m) * energy_norm(ax, m) + g));
    CHECK(state_diff(pr.gen.apply_A(pr.gen.static_solve(x)), x, m) <= 1e-9 * energy_norm(x, m));
  }
}

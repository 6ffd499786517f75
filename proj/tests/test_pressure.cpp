#include <doctest.h>

#include <Eigen/LU>

#include "support.hpp"

using namespace fsilab;
using namespace fsilab::testing;

namespace {

BoundaryData boundary_noise(const Model& m, std::mt19937_64& rng, bool omega, bool s) {
  BoundaryData g{Vec::Zero(m.grid().omega_faces().size()), Vec::Zero(m.grid().s_faces().size())};
  if (omega) g.omega = gaussian(rng, g.omega.size());
  if (s) g.s = gaussian(rng, g.s.size());
  return g;
}

Vec admissible_w(const Model& m, std::mt19937_64& rng) {
  return m.plate_embed(gaussian(rng, m.plate().interior.size()));
}

}  // namespace

TEST_CASE("robin solve examples") {
  std::mt19937_64 rng(21);
  for (double rho : {0.0, 1.0}) {
    const Model m(section(10, rho));
    const RobinSystem sys(m);

    const PressureField z = sys.solve(boundary_noise(m, rng, false, false));
    CHECK(z.p.norm() == 0.0);

    const BoundaryData g1 = boundary_noise(m, rng, true, false);
    const BoundaryData g2 = boundary_noise(m, rng, true, false);
    const PressureField a = sys.solve(g1), b = sys.solve(g2);
    const PressureField ab = sys.solve({g1.omega + g2.omega, g1.s + g2.s});
    CHECK((ab.p - a.p - b.p).norm() <= 1e-11 * ab.p.norm());

    // Dense LU of the same assembled matrix.
    const Mat L = Mat(sys.L_robin());
    Vec rhs = Vec::Zero(L.rows());
    rhs.tail(m.grid().boundary_faces().size()) = sys.to_slots(g1).col(0);
    const Vec dense = Eigen::FullPivLU<Mat>(L).solve(rhs);
    CHECK((dense.head(sys.cells()) - a.p).norm() <= 1e-10 * a.p.norm());

    const BvpResidual r = sys.residual(a, g1);
    CHECK(r.interior < 1e-10);
    CHECK(r.boundary < 1e-10);
  }
}

TEST_CASE("solution maps are bounded") {
  std::mt19937_64 rng(22);
  const Model m(section(12, 1));
  const RobinSystem sys(m);
  double om = 0, sm = 0;
  for (int i = 0; i < 10; ++i) {
    const BoundaryData go = boundary_noise(m, rng, true, false);
    const BoundaryData gs = boundary_noise(m, rng, false, true);
    om = std::max(om, solve_pressure_bvp(go.omega, go.s, sys).p.norm() / go.omega.norm());
    sm = std::max(sm, solve_pressure_bvp(gs.omega, gs.s, sys).p.norm() / gs.s.norm());
  }
  MESSAGE("omega map gain " << om << ", S map gain " << sm);
  CHECK(std::isfinite(om));
  CHECK(std::isfinite(sm));
}

TEST_CASE("G1 and G2") {
  std::mt19937_64 rng(23);
  const Model m(section(10, 0.1));
  const RobinSystem sys(m);
  const Subspace sub(m);

  CHECK(apply_G1(Vec::Zero(m.plate_size()), sys).p.norm() == 0.0);
  CHECK(apply_G2(Vec::Zero(m.fluid_size()), sys).p.norm() == 0.0);

  const Vec w = admissible_w(m, rng);
  const PressureField p1 = apply_G1(w, sys), p3 = apply_G1(3.0 * w, sys);
  CHECK((p3.p - 3.0 * p1.p).norm() <= 1e-12 * p3.p.norm());

  Vec bad = w;
  bad[0] = 1.0;  // ring node
  CHECK_THROWS_AS(apply_G1(bad, sys), DimensionError);
  CHECK_THROWS_AS(apply_G2(Vec::Zero(3), sys), DimensionError);

  // G2 data with S part dropped is the Robin term alone.
  const StateVector x = random_state(sub, rng);
  const BoundaryData d = g2_data(x.u, m);
  const PressureField full = sys.solve(d);
  const PressureField om = sys.solve({d.omega, Vec::Zero(d.s.size())});
  const PressureField sp = sys.solve({Vec::Zero(d.omega.size()), d.s});
  CHECK((full.p - om.p - sp.p).norm() <= 1e-11 * full.p.norm());
}

TEST_CASE("combined pressure satisfies every BVP row") {
  std::mt19937_64 rng(24);
  for (double rho : {0.0, 1.0}) {
    const Model m(section(12, rho));
    const RobinSystem sys(m);
    const Subspace sub(m);
    for (int i = 0; i < 10; ++i) {
      const StateVector x = random_state(sub, rng);
      const PressureField a = apply_G1(x.w, sys), b = apply_G2(x.u, sys);
      const BoundaryData da = g1_data(x.w, m), db = g2_data(x.u, m);
      const PressureField p{a.p + b.p, a.dn + b.dn};
      const BoundaryData d{da.omega + db.omega, da.s + db.s};
      const BvpResidual r = sys.residual(p, d);
      const double scale = p.p.norm() + p.dn.norm() + d.omega.norm() + d.s.norm();
      CHECK(r.interior <= 1e-9 * scale);
      CHECK(r.boundary <= 1e-9 * scale);
    }
  }
}

TEST_CASE("saddle oracle") {
  std::mt19937_64 rng(25);
  const Model m(section(10, 1));
  const SaddleOracle oracle(m);
  CHECK(oracle.pressure(Vec::Zero(m.plate_size()), Vec::Zero(m.fluid_size())).norm() == 0.0);

  const Vec w = admissible_w(m, rng), u = Vec::Zero(m.fluid_size());
  Forcing f1{gaussian(rng, m.fluid_size()), gaussian(rng, m.plate_size())};
  Forcing f2{gaussian(rng, m.fluid_size()), gaussian(rng, m.plate_size())};
  const Vec base = oracle.pressure(w, u);
  const Vec a = oracle.pressure(w, u, f1) - base;
  const Vec b = oracle.pressure(w, u, f2) - base;
  const Vec ab = oracle.pressure(w, u, {f1.u + f2.u, f1.v + f2.v}) - base;
  CHECK((ab - a - b).norm() <= 1e-10 * ab.norm());

  CHECK((pressure_oracle(w, u, {}, m) - base).norm() <= 1e-12 * base.norm());

  const Vec t = gaussian(rng, 7);
  CHECK((match_constant(t.array() + 2.5, t) - t).norm() < 1e-13);
}

TEST_CASE("G maps agree with the saddle oracle") {
  std::mt19937_64 rng(26);
  for (double rho : {0.0, 0.1, 1.0}) {
    const Model m(section(12, rho));
    const RobinSystem sys(m);
    const Subspace sub(m);
    const SaddleOracle oracle(m);
    for (int i = 0; i < 20; ++i) {
      const StateVector x = random_state(sub, rng);
      const Vec p = apply_G1(x.w, sys).p + apply_G2(x.u, sys).p;
      const Vec po = oracle.pressure(x.w, x.u);
      CHECK((match_constant(po, p) - p).norm() <= 1e-8 * p.norm());
    }
  }
}

#include "fsilab/pressure.hpp"

#include <cmath>

namespace fsilab {

RobinSystem::RobinSystem(const Model& model) : model_(model) {
  const MacGrid& g = model.grid();
  const PlateOperators& pl = model.plate();
  const double h = g.h();
  cells_ = g.num_cells();
  const int nb = static_cast<int>(g.boundary_faces().size());
  const int n = cells_ + nb;

  std::vector<Triplet> t;
  for (int f : g.interior_faces()) {
    const int a = g.face_comp(f);
    Index3 lo = g.face_index(f);
    const Index3 hi = lo;
    lo[a] -= 1;
    const int cl = g.cell_id(lo);
    const int ch = g.cell_id(hi);
    t.emplace_back(cl, ch, 1.0);
    t.emplace_back(cl, cl, -1.0);
    t.emplace_back(ch, cl, 1.0);
    t.emplace_back(ch, ch, -1.0);
  }
  for (int slot = 0; slot < nb; ++slot) {
    const int f = g.boundary_faces()[slot];
    t.emplace_back(g.adjacent_cell(f), cells_ + slot, h);
    t.emplace_back(cells_ + slot, cells_ + slot, 1.0);
  }
  const auto& J = pl.interior;
  for (size_t a = 0; a < J.size(); ++a) {
    const int row = cells_ + g.boundary_slot(g.omega_faces()[a]);
    for (size_t b = 0; b < J.size(); ++b) t.emplace_back(row, g.top_cell(J[b]), pl.P_rho_inv(a, b));
  }
  L_.resize(n, n);
  L_.setFromTriplets(t.begin(), t.end());
  L_.makeCompressed();
  lu_.compute(L_);
  if (lu_.info() != Eigen::Success) throw InternalError("Robin system factorization failed");
}

Mat RobinSystem::to_slots(const BoundaryData& data) const {
  const MacGrid& g = model_.grid();
  if (data.omega.size() != static_cast<Eigen::Index>(g.omega_faces().size()) ||
      data.s.size() != static_cast<Eigen::Index>(g.s_faces().size()))
    throw DimensionError("boundary data does not match the Omega/S face sets");
  Mat gb = Mat::Zero(g.boundary_faces().size(), 1);
  for (size_t a = 0; a < g.omega_faces().size(); ++a)
    gb(g.boundary_slot(g.omega_faces()[a]), 0) = data.omega[a];
  for (size_t a = 0; a < g.s_faces().size(); ++a) gb(g.boundary_slot(g.s_faces()[a]), 0) = data.s[a];
  return gb;
}

Mat RobinSystem::solve_slots(const Mat& gb) const {
  Mat rhs = Mat::Zero(L_.rows(), gb.cols());
  rhs.bottomRows(gb.rows()) = gb;
  Mat sol = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success) throw InternalError("Robin system solve failed");
  return sol;
}

PressureField RobinSystem::solve(const BoundaryData& g) const {
  const Mat sol = solve_slots(to_slots(g));
  return {sol.col(0).head(cells_), sol.col(0).tail(sol.rows() - cells_)};
}

BvpResidual RobinSystem::residual(const PressureField& f, const BoundaryData& g) const {
  Vec x(L_.rows());
  x << f.p, f.dn;
  Vec rhs = Vec::Zero(L_.rows());
  rhs.tail(f.dn.size()) = to_slots(g).col(0);
  const Vec r = L_ * x - rhs;
  return {r.head(cells_).norm(), r.tail(f.dn.size()).norm()};
}

PressureField solve_pressure_bvp(const Vec& g_omega, const Vec& g_s, const RobinSystem& sys) {
  return sys.solve({g_omega, g_s});
}

Vec plate_traction(const Vec& u, const Vec& v, const Model& model) {
  const MacGrid& g = model.grid();
  const auto& J = model.plate().interior;
  Vec tau(J.size());
  for (size_t a = 0; a < J.size(); ++a) tau[a] = (v[J[a]] - u[g.below_face(J[a])]) / g.h();
  return tau;
}

static void check_plate_layout(const Vec& w, const Model& model) {
  if (w.size() != model.plate_size()) throw DimensionError("plate field has wrong length");
  const double tol = 1e-8 * w.cwiseAbs().maxCoeff();
  for (int k = 0; k < model.plate_size(); ++k)
    if (!model.grid().plate_node_interior(k) && std::abs(w[k]) > tol)
      throw DimensionError("plate field is nonzero on a clamped node");
}

BoundaryData g1_data(const Vec& w, const Model& model) {
  check_plate_layout(w, model);
  const PlateOperators& pl = model.plate();
  return {pl.P_rho_inv * (pl.Bilap * model.plate_interior_values(w)),
          Vec::Zero(model.grid().s_faces().size())};
}

BoundaryData g2_data(const Vec& u, const Model& model) {
  if (u.size() != model.fluid_size()) throw DimensionError("velocity field has wrong length");
  const MacGrid& g = model.grid();
  const Vec q = model.fluid().NormalLap * u;
  BoundaryData data{Vec(g.omega_faces().size()), Vec(g.s_faces().size())};
  for (size_t a = 0; a < g.s_faces().size(); ++a) data.s[a] = q[g.boundary_slot(g.s_faces()[a])];
  // The plate velocity equals the normal trace, so the traction is a
  // function of u alone.
  Vec top(model.plate_size());
  for (int k = 0; k < model.plate_size(); ++k) top[k] = u[g.top_face(k)];
  data.omega = model.plate().P_rho_inv * plate_traction(u, top, model);
  for (size_t a = 0; a < g.omega_faces().size(); ++a)
    data.omega[a] += q[g.boundary_slot(g.omega_faces()[a])];
  return data;
}

PressureField apply_G1(const Vec& w, const RobinSystem& sys) {
  return sys.solve(g1_data(w, sys.model()));
}

PressureField apply_G2(const Vec& u, const RobinSystem& sys) {
  return sys.solve(g2_data(u, sys.model()));
}

SaddleOracle::SaddleOracle(const Model& model) : model_(model) {
  const MacGrid& g = model.grid();
  const PlateOperators& pl = model.plate();
  const FluidOperators& fl = model.fluid();
  const auto& I = g.interior_faces();
  const auto& J = pl.interior;
  const int ni = static_cast<int>(I.size());
  const int m = static_cast<int>(J.size());
  const int nc = g.num_cells();
  const double h = g.h();

  // Unknowns: fluid acceleration on interior faces, plate acceleration on the
  // free nodes, pressure. Rows: momentum, plate equation, incompressibility.
  Mat S = Mat::Zero(ni + m + nc, ni + m + nc);
  const Mat grad(fl.Grad);
  const Mat div(fl.Div);
  for (int r = 0; r < ni; ++r) {
    S(r, r) = 1.0;
    S.block(r, ni + m, 1, nc) = grad.row(I[r]);
  }
  S.block(ni, ni, m, m) = pl.P_rho;
  for (int a = 0; a < m; ++a) S(ni + a, ni + m + g.top_cell(J[a])) -= 1.0;
  for (int c = 0; c < nc; ++c)
    for (int r = 0; r < ni; ++r) S(ni + m + c, r) = div(c, I[r]);
  for (int a = 0; a < m; ++a) S(ni + m + g.top_cell(J[a]), ni + a) += 1.0 / h;

  lu_.compute(S);
  if (!(lu_.rcond() > 1e-15)) throw InternalError("saddle-point oracle system is singular");
}

Vec SaddleOracle::pressure(const Vec& w, const Vec& u, const Forcing& forcing) const {
  const Model& model = model_;
  check_plate_layout(w, model);
  if (u.size() != model.fluid_size()) throw DimensionError("velocity field has wrong length");
  const MacGrid& g = model.grid();
  const PlateOperators& pl = model.plate();
  const auto& I = g.interior_faces();
  const auto& J = pl.interior;
  const int ni = static_cast<int>(I.size());
  const int m = static_cast<int>(J.size());
  const int nc = g.num_cells();

  Vec rhs = Vec::Zero(ni + m + nc);
  const Vec lap_u = model.fluid().VecLap * u;
  for (int r = 0; r < ni; ++r) rhs[r] = lap_u[I[r]] + (forcing.u.size() ? forcing.u[I[r]] : 0.0);
  Vec top(model.plate_size());
  for (int k = 0; k < model.plate_size(); ++k) top[k] = u[g.top_face(k)];
  const Vec plate_rhs =
      -pl.Bilap * model.plate_interior_values(w) - plate_traction(u, top, model);
  for (int a = 0; a < m; ++a)
    rhs[ni + a] = plate_rhs[a] + (forcing.v.size() ? forcing.v[J[a]] : 0.0);
  // The plate acceleration enters the incompressibility rows, which pins the
  // pressure constant; no further normalization is needed.
  return lu_.solve(rhs).tail(nc);
}

Vec pressure_oracle(const Vec& w, const Vec& u, const Forcing& forcing, const Model& model) {
  return SaddleOracle(model).pressure(w, u, forcing);
}

Vec match_constant(const Vec& p, const Vec& target) {
  const double c = (target - p).mean();
  return (p.array() + c).matrix();
}

}  // namespace fsilab

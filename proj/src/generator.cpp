#include "fsilab/generator.hpp"

#include <cmath>

namespace fsilab {

Generator::Generator(const Model& model, const Subspace& sub, const RobinSystem& sys)
    : model_(model), sub_(sub), sys_(sys) {
  const MacGrid& g = model.grid();
  const PlateOperators& pl = model.plate();
  for (int k : pl.interior) top_cells_.push_back(g.top_cell(k));

  // Static Stokes block: interior velocities, cell pressures and one border
  // multiplier that absorbs the rank-one defect of the divergence rows.
  const int nf = model.fluid_size();
  const int nc = g.num_cells();
  std::vector<int> slot(nf, -1);
  const auto& I = g.interior_faces();
  for (size_t i = 0; i < I.size(); ++i) slot[I[i]] = static_cast<int>(i);
  const int ni = static_cast<int>(I.size());
  std::vector<Triplet> t;
  const SpMat& L = model.fluid().VecLap;
  for (int c = 0; c < L.outerSize(); ++c)
    for (SpMat::InnerIterator it(L, c); it; ++it)
      if (slot[it.row()] >= 0 && slot[it.col()] >= 0)
        t.emplace_back(slot[it.row()], slot[it.col()], it.value());
  const SpMat& G = model.fluid().Grad;
  for (int c = 0; c < G.outerSize(); ++c)
    for (SpMat::InnerIterator it(G, c); it; ++it)
      t.emplace_back(slot[it.row()], ni + it.col(), -it.value());
  const SpMat& Dv = model.fluid().Div;
  for (int c = 0; c < Dv.outerSize(); ++c)
    for (SpMat::InnerIterator it(Dv, c); it; ++it)
      if (slot[it.col()] >= 0) t.emplace_back(ni + it.row(), slot[it.col()], it.value());
  for (int c = 0; c < nc; ++c) {
    t.emplace_back(ni + c, ni + nc, 1.0);
    t.emplace_back(ni + nc, ni + c, 1.0);
  }
  SpMat S(ni + nc + 1, ni + nc + 1);
  S.setFromTriplets(t.begin(), t.end());
  S.makeCompressed();
  stokes_.compute(S);
  if (stokes_.info() != Eigen::Success) throw InternalError("static Stokes factorization failed");

  bilap_.compute(pl.Bilap);
  if (bilap_.info() != Eigen::Success) throw InternalError("clamped bilaplacian is not SPD");
  varpi_ = bilap_.solve(Vec::Ones(pl.interior.size()));
}

void Generator::require_constrained(const Vec& packed, const char* what) const {
  const double defect = model_.constraint_defect(packed);
  if (defect > 1e-8)
    throw PreconditionError(std::string(what) + ": state violates the constraints (defect " +
                            std::to_string(defect) + ")");
}

Mat Generator::apply_packed(const Mat& X, bool adjoint, Mat* pressure) const {
  const MacGrid& g = model_.grid();
  const PlateOperators& pl = model_.plate();
  const FluidOperators& fl = model_.fluid();
  const auto& J = pl.interior;
  const int m = static_cast<int>(J.size());
  const int np = model_.plate_size();
  const int nf = model_.fluid_size();
  const Eigen::Index k = X.cols();
  const double s = adjoint ? -1.0 : 1.0;
  const double h = g.h();

  const auto U = X.middleRows(model_.u_offset(), nf);
  Mat WJ(m, k), tau(m, k);
  for (int a = 0; a < m; ++a) {
    WJ.row(a) = X.row(model_.w_offset() + J[a]);
    tau.row(a) = (U.row(g.top_face(J[a])) - U.row(g.below_face(J[a]))) / h;
  }
  const Mat LU = fl.VecLap * U;
  Mat gb = fl.NormalLap * U;
  const Mat BW = pl.Bilap * WJ;
  const Mat robin = pl.P_rho_inv * (s * BW + tau);
  for (int a = 0; a < m; ++a) gb.row(g.boundary_slot(g.omega_faces()[a])) += robin.row(a);
  const Mat sol = sys_.solve_slots(gb);
  const auto P = sol.topRows(sys_.cells());

  Mat TP(m, k);
  for (int a = 0; a < m; ++a) TP.row(a) = P.row(top_cells_[a]);
  const Mat vJ = pl.P_rho_inv * (-s * BW + TP - tau);

  Mat out = Mat::Zero(X.rows(), k);
  out.middleRows(model_.w_offset(), np) = s * X.middleRows(model_.v_offset(), np);
  for (int a = 0; a < m; ++a) out.row(model_.v_offset() + J[a]) = vJ.row(a);
  out.middleRows(model_.u_offset(), nf) = LU - fl.Grad * P;
  for (int n = 0; n < np; ++n)
    out.row(model_.u_offset() + g.top_face(n)) = out.row(model_.v_offset() + n);
  if (pressure) *pressure = sol;
  return out;
}

ApplyResult Generator::apply(const StateVector& x, bool adjoint) const {
  const Vec packed = model_.pack(x);
  require_constrained(packed, adjoint ? "apply_A_star" : "apply_A");
  Mat sol;
  const Vec raw = apply_packed(packed, adjoint, &sol).col(0);
  const Vec proj = sub_.project(raw);
  const Vec diff = raw - proj;
  ApplyResult r;
  r.out = model_.unpack(proj);
  r.correction = std::sqrt(std::max(0.0, diff.dot(model_.energy_matrix() * diff)));
  r.pressure.p = sol.col(0).head(sys_.cells());
  r.pressure.dn = sol.col(0).tail(sol.rows() - sys_.cells());
  return r;
}

Vec Generator::zero_mean_energy_projection(const Vec& w_interior, double* alpha) const {
  const double a = w_interior.mean() / varpi_.mean();
  if (alpha) *alpha = a;
  return w_interior - a * varpi_;
}

StateVector Generator::static_solve(const StateVector& b) const {
  model_.check_shape(b);
  const double wscale = std::max(b.w.cwiseAbs().maxCoeff(), 1e-300);
  if (std::abs(model_.plate_mean(b.w)) > 1e-8 * wscale)
    throw PreconditionError("static_solve: first component has nonzero mean (compatibility)");
  const Vec bp = model_.pack(b);
  require_constrained(bp, "static_solve");

  const MacGrid& g = model_.grid();
  const PlateOperators& pl = model_.plate();
  const FluidOperators& fl = model_.fluid();
  const auto& I = g.interior_faces();
  const int ni = static_cast<int>(I.size());
  const int nc = g.num_cells();

  // (i) plate velocity
  const Vec v = b.w;

  // (ii) static Stokes problem with the plate velocity as wall data
  Vec ub = Vec::Zero(model_.fluid_size());
  for (int n = 0; n < model_.plate_size(); ++n) ub[g.top_face(n)] = v[n];
  const Vec lift = fl.VecLap * ub;
  const Vec flux = fl.Div * ub;
  Vec rhs = Vec::Zero(ni + nc + 1);
  for (int i = 0; i < ni; ++i) rhs[i] = b.u[I[i]] - lift[I[i]];
  rhs.segment(ni, nc) = -flux;
  const Vec sol = stokes_.solve(rhs);
  if (stokes_.info() != Eigen::Success) throw InternalError("static Stokes solve failed");
  Vec u = ub;
  for (int i = 0; i < ni; ++i) u[I[i]] = sol[i];
  const Vec q = sol.segment(ni, nc);

  // (iii) clamped plate problem driven by the pressure trace
  Vec Tq(top_cells_.size());
  for (size_t a = 0; a < top_cells_.size(); ++a) Tq[a] = q[top_cells_[a]];
  const Vec what = bilap_.solve(Tq - plate_traction(u, v, model_) -
                                pl.P_rho * model_.plate_interior_values(b.v));

  // (iv) zero-mean projection; the pressure constant shifts by -alpha
  const Vec w = zero_mean_energy_projection(what);
  return {model_.plate_embed(w), v, u};
}

double Generator::domain_norm(const StateVector& x) const {
  const double a = energy_norm(x, model_);
  const double b = energy_norm(apply_A(x), model_);
  return std::sqrt(a * a + b * b);
}

static double m_norm(const Mat& X, const SpMat& M) {
  return std::sqrt(std::max(0.0, (X.array() * (M * X).array()).sum()));
}

ReducedGenerator reduce(const Generator& gen) {
  const Subspace& sub = gen.subspace();
  const SpMat& M = gen.model().energy_matrix();
  ReducedGenerator red;
  red.Q = sub.Q();
  red.dim = sub.dim();
  const Mat AQ = gen.apply_packed(red.Q, false);
  red.A_red = red.Q.transpose() * (M * AQ);
  red.consistency = m_norm(red.Q * red.A_red - AQ, M) / m_norm(AQ, M);
  return red;
}

}  // namespace fsilab

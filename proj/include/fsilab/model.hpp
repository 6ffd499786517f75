#pragma once

#include <string>
#include <type_traits>
#include <vector>

#include "fsilab/grid.hpp"
#include "fsilab/types.hpp"

namespace fsilab {

enum class Mode { section2d, box3d };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct ModelParams {
  double rho = 1.0;
  Mode mode = Mode::section2d;
  int n_fluid = 24;
  // Test hook: flips the sign of one neighbour coefficient of the fluid
  // Laplacian so that the invariant suite has something to catch.
  bool debug_flip_stencil = false;

  int dim() const { return mode == Mode::section2d ? 2 : 3; }
  void validate() const;
};

// Plate operators on the n^(d-1) plate grid. Ring nodes are clamped; the
// dense blocks act on the interior nodes only (plate_interior order).
struct PlateOperators {
  int nodes = 0;
  double h = 0.0;
  std::vector<int> interior;
  SpMat D;     // 5/3-point Laplacian on the full grid, even ghost reflection
  Vec trap_w;  // trapezoid weights on the full grid
  SpMat K;     // D^T diag(trap_w) D, the (Lap w, Lap w~) form
  Mat A_D;
  Mat Bilap;
  Mat P_rho;
  Mat P_rho_half;
  Mat P_rho_inv;
  Vec quad_w;
  Mat zero_mean_proj;
};

struct FluidOperators {
  SpMat VecLap;     // faces x faces; rows of boundary faces are empty
  SpMat NormalLap;  // boundary faces x faces: normal component of Lap u on the wall
  SpMat Div;        // cells x faces
  SpMat Grad;       // faces x cells; rows of boundary faces are empty
  SpMat trace_S;
  SpMat trace_Omega;
  SpMat normal_trace_Omega;  // top faces, one per plate node
  SpMat grad_samples;        // rows: weighted difference quotients of u
  Vec weights;               // h^d on interior faces, 0 on wall faces
};

std::pair<PlateOperators, FluidOperators> build_operators(const ModelParams& params);

// Uniform 1D Dirichlet Laplacian tridiag(-1,2,-1)/h^2 on n nodes.
Mat dirichlet_laplacian_1d(int n, double h);

template <class Scalar>
struct BasicState {
  using Field = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Field w;
  Field v;
  Field u;
};
using StateVector = BasicState<double>;
using ComplexState = BasicState<cplx>;

struct ConstraintReport {
  double mean_w = 0, mean_v = 0, clamp = 0, div = 0, wall = 0, omega = 0;
  double max() const;
};

class Model {
 public:
  explicit Model(const ModelParams& params);

  const ModelParams& params() const { return params_; }
  const MacGrid& grid() const { return grid_; }
  const PlateOperators& plate() const { return plate_; }
  const FluidOperators& fluid() const { return fluid_; }

  int plate_size() const { return plate_.nodes; }
  int fluid_size() const { return grid_.num_faces(); }
  int size() const { return 2 * plate_size() + fluid_size(); }
  int w_offset() const { return 0; }
  int v_offset() const { return plate_size(); }
  int u_offset() const { return 2 * plate_size(); }

  // Energy Gram matrix: x^T M y is the energy inner product of packed states.
  const SpMat& energy_matrix() const { return M_; }
  // Stacked linear constraints C x = 0 defining the state space.
  const SpMat& constraints() const { return C_; }

  Vec pack(const StateVector& x) const;
  StateVector unpack(const Vec& x) const;
  StateVector zero_state() const;
  void check_sizes(Eigen::Index nw, Eigen::Index nv, Eigen::Index nu) const;
  void check_shape(const StateVector& x) const { check_sizes(x.w.size(), x.v.size(), x.u.size()); }

  ConstraintReport constraint_report(const StateVector& x) const;
  // Max over constraint rows (normalized to unit length) relative to max|x|.
  double constraint_defect(const Vec& x) const;

  double velocity_gradient_sq(const Vec& u) const;
  Vec plate_interior_values(const Vec& full) const;
  Vec plate_embed(const Vec& interior) const;
  double plate_mean(const Vec& full) const;

 private:
  ModelParams params_;
  MacGrid grid_;
  PlateOperators plate_;
  FluidOperators fluid_;
  SpMat M_;
  SpMat C_;
  Vec C_row_scale_;
};

// Real operator applied to a real or complex field.
template <class Op, class Field>
Field apply_real(const Op& op, const Field& x) {
  if constexpr (std::is_same_v<typename Field::Scalar, double>) {
    return op * x;
  } else {
    const Vec re = op * x.real();
    const Vec im = op * x.imag();
    Field out(re.size());
    for (Eigen::Index k = 0; k < re.size(); ++k) out[k] = {re[k], im[k]};
    return out;
  }
}

template <class Scalar>
cplx energy_inner_product(const BasicState<Scalar>& x, const BasicState<Scalar>& y,
                          const Model& model) {
  model.check_sizes(x.w.size(), x.v.size(), x.u.size());
  model.check_sizes(y.w.size(), y.v.size(), y.u.size());
  const PlateOperators& pl = model.plate();
  using Field = typename BasicState<Scalar>::Field;
  const Field lx = apply_real(pl.D, x.w);
  const Field ly = apply_real(pl.D, y.w);
  cplx bending = 0;
  for (Eigen::Index k = 0; k < lx.size(); ++k)
    bending += pl.trap_w[k] * cplx(lx[k]) * std::conj(cplx(ly[k]));

  const auto m = static_cast<Eigen::Index>(pl.interior.size());
  Field vx(m), vy(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    vx[a] = x.v[pl.interior[a]];
    vy[a] = y.v[pl.interior[a]];
  }
  const Field px = apply_real(pl.P_rho_half, vx);
  const Field py = apply_real(pl.P_rho_half, vy);
  cplx kinetic = 0;
  for (Eigen::Index a = 0; a < m; ++a)
    kinetic += pl.quad_w[a] * cplx(px[a]) * std::conj(cplx(py[a]));

  const Vec& wt = model.fluid().weights;
  cplx fluid = 0;
  for (Eigen::Index f = 0; f < wt.size(); ++f)
    if (wt[f] != 0.0) fluid += wt[f] * cplx(x.u[f]) * std::conj(cplx(y.u[f]));
  return bending + kinetic + fluid;
}

double energy_norm(const StateVector& x, const Model& model);

}  // namespace fsilab

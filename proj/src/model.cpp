#include "fsilab/model.hpp"

#include <algorithm>
#include <cmath>

namespace fsilab {

std::string to_string(Mode mode) { return mode == Mode::section2d ? "section2d" : "box3d"; }

Mode parse_mode(const std::string& text) {
  if (text == "section2d") return Mode::section2d;
  if (text == "box3d") return Mode::box3d;
  throw ConfigError("mode: expected section2d or box3d, got '" + text + "'");
}

void ModelParams::validate() const {
  if (!std::isfinite(rho) || rho < 0) throw ConfigError("rho: must be a finite value >= 0");
  const int max_n = mode == Mode::section2d ? 48 : 12;
  if (n_fluid < 4 || n_fluid > max_n)
    throw ConfigError("n_fluid: must lie in [4, " + std::to_string(max_n) + "] for " +
                      to_string(mode));
  // The clamped stencil needs at least four free plate nodes.
  int interior = 1;
  for (int b = 0; b < dim() - 1; ++b) interior *= n_fluid - 2;
  if (interior < 4)
    throw ConfigError("n_fluid: too small to host a clamped plate stencil (needs >= 4 interior "
                      "plate nodes, got " + std::to_string(interior) + ")");
}

double ConstraintReport::max() const {
  return std::max({mean_w, mean_v, clamp, div, wall, omega});
}

Mat dirichlet_laplacian_1d(int n, double h) {
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 2.0;
    if (i > 0) a(i, i - 1) = -1.0;
    if (i + 1 < n) a(i, i + 1) = -1.0;
  }
  return a / (h * h);
}

namespace {

Mat dense_block(const SpMat& s, const std::vector<int>& idx) {
  const Mat full(s);
  Mat out(idx.size(), idx.size());
  for (size_t i = 0; i < idx.size(); ++i)
    for (size_t j = 0; j < idx.size(); ++j) out(i, j) = full(idx[i], idx[j]);
  return out;
}

PlateOperators build_plate(const ModelParams& params, const MacGrid& grid) {
  PlateOperators pl;
  const int n = grid.n();
  const int td = grid.dim() - 1;  // tangential dimensions
  const double h = grid.h();
  pl.nodes = grid.plate_nodes();
  pl.h = h;
  pl.interior = grid.plate_interior();

  auto digits = [&](int node) {
    Index3 k{0, 0, 0};
    for (int b = 0; b < td; ++b) {
      k[b] = node % n;
      node /= n;
    }
    return k;
  };
  auto node_of = [&](const Index3& k) {
    int id = 0;
    for (int b = td - 1; b >= 0; --b) id = id * n + k[b];
    return id;
  };

  std::vector<Triplet> t;
  pl.trap_w.resize(pl.nodes);
  for (int node = 0; node < pl.nodes; ++node) {
    const Index3 k = digits(node);
    double wt = 1.0;
    for (int b = 0; b < td; ++b) {
      wt *= h;
      if (k[b] == 0 || k[b] == n - 1) wt *= 0.5;
      for (int s : {-1, 1}) {
        Index3 g = k;
        g[b] += s;
        if (g[b] < 0 || g[b] >= n) g[b] = k[b] - s;  // even reflection
        t.emplace_back(node, node_of(g), 1.0 / (h * h));
        t.emplace_back(node, node, -1.0 / (h * h));
      }
    }
    pl.trap_w[node] = wt;
  }
  pl.D.resize(pl.nodes, pl.nodes);
  pl.D.setFromTriplets(t.begin(), t.end());
  pl.K = SpMat(pl.D.transpose() * pl.trap_w.asDiagonal() * pl.D);

  const int m = static_cast<int>(pl.interior.size());
  pl.A_D = -dense_block(pl.D, pl.interior);
  pl.Bilap = dense_block(SpMat(pl.D * pl.D), pl.interior);
  pl.P_rho = Mat::Identity(m, m) + params.rho * pl.A_D;

  Eigen::SelfAdjointEigenSolver<Mat> eig(pl.A_D);
  if (eig.info() != Eigen::Success) throw InternalError("plate Laplacian eigensolver failed");
  const Vec lam = (1.0 + params.rho * eig.eigenvalues().array()).matrix();
  const Mat& V = eig.eigenvectors();
  pl.P_rho_half = V * lam.cwiseSqrt().asDiagonal() * V.transpose();
  pl.P_rho_inv = V * lam.cwiseInverse().asDiagonal() * V.transpose();

  pl.quad_w = Vec::Constant(m, std::pow(h, td));
  pl.zero_mean_proj =
      Mat::Identity(m, m) - Vec::Ones(m) * pl.quad_w.transpose() / pl.quad_w.sum();
  return pl;
}

FluidOperators build_fluid(const ModelParams& params, const MacGrid& grid) {
  FluidOperators fl;
  const int d = grid.dim();
  const int nf = grid.num_faces();
  const int nc = grid.num_cells();
  const double h = grid.h();
  const double h2 = h * h;
  const double cellvol = std::pow(h, d);

  // Face Laplacian. Tangential neighbours outside the box use the odd ghost
  // -u (no slip); a wall face looks through the wall at its mirror image.
  std::vector<Triplet> lap;
  for (int f = 0; f < nf; ++f) {
    const int a = grid.face_comp(f);
    const Index3 fi = grid.face_index(f);
    for (int b = 0; b < d; ++b) {
      for (int s : {-1, 1}) {
        Index3 g = fi;
        g[b] += s;
        double c = 1.0 / h2;
        if (params.debug_flip_stencil && a == 0 && b == 0 && s == 1 && !grid.is_boundary_face(f))
          c = -c;
        if (grid.face_in_range(a, g)) {
          lap.emplace_back(f, grid.face_id(a, g), c);
          lap.emplace_back(f, f, -1.0 / h2);
        } else if (b == a) {
          Index3 mirror = fi;
          mirror[b] -= s;
          lap.emplace_back(f, grid.face_id(a, mirror), 1.0 / h2);
          lap.emplace_back(f, f, -1.0 / h2);
        } else {
          lap.emplace_back(f, f, -2.0 / h2);
        }
      }
    }
  }
  SpMat full(nf, nf);
  full.setFromTriplets(lap.begin(), lap.end());

  const auto& bf = grid.boundary_faces();
  std::vector<Triplet> keep, normal;
  for (int k = 0; k < full.outerSize(); ++k) {
    for (SpMat::InnerIterator it(full, k); it; ++it) {
      const int row = static_cast<int>(it.row());
      if (grid.is_boundary_face(row))
        normal.emplace_back(grid.boundary_slot(row), it.col(), grid.wall_sign(row) * it.value());
      else
        keep.emplace_back(row, it.col(), it.value());
    }
  }
  fl.VecLap.resize(nf, nf);
  fl.VecLap.setFromTriplets(keep.begin(), keep.end());
  fl.NormalLap.resize(static_cast<int>(bf.size()), nf);
  fl.NormalLap.setFromTriplets(normal.begin(), normal.end());

  std::vector<Triplet> div, grad;
  for (int c = 0; c < nc; ++c) {
    const Index3 ci = grid.cell_index(c);
    for (int a = 0; a < d; ++a) {
      Index3 hi = ci;
      hi[a] += 1;
      const int flo = grid.face_id(a, ci);
      const int fhi = grid.face_id(a, hi);
      div.emplace_back(c, fhi, 1.0 / h);
      div.emplace_back(c, flo, -1.0 / h);
      if (!grid.is_boundary_face(fhi)) grad.emplace_back(fhi, c, -1.0 / h);
      if (!grid.is_boundary_face(flo)) grad.emplace_back(flo, c, 1.0 / h);
    }
  }
  fl.Div.resize(nc, nf);
  fl.Div.setFromTriplets(div.begin(), div.end());
  fl.Grad.resize(nf, nc);
  fl.Grad.setFromTriplets(grad.begin(), grad.end());

  auto selection = [nf](const std::vector<int>& faces) {
    SpMat s(static_cast<int>(faces.size()), nf);
    std::vector<Triplet> t;
    for (size_t i = 0; i < faces.size(); ++i) t.emplace_back(static_cast<int>(i), faces[i], 1.0);
    s.setFromTriplets(t.begin(), t.end());
    return s;
  };
  fl.trace_S = selection(grid.s_faces());
  fl.trace_Omega = selection(grid.omega_faces());
  std::vector<int> top(grid.plate_nodes());
  for (int k = 0; k < grid.plate_nodes(); ++k) top[k] = grid.top_face(k);
  fl.normal_trace_Omega = selection(top);

  fl.weights = Vec::Zero(nf);
  for (int f : grid.interior_faces()) fl.weights[f] = cellvol;

  // Difference quotients whose squared sum is the discrete Dirichlet integral.
  std::vector<Triplet> gs;
  int row = 0;
  const double wdiff = std::sqrt(cellvol) / h;
  const double wwall = std::sqrt(cellvol / 2.0) * 2.0 / h;
  for (int f = 0; f < nf; ++f) {
    const int a = grid.face_comp(f);
    const Index3 fi = grid.face_index(f);
    for (int b = 0; b < d; ++b) {
      Index3 g = fi;
      g[b] += 1;
      if (!grid.face_in_range(a, g)) continue;
      const int gid = grid.face_id(a, g);
      if (grid.is_boundary_face(f) && grid.is_boundary_face(gid)) continue;
      gs.emplace_back(row, gid, wdiff);
      gs.emplace_back(row, f, -wdiff);
      ++row;
    }
    if (grid.is_boundary_face(f)) continue;
    for (int b = 0; b < d; ++b) {
      if (b == a) continue;
      for (int s : {-1, 1}) {
        Index3 g = fi;
        g[b] += s;
        if (grid.face_in_range(a, g)) continue;
        gs.emplace_back(row++, f, wwall);
      }
    }
  }
  fl.grad_samples.resize(row, nf);
  fl.grad_samples.setFromTriplets(gs.begin(), gs.end());
  return fl;
}

}  // namespace

std::pair<PlateOperators, FluidOperators> build_operators(const ModelParams& params) {
  params.validate();
  const MacGrid grid(params.dim(), params.n_fluid);
  return {build_plate(params, grid), build_fluid(params, grid)};
}

Model::Model(const ModelParams& params)
    : params_(params), grid_((params.validate(), params.dim()), params.n_fluid) {
  plate_ = build_plate(params_, grid_);
  fluid_ = build_fluid(params_, grid_);

  const int np = plate_size();
  const int nf = fluid_size();
  const int N = size();
  const auto& J = plate_.interior;
  const int m = static_cast<int>(J.size());

  std::vector<Triplet> mt;
  for (int k = 0; k < plate_.K.outerSize(); ++k)
    for (SpMat::InnerIterator it(plate_.K, k); it; ++it)
      mt.emplace_back(w_offset() + it.row(), w_offset() + it.col(), it.value());
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      if (plate_.P_rho(a, b) != 0.0)
        mt.emplace_back(v_offset() + J[a], v_offset() + J[b], plate_.quad_w[a] * plate_.P_rho(a, b));
  for (int f = 0; f < nf; ++f)
    if (fluid_.weights[f] != 0.0) mt.emplace_back(u_offset() + f, u_offset() + f, fluid_.weights[f]);
  M_.resize(N, N);
  M_.setFromTriplets(mt.begin(), mt.end());

  std::vector<Triplet> ct;
  int row = 0;
  for (int k = 0; k < np; ++k)
    if (!grid_.plate_node_interior(k)) ct.emplace_back(row++, w_offset() + k, 1.0);
  for (int a = 0; a < m; ++a) ct.emplace_back(row, w_offset() + J[a], plate_.quad_w[a]);
  ++row;
  for (int k = 0; k < np; ++k)
    if (!grid_.plate_node_interior(k)) ct.emplace_back(row++, v_offset() + k, 1.0);
  for (int f : grid_.s_faces()) {
    const bool top = grid_.face_comp(f) == grid_.dim() - 1 && grid_.wall_sign(f) > 0;
    if (!top) ct.emplace_back(row++, u_offset() + f, 1.0);
  }
  for (int k = 0; k < np; ++k) {
    ct.emplace_back(row, u_offset() + grid_.top_face(k), 1.0);
    ct.emplace_back(row++, v_offset() + k, -1.0);
  }
  for (int k = 0; k < fluid_.Div.outerSize(); ++k)
    for (SpMat::InnerIterator it(fluid_.Div, k); it; ++it)
      ct.emplace_back(row + it.row(), u_offset() + it.col(), it.value());
  row += static_cast<int>(fluid_.Div.rows());
  C_.resize(row, N);
  C_.setFromTriplets(ct.begin(), ct.end());

  C_row_scale_ = Vec::Zero(row);
  for (int k = 0; k < C_.outerSize(); ++k)
    for (SpMat::InnerIterator it(C_, k); it; ++it) C_row_scale_[it.row()] += it.value() * it.value();
  C_row_scale_ = C_row_scale_.cwiseSqrt().cwiseInverse();
}

void Model::check_sizes(Eigen::Index nw, Eigen::Index nv, Eigen::Index nu) const {
  if (nw != plate_size() || nv != plate_size() || nu != fluid_size())
    throw DimensionError("state fields do not match the grid (expected " +
                         std::to_string(plate_size()) + "/" + std::to_string(plate_size()) + "/" +
                         std::to_string(fluid_size()) + ")");
}

Vec Model::pack(const StateVector& x) const {
  check_shape(x);
  Vec out(size());
  out << x.w, x.v, x.u;
  return out;
}

StateVector Model::unpack(const Vec& x) const {
  if (x.size() != size()) throw DimensionError("packed state has wrong length");
  return {x.segment(w_offset(), plate_size()), x.segment(v_offset(), plate_size()),
          x.segment(u_offset(), fluid_size())};
}

StateVector Model::zero_state() const {
  return {Vec::Zero(plate_size()), Vec::Zero(plate_size()), Vec::Zero(fluid_size())};
}

Vec Model::plate_interior_values(const Vec& full) const {
  Vec out(plate_.interior.size());
  for (size_t a = 0; a < plate_.interior.size(); ++a) out[a] = full[plate_.interior[a]];
  return out;
}

Vec Model::plate_embed(const Vec& interior) const {
  Vec out = Vec::Zero(plate_size());
  for (size_t a = 0; a < plate_.interior.size(); ++a) out[plate_.interior[a]] = interior[a];
  return out;
}

double Model::plate_mean(const Vec& full) const {
  return plate_.quad_w.dot(plate_interior_values(full)) / plate_.quad_w.sum();
}

ConstraintReport Model::constraint_report(const StateVector& x) const {
  check_shape(x);
  ConstraintReport r;
  r.mean_w = std::abs(plate_mean(x.w));
  r.mean_v = std::abs(plate_mean(x.v));
  double clamp = 0, wall = 0, omega = 0;
  for (int k = 0; k < plate_size(); ++k) {
    if (!grid_.plate_node_interior(k)) clamp += x.w[k] * x.w[k] + x.v[k] * x.v[k];
    const double d = x.u[grid_.top_face(k)] - x.v[k];
    omega += d * d;
  }
  for (int f : grid_.s_faces()) {
    const bool top = grid_.face_comp(f) == grid_.dim() - 1 && grid_.wall_sign(f) > 0;
    if (!top) wall += x.u[f] * x.u[f];
  }
  r.clamp = std::sqrt(clamp);
  r.wall = std::sqrt(wall);
  r.omega = std::sqrt(omega);
  r.div = (fluid_.Div * x.u).norm();
  return r;
}

double Model::constraint_defect(const Vec& x) const {
  const double scale = x.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (C_row_scale_.asDiagonal() * (C_ * x)).cwiseAbs().maxCoeff() / scale;
}

double Model::velocity_gradient_sq(const Vec& u) const {
  return (fluid_.grad_samples * u).squaredNorm();
}

double energy_norm(const StateVector& x, const Model& model) {
  return std::sqrt(std::max(0.0, energy_inner_product(x, x, model).real()));
}

}  // namespace fsilab

#pragma once

#include <Eigen/SparseLU>

#include "fsilab/model.hpp"

namespace fsilab {

// Cell pressures together with the outward normal derivative on every wall
// face (boundary_faces() order); the latter are the Neumann/Robin unknowns.
struct PressureField {
  Vec p;
  Vec dn;
};

// Data for the two boundary pieces: omega in plate_interior order, s in
// s_faces order.
struct BoundaryData {
  Vec omega;
  Vec s;
};

struct BvpResidual {
  double interior = 0;  // cell rows, scaled by h^2
  double boundary = 0;  // Neumann and Robin rows
};

// Harmonic extension with Neumann rows on S and the nonlocal Robin rows
// dn + P^{-1} p = g on Omega. Cell rows are scaled by h^2.
class RobinSystem {
 public:
  explicit RobinSystem(const Model& model);

  const Model& model() const { return model_; }
  const SpMat& L_robin() const { return L_; }
  int cells() const { return cells_; }

  PressureField solve(const BoundaryData& g) const;
  // Batch solve: gb holds data in boundary-slot order, one column per case.
  Mat solve_slots(const Mat& gb) const;

  Mat to_slots(const BoundaryData& g) const;
  BvpResidual residual(const PressureField& f, const BoundaryData& g) const;

 private:
  const Model& model_;
  int cells_ = 0;
  SpMat L_;
  Eigen::SparseLU<SpMat> lu_;
};

PressureField solve_pressure_bvp(const Vec& g_omega, const Vec& g_s, const RobinSystem& sys);

// Plate-side viscous traction (v - u just below the plate)/h on interior nodes.
Vec plate_traction(const Vec& u, const Vec& v, const Model& model);

BoundaryData g1_data(const Vec& w, const Model& model);
BoundaryData g2_data(const Vec& u, const Model& model);
PressureField apply_G1(const Vec& w, const RobinSystem& sys);
PressureField apply_G2(const Vec& u, const RobinSystem& sys);

struct Forcing {
  Vec u;  // per face; wall entries ignored
  Vec v;  // per plate node; ring entries ignored
};

// Dense velocity-pressure saddle solve for the accelerations driven by (w,u)
// and the forcing. The factorization is reused across right-hand sides.
class SaddleOracle {
 public:
  explicit SaddleOracle(const Model& model);
  Vec pressure(const Vec& w, const Vec& u, const Forcing& forcing = {}) const;

 private:
  const Model& model_;
  Eigen::PartialPivLU<Mat> lu_;
};

Vec pressure_oracle(const Vec& w, const Vec& u, const Forcing& forcing, const Model& model);

// Best additive constant c minimising |p + c - target| and the shifted field.
Vec match_constant(const Vec& p, const Vec& target);

}  // namespace fsilab

#pragma once

#include <memory>

#include "fsilab/pressure.hpp"
#include "fsilab/subspace.hpp"

namespace fsilab {

struct ApplyResult {
  StateVector out;
  PressureField pressure;
  double correction = 0;  // energy norm removed by the post-projection
};

class Generator {
 public:
  Generator(const Model& model, const Subspace& sub, const RobinSystem& sys);

  const Model& model() const { return model_; }
  const Subspace& subspace() const { return sub_; }
  const RobinSystem& robin() const { return sys_; }

  StateVector apply_A(const StateVector& x) const { return apply(x, false).out; }
  StateVector apply_A_star(const StateVector& x) const { return apply(x, true).out; }
  ApplyResult apply(const StateVector& x, bool adjoint) const;

  // Operator rows on packed columns, no checks and no post-projection. When
  // pressure is given it receives the cell pressures, one column per input.
  Mat apply_packed(const Mat& X, bool adjoint, Mat* pressure = nullptr) const;

  StateVector static_solve(const StateVector& b) const;
  double domain_norm(const StateVector& x) const;

  // Energy-orthogonal projection of an interior plate displacement onto the
  // zero-mean displacements; also returns the removed multiple of Bilap^{-1}1.
  Vec zero_mean_energy_projection(const Vec& w_interior, double* alpha = nullptr) const;

 private:
  void require_constrained(const Vec& packed, const char* what) const;

  const Model& model_;
  const Subspace& sub_;
  const RobinSystem& sys_;
  std::vector<int> top_cells_;
  Eigen::SparseLU<SpMat> stokes_;
  Eigen::LLT<Mat> bilap_;
  Vec varpi_;  // Bilap^{-1} 1
};

struct ReducedGenerator {
  Mat Q;
  Mat A_red;
  int dim = 0;
  double consistency = 0;  // |Q A_red - A Q|_M / |A Q|_M
};

ReducedGenerator reduce(const Generator& gen);

// Everything needed for one configuration, built in dependency order.
struct Problem {
  explicit Problem(const ModelParams& params)
      : model(params), subspace(model), robin(model), gen(model, subspace, robin) {}
  Problem(const Problem&) = delete;
  Problem& operator=(const Problem&) = delete;

  Model model;
  Subspace subspace;
  RobinSystem robin;
  Generator gen;
};

}  // namespace fsilab

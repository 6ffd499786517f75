#pragma once

#include "fsilab/model.hpp"

namespace fsilab {

// Energy-orthonormal basis of the constrained state space.
class Subspace {
 public:
  explicit Subspace(const Model& model);

  const Model& model() const { return model_; }
  const Mat& Q() const { return Q_; }
  int dim() const { return static_cast<int>(Q_.cols()); }
  int constraint_rank() const { return rank_; }

  // Energy coordinates y = Q^T M x, and the reverse map Q y.
  Vec coords(const Vec& packed) const;
  Mat coords(const Mat& packed_cols) const;
  Vec expand(const Vec& y) const { return Q_ * y; }
  Vec project(const Vec& packed) const { return Q_ * coords(packed); }

 private:
  const Model& model_;
  Mat Q_;
  int rank_ = 0;
};

Mat build_subspace_basis(const Model& model);

StateVector project_to_state_space(const StateVector& raw, const Subspace& sub);

}  // namespace fsilab

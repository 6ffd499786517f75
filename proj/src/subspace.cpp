#include "fsilab/subspace.hpp"

#include <cmath>

namespace fsilab {

namespace {

// Diagonal rescaling that brings the energy Gram matrix close to the identity,
// so the nullspace factorization does not mix wildly different magnitudes.
Vec variable_scaling(const Model& model) {
  const SpMat& M = model.energy_matrix();
  const Vec diag = M.diagonal();
  Vec s(diag.size());
  const int blocks[4] = {model.w_offset(), model.v_offset(), model.u_offset(), model.size()};
  for (int b = 0; b < 3; ++b) {
    double fallback = 0.0;
    for (int i = blocks[b]; i < blocks[b + 1]; ++i) fallback = std::max(fallback, diag[i]);
    for (int i = blocks[b]; i < blocks[b + 1]; ++i)
      s[i] = 1.0 / std::sqrt(diag[i] > 0.0 ? diag[i] : fallback);
  }
  return s;
}

}  // namespace

Subspace::Subspace(const Model& model) : model_(model) {
  const SpMat& M = model.energy_matrix();
  const Mat C(model.constraints());
  const int N = model.size();
  const int rows = static_cast<int>(C.rows());

  const Vec s = variable_scaling(model);
  const Mat Ct = (C * s.asDiagonal()).transpose();
  Eigen::ColPivHouseholderQR<Mat> qr(Ct);
  qr.setThreshold(1e-11);
  rank_ = static_cast<int>(qr.rank());
  if (rank_ != rows)
    throw InternalError("constraint assembly is rank deficient: rank " + std::to_string(rank_) +
                        " of " + std::to_string(rows) + " rows");

  Mat Z = qr.householderQ() * Mat::Identity(N, N).rightCols(N - rank_);
  Z = s.asDiagonal() * Z;

  // Energy orthonormalization, done twice to clean up rounding.
  for (int pass = 0; pass < 2; ++pass) {
    const Mat G = Z.transpose() * (M * Z);
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success)
      throw InternalError("energy form is not positive definite on the constrained subspace");
    Z = llt.matrixL().solve(Z.transpose()).transpose();
  }
  Q_ = std::move(Z);
}

Vec Subspace::coords(const Vec& packed) const {
  return Q_.transpose() * (model_.energy_matrix() * packed);
}

Mat Subspace::coords(const Mat& packed_cols) const {
  return Q_.transpose() * (model_.energy_matrix() * packed_cols);
}

Mat build_subspace_basis(const Model& model) { return Subspace(model).Q(); }

StateVector project_to_state_space(const StateVector& raw, const Subspace& sub) {
  const Model& model = sub.model();
  return model.unpack(sub.project(model.pack(raw)));
}

}  // namespace fsilab

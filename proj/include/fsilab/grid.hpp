#pragma once

#include <array>
#include <vector>

namespace fsilab {

using Index3 = std::array<int, 3>;

// MAC layout on the unit square (dim 2) or unit cube (dim 3) with n cells per
// side. Velocity component a lives on faces normal to axis a, pressure at cell
// centres. The last axis is vertical; the plate sits on the top wall and its
// nodes coincide with the top normal-velocity faces.
class MacGrid {
 public:
  MacGrid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double h() const { return 1.0 / n_; }

  int num_cells() const { return num_cells_; }
  int num_faces() const { return offset_[dim_]; }
  int face_offset(int comp) const { return offset_[comp]; }

  int cell_id(const Index3& c) const;
  Index3 cell_index(int id) const;
  bool face_in_range(int comp, const Index3& f) const;
  int face_id(int comp, const Index3& f) const;
  int face_comp(int id) const;
  Index3 face_index(int id) const;

  bool is_boundary_face(int id) const { return wall_[id] != 0; }
  // -1 on the low wall of the face's own axis, +1 on the high wall, 0 inside.
  int wall_sign(int id) const { return wall_[id]; }
  int adjacent_cell(int boundary_face) const;

  // Plate grid: n^(dim-1) nodes, tangential multi-index with axis 0 fastest.
  int plate_nodes() const { return plate_nodes_; }
  bool plate_node_interior(int node) const;
  int top_face(int node) const;
  int below_face(int node) const;
  int top_cell(int node) const;

  const std::vector<int>& interior_faces() const { return interior_faces_; }
  const std::vector<int>& boundary_faces() const { return boundary_faces_; }
  // Boundary faces on the rigid walls S (this includes the top faces above the
  // clamped plate ring) and on the flexible part Omega (interior plate nodes,
  // listed in plate-node order).
  const std::vector<int>& s_faces() const { return s_faces_; }
  const std::vector<int>& omega_faces() const { return omega_faces_; }
  const std::vector<int>& plate_interior() const { return plate_interior_; }
  // Position of a face inside boundary_faces(), or -1.
  int boundary_slot(int face) const { return bslot_[face]; }

 private:
  int extent(int comp, int axis) const;

  int dim_;
  int n_;
  int num_cells_;
  int plate_nodes_;
  std::array<int, 4> offset_{};
  std::vector<signed char> wall_;
  std::vector<int> bslot_;
  std::vector<int> interior_faces_;
  std::vector<int> boundary_faces_;
  std::vector<int> s_faces_;
  std::vector<int> omega_faces_;
  std::vector<int> plate_interior_;
};

}  // namespace fsilab

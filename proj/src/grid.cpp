#include "fsilab/grid.hpp"

#include "fsilab/types.hpp"

namespace fsilab {

MacGrid::MacGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim != 2 && dim != 3) throw ConfigError("grid dimension must be 2 or 3");
  if (n < 1) throw ConfigError("n_fluid must be positive");
  num_cells_ = 1;
  for (int a = 0; a < dim_; ++a) num_cells_ *= n_;
  plate_nodes_ = num_cells_ / n_;
  offset_[0] = 0;
  for (int a = 0; a < dim_; ++a) {
    int count = 1;
    for (int b = 0; b < dim_; ++b) count *= extent(a, b);
    offset_[a + 1] = offset_[a] + count;
  }

  const int nf = num_faces();
  wall_.assign(nf, 0);
  bslot_.assign(nf, -1);
  for (int id = 0; id < nf; ++id) {
    const int a = face_comp(id);
    const Index3 f = face_index(id);
    if (f[a] == 0) wall_[id] = -1;
    if (f[a] == n_) wall_[id] = 1;
    if (wall_[id] == 0) {
      interior_faces_.push_back(id);
    } else {
      bslot_[id] = static_cast<int>(boundary_faces_.size());
      boundary_faces_.push_back(id);
    }
  }

  std::vector<char> is_omega(nf, 0);
  for (int k = 0; k < plate_nodes_; ++k) {
    if (!plate_node_interior(k)) continue;
    plate_interior_.push_back(k);
    omega_faces_.push_back(top_face(k));
    is_omega[top_face(k)] = 1;
  }
  for (int id : boundary_faces_)
    if (!is_omega[id]) s_faces_.push_back(id);
}

int MacGrid::extent(int comp, int axis) const {
  if (axis >= dim_) return 1;
  return axis == comp ? n_ + 1 : n_;
}

int MacGrid::cell_id(const Index3& c) const {
  int id = 0;
  for (int b = dim_ - 1; b >= 0; --b) id = id * n_ + c[b];
  return id;
}

Index3 MacGrid::cell_index(int id) const {
  Index3 c{0, 0, 0};
  for (int b = 0; b < dim_; ++b) {
    c[b] = id % n_;
    id /= n_;
  }
  return c;
}

bool MacGrid::face_in_range(int comp, const Index3& f) const {
  for (int b = 0; b < dim_; ++b)
    if (f[b] < 0 || f[b] >= extent(comp, b)) return false;
  return true;
}

int MacGrid::face_id(int comp, const Index3& f) const {
  int id = 0;
  for (int b = dim_ - 1; b >= 0; --b) id = id * extent(comp, b) + f[b];
  return offset_[comp] + id;
}

int MacGrid::face_comp(int id) const {
  int a = 0;
  while (id >= offset_[a + 1]) ++a;
  return a;
}

Index3 MacGrid::face_index(int id) const {
  const int a = face_comp(id);
  int r = id - offset_[a];
  Index3 f{0, 0, 0};
  for (int b = 0; b < dim_; ++b) {
    f[b] = r % extent(a, b);
    r /= extent(a, b);
  }
  return f;
}

int MacGrid::adjacent_cell(int face) const {
  const int a = face_comp(face);
  Index3 c = face_index(face);
  if (wall_[face] > 0) c[a] -= 1;
  return cell_id(c);
}

bool MacGrid::plate_node_interior(int node) const {
  for (int b = 0; b < dim_ - 1; ++b) {
    const int k = node % n_;
    node /= n_;
    if (k == 0 || k == n_ - 1) return false;
  }
  return true;
}

static Index3 plate_to_face(int node, int dim, int n, int vertical) {
  Index3 f{0, 0, 0};
  for (int b = 0; b < dim - 1; ++b) {
    f[b] = node % n;
    node /= n;
  }
  f[dim - 1] = vertical;
  return f;
}

int MacGrid::top_face(int node) const {
  return face_id(dim_ - 1, plate_to_face(node, dim_, n_, n_));
}

int MacGrid::below_face(int node) const {
  return face_id(dim_ - 1, plate_to_face(node, dim_, n_, n_ - 1));
}

int MacGrid::top_cell(int node) const {
  return cell_id(plate_to_face(node, dim_, n_, n_ - 1));
}

}  // namespace fsilab

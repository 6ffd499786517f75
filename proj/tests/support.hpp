#pragma once

#include <random>

#include "fsilab/generator.hpp"

namespace fsilab::testing {

inline ModelParams section(int n, double rho) {
  ModelParams p;
  p.n_fluid = n;
  p.rho = rho;
  return p;
}

inline Vec gaussian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Vec x(n);
  for (auto& v : x) v = nd(rng);
  return x;
}

inline StateVector random_state(const Subspace& sub, std::mt19937_64& rng) {
  return sub.model().unpack(sub.expand(gaussian(rng, sub.dim())));
}

inline StateVector raw_state(const Model& m, std::mt19937_64& rng) {
  return m.unpack(gaussian(rng, m.size()));
}

inline double state_diff(const StateVector& a, const StateVector& b, const Model& m) {
  return energy_norm({a.w - b.w, a.v - b.v, a.u - b.u}, m);
}

}  // namespace fsilab::testing

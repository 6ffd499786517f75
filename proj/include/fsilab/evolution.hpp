#pragma once

#include <cstdint>
#include <vector>

#include "fsilab/generator.hpp"
#include "fsilab/spectral.hpp"

namespace fsilab {

// Crank-Nicolson / Cayley propagator (I - dt/2 A)^{-1} (I + dt/2 A), formed
// once per dt.
class CayleyStepper {
 public:
  CayleyStepper(const Mat& A, double dt);

  double dt() const { return dt_; }
  double condition() const { return cond_; }
  const Mat& propagator() const { return S_; }
  Vec step(const Vec& y) const { return S_ * y; }

 private:
  double dt_;
  double cond_;
  Mat S_;
};

struct DecayTrace {
  std::vector<double> times;
  std::vector<double> norm_H;
  std::vector<double> t_times_norm;
  double x0_domain_norm = 0;
  double max_step_growth = 0;  // largest relative norm increase over one step
};

DecayTrace evolve(const Vec& y0, double t_final, const CayleyStepper& stepper,
                  double x0_domain_norm = 0);
DecayTrace evolve(const StateVector& x0, double t_final, double dt, const ReducedGenerator& red,
                  const Generator& gen);

struct SmoothData {
  StateVector x0;       // unit energy norm
  StateVector source;   // b with x0 = A^{-1} b / |A^{-1} b|, unit energy norm
  double domain_norm = 0;  // sqrt(1 + 1/|A^{-1} b|^2)
};

// Energy-white noise has no continuum limit, so it is smoothed once by the
// static solve before the second solve that puts it in the domain.
SmoothData smooth_data(std::uint64_t seed, const Generator& gen);

struct DecayFit {
  double rate_exponent = 0;
  double r2 = 0;
  double sup_t_times_norm = 0;  // over the window, relative to the graph norm
  bool super_polynomial = false;
  int samples = 0;
  FitWindow window;
};

DecayFit fit_decay(const DecayTrace& trace, FitWindow window);

struct ExponentialFit {
  double rate = 0;
  double r2 = 0;
  int samples = 0;
  FitWindow window;
};

ExponentialFit fit_exponential(const DecayTrace& trace, FitWindow window);

struct DecayWindows {
  bool has_intermediate = false;
  FitWindow intermediate;
  FitWindow late;
};

// Intermediate window: after the slowest oscillatory mode with appreciable
// damping has gone (2/eps_max) and before the spectral abscissa takes over
// (1/|s|). Late window: [2/|s|, 8/|s|].
DecayWindows suggest_windows(const SpectrumReport& spec);

struct DtChoice {
  double dt = 0;
  double observed_order = 0;
  double relative_error = 0;
  int halvings = 0;
};

// Halves dt until three-level Richardson shows order >= 1.9 and the
// estimated relative error at the horizon is below tol.
DtChoice choose_dt(const Mat& A, const Vec& y0, double horizon, double dt_start, double tol,
                   int max_halvings = 8);

}  // namespace fsilab

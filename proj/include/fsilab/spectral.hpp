#pragma once

#include <string>
#include <vector>

#include "fsilab/generator.hpp"

namespace fsilab {

struct SpectrumReport {
  std::vector<cplx> eigs;  // sorted by (re, im) for stable output
  double max_real_part = 0;
  double min_abs_real_part = 0;
  double imag_axis_margin = 0;
  double max_abs_imag = 0;  // largest resolved oscillation frequency
};

SpectrumReport compute_spectrum(const Mat& A);
inline SpectrumReport compute_spectrum(const ReducedGenerator& red) {
  return compute_spectrum(red.A_red);
}

// 1/sigma_min(i beta - A). Throws NumericallySingular below 1e-14.
double resolvent_norm(const Mat& A, double beta);
inline double resolvent_norm(const ReducedGenerator& red, double beta) {
  return resolvent_norm(red.A_red, beta);
}

struct FitWindow {
  double lo = 0;
  double hi = 0;
};

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  int count = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> log_spaced(double lo, double hi, int count);

struct ResolventSweep {
  std::vector<double> betas;
  std::vector<double> norms;
  double fitted_alpha = 0;
  FitWindow fit_window;
  double fit_r2 = 0;
  double spearman = 0;
  int fit_points = 0;
  double cutoff_beta = 0;  // largest |Im lambda|, 0 if unknown
  std::string caveat;
};

// Sweeps the grid (sorted, positive). The fit uses the points inside window;
// a window with lo >= hi means the whole grid. cutoff_beta feeds the caveat.
ResolventSweep resolvent_sweep(const Mat& A, const std::vector<double>& beta_grid,
                               FitWindow window = {}, double cutoff_beta = 0,
                               unsigned threads = 0);

// Resolvent sampled at the oscillation frequencies Im lambda of the weakly
// damped eigenvalues in [lo, hi]; a resolution-independent view of growth.
struct ResonanceGrowth {
  std::vector<double> betas;
  std::vector<double> norms;
  LineFit fit;
};
ResonanceGrowth resonance_growth(const Mat& A, const SpectrumReport& spec, double lo, double hi);

struct DecayPrediction {
  bool exponential_regime = false;
  double alpha = 0;
  double predicted_rate_exponent = 0;
};

DecayPrediction predict_decay(double alpha);
inline DecayPrediction predict_decay(const ResolventSweep& sweep) {
  return predict_decay(sweep.fitted_alpha);
}

}  // namespace fsilab

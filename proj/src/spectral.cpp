#include "fsilab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

namespace fsilab {

SpectrumReport compute_spectrum(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A, false);
  if (es.info() != Eigen::Success) {
    const auto path = std::filesystem::temp_directory_path() / "fsilab_eig_failure.txt";
    std::ofstream dump(path);
    dump << std::setprecision(17) << A << '\n';
    throw InternalError("eigensolver did not converge; matrix written to " + path.string());
  }
  SpectrumReport r;
  const CVec ev = es.eigenvalues();
  r.eigs.assign(ev.data(), ev.data() + ev.size());
  std::sort(r.eigs.begin(), r.eigs.end(), [](const cplx& a, const cplx& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  r.max_real_part = -INFINITY;
  r.min_abs_real_part = INFINITY;
  for (const cplx& z : r.eigs) {
    r.max_real_part = std::max(r.max_real_part, z.real());
    r.min_abs_real_part = std::min(r.min_abs_real_part, std::abs(z.real()));
    r.max_abs_imag = std::max(r.max_abs_imag, std::abs(z.imag()));
  }
  r.imag_axis_margin = r.min_abs_real_part;
  return r;
}

double resolvent_norm(const Mat& A, double beta) {
  // sigma_min from the Hermitian embedding [0 R; R^H 0], whose eigenvalues
  // are +-sigma. Complex BDCSVD mis-deflates on block-structured inputs.
  const Eigen::Index n = A.rows();
  CMat H = CMat::Zero(2 * n, 2 * n);
  H.topRightCorner(n, n) = -A.cast<cplx>();
  H.topRightCorner(n, n).diagonal().array() += cplx(0.0, beta);
  H.bottomLeftCorner(n, n) = H.topRightCorner(n, n).adjoint();
  const Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw InternalError("resolvent eigensolver failed");
  const double smin = es.eigenvalues().cwiseAbs().minCoeff();
  if (!(smin >= 1e-14))
    throw NumericallySingular("resolvent at beta=" + std::to_string(beta) +
                              " is numerically singular (sigma_min=" + std::to_string(smin) + ")");
  return 1.0 / smin;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.count = static_cast<int>(x.size());
  if (x.size() != y.size() || x.size() < 2) return f;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : (syy == 0 ? 1.0 : 0.0);
  return f;
}

static std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const LineFit f = fit_line(rx, ry);
  return f.slope >= 0 ? std::sqrt(f.r2) : -std::sqrt(f.r2);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> out(count);
  if (count == 1) return {lo};
  for (int i = 0; i < count; ++i)
    out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

ResolventSweep resolvent_sweep(const Mat& A, const std::vector<double>& beta_grid,
                               FitWindow window, double cutoff_beta, unsigned threads) {
  ResolventSweep s;
  s.betas = beta_grid;
  for (size_t i = 0; i < s.betas.size(); ++i)
    if (!(s.betas[i] > 0) || (i > 0 && s.betas[i] <= s.betas[i - 1]))
      throw ConfigError("beta grid must be positive and strictly increasing");
  if (s.betas.empty()) throw ConfigError("beta grid is empty");
  if (!(window.lo < window.hi)) window = {s.betas.front(), s.betas.back()};
  s.fit_window = window;

  std::vector<double> fx, fy;
  for (double b : s.betas)
    if (b >= window.lo * (1 - 1e-12) && b <= window.hi * (1 + 1e-12)) fx.push_back(std::log(b));
  if (fx.size() < 5) throw ConfigError("fewer than 5 sweep points inside the fit window");

  // Points are independent; each worker writes its own slots so the merge is
  // ordered and the result does not depend on the thread count.
  s.norms.assign(s.betas.size(), 0.0);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(s.betas.size()));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned t) {
    try {
      for (size_t i = t; i < s.betas.size(); i += threads) s.norms[i] = resolvent_norm(A, s.betas[i]);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> wb, wn;
  for (size_t i = 0; i < s.betas.size(); ++i) {
    const double b = s.betas[i];
    if (b >= window.lo * (1 - 1e-12) && b <= window.hi * (1 + 1e-12)) {
      fy.push_back(std::log(s.norms[i]));
      wb.push_back(b);
      wn.push_back(s.norms[i]);
    }
  }
  const LineFit f = fit_line(fx, fy);
  s.fitted_alpha = f.slope;
  s.fit_r2 = f.r2;
  s.fit_points = f.count;
  s.spearman = spearman(wb, wn);
  s.cutoff_beta = cutoff_beta;

  std::ostringstream c;
  c << std::setprecision(6);
  if (cutoff_beta <= 0) {
    c << "discretization cutoff unknown; a finite grid has bounded resolvent as beta grows, so "
         "growth is only meaningful below the highest resolved frequency";
  } else if (window.hi > cutoff_beta) {
    c << "fit window [" << window.lo << ", " << window.hi << "] extends above the discretization "
      << "cutoff beta_c=" << cutoff_beta << " (largest resolved |Im lambda|); the resolvent of the "
      << "finite grid decays above beta_c, so the fitted exponent there does not reflect the "
      << "continuum growth";
  } else {
    c << "fit window [" << window.lo << ", " << window.hi << "] lies below the discretization "
      << "cutoff beta_c=" << cutoff_beta << " (largest resolved |Im lambda|)";
  }
  s.caveat = c.str();
  return s;
}

ResonanceGrowth resonance_growth(const Mat& A, const SpectrumReport& spec, double lo, double hi) {
  ResonanceGrowth g;
  for (const cplx& z : spec.eigs) {
    const double b = z.imag();
    if (b < lo || b > hi || std::abs(z.real()) >= 0.5 * b) continue;
    g.betas.push_back(b);
  }
  std::sort(g.betas.begin(), g.betas.end());
  g.betas.erase(std::unique(g.betas.begin(), g.betas.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-9 * b; }),
                g.betas.end());
  std::vector<double> lx, ly;
  for (double b : g.betas) {
    g.norms.push_back(resolvent_norm(A, b));
    lx.push_back(std::log(b));
    ly.push_back(std::log(g.norms.back()));
  }
  g.fit = fit_line(lx, ly);
  return g;
}

DecayPrediction predict_decay(double alpha) {
  DecayPrediction d;
  d.alpha = alpha;
  if (!(alpha > 0)) {
    d.exponential_regime = true;
    d.predicted_rate_exponent = INFINITY;
    return d;
  }
  d.predicted_rate_exponent = 1.0 / alpha;
  return d;
}

}  // namespace fsilab

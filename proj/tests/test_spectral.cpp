#include <doctest.h>

#include <Eigen/SVD>

#include "fsilab/spectral.hpp"
#include "support.hpp"

using namespace fsilab;
using namespace fsilab::testing;

namespace {

// Normal matrix with eigenvalues -1/k +- i k; at beta = k the resolvent norm
// is exactly k, so integer sweeps grow like beta.
Mat linear_growth_fixture(int kmax) {
  Mat A = Mat::Zero(2 * kmax, 2 * kmax);
  for (int k = 1; k <= kmax; ++k) {
    const int i = 2 * (k - 1);
    A(i, i) = A(i + 1, i + 1) = -1.0 / k;
    A(i, i + 1) = k;
    A(i + 1, i) = -k;
  }
  return A;
}

}  // namespace

TEST_CASE("spectrum of a hand-built block") {
  Mat A = Mat::Zero(3, 3);
  A(0, 0) = -1;
  A(1, 1) = A(2, 2) = -2;
  A(1, 2) = 3;
  A(2, 1) = -3;
  const SpectrumReport s = compute_spectrum(A);
  REQUIRE(s.eigs.size() == 3);
  CHECK(s.eigs[0].real() == doctest::Approx(-2));
  CHECK(s.eigs[0].imag() == doctest::Approx(-3));
  CHECK(s.eigs[1].real() == doctest::Approx(-2));
  CHECK(s.eigs[1].imag() == doctest::Approx(3));
  CHECK(s.eigs[2].real() == doctest::Approx(-1));
  CHECK(s.eigs[2].imag() == doctest::Approx(0).epsilon(1e-14));
  CHECK(s.max_real_part == doctest::Approx(-1));
  CHECK(s.min_abs_real_part == doctest::Approx(1));
  CHECK(s.imag_axis_margin == doctest::Approx(1));
  CHECK(s.max_abs_imag == doctest::Approx(3));
}

TEST_CASE("resolvent norm on the fixture") {
  Mat A = Mat::Zero(3, 3);
  A(0, 0) = -1;
  A(1, 1) = A(2, 2) = -2;
  A(1, 2) = 3;
  A(2, 1) = -3;
  // Normal matrix: the norm is 1/dist(i beta, spectrum).
  CHECK(resolvent_norm(A, 0.0) == doctest::Approx(1.0));
  CHECK(resolvent_norm(A, 3.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(resolvent_norm(Mat::Zero(2, 2), 0.0), NumericallySingular);
}

TEST_CASE("FSI spectrum and resolvent") {
  for (double rho : {0.0, 1.0}) {
    const Problem pr(section(12, rho));
    const ReducedGenerator red = reduce(pr.gen);
    const SpectrumReport s = compute_spectrum(red);
    CHECK(s.max_real_part < 0);
    CHECK(s.imag_axis_margin > 0);
    for (const cplx& z : s.eigs) {
      double best = INFINITY;
      for (const cplx& w : s.eigs) best = std::min(best, std::abs(w - std::conj(z)));
      CHECK(best <= 1e-9 * std::max(1.0, std::abs(z)));
    }

    const Mat inv = red.A_red.inverse();
    const double oracle = Eigen::JacobiSVD<Mat>(inv).singularValues()(0);
    CHECK(resolvent_norm(red, 0.0) == doctest::Approx(oracle).epsilon(1e-9));

    for (double beta : {1.0, 7.5, 30.0}) {
      const double r = resolvent_norm(red, beta);
      CHECK(std::abs(r - resolvent_norm(red, -beta)) <= 1e-8 * r);
      double dist = INFINITY;
      for (const cplx& z : s.eigs) dist = std::min(dist, std::abs(cplx(0, beta) - z));
      CHECK(1.0 / dist <= r * (1 + 1e-8));
    }
  }
}

TEST_CASE("fit helpers") {
  const auto g = log_spaced(1, 100, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[1] == doctest::Approx(10));
  CHECK(g[2] == 100.0);

  const LineFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2));
  CHECK(f.intercept == doctest::Approx(1));
  CHECK(f.r2 == doctest::Approx(1));

  CHECK(spearman({1, 2, 3, 4}, {1, 4, 9, 16}) == doctest::Approx(1));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1));
  CHECK(spearman({1, 2, 3}, {1, 1, 2}) == doctest::Approx(std::sqrt(3.0) / 2));
}

TEST_CASE("sweep recovers linear growth") {
  const Mat A = linear_growth_fixture(70);
  std::vector<double> grid;
  for (int k = 10; k <= 60; k += 2) grid.push_back(k);
  const ResolventSweep sw = resolvent_sweep(A, grid, {}, 70);
  CHECK(sw.fitted_alpha == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sw.fit_r2 > 0.999);
  CHECK(sw.spearman == doctest::Approx(1.0));
  CHECK(sw.caveat.find("below") != std::string::npos);

  const ResolventSweep single = resolvent_sweep(A, grid, {}, 70, 1);
  CHECK(single.norms == sw.norms);

  const ResolventSweep high = resolvent_sweep(A, grid, {}, 20);
  CHECK(high.caveat.find("above") != std::string::npos);

  CHECK_THROWS_AS(resolvent_sweep(A, grid, {10, 15}), ConfigError);
  const ResolventSweep part = resolvent_sweep(A, grid, {10, 30});
  CHECK(part.fit_points == 11);
  CHECK(part.norms.size() == grid.size());
}

TEST_CASE("resonance diagnostic on the fixture") {
  const Mat A = linear_growth_fixture(40);
  const SpectrumReport s = compute_spectrum(A);
  const ResonanceGrowth r = resonance_growth(A, s, 5, 35);
  CHECK(r.betas.size() == 31);
  CHECK(r.fit.slope == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("decay prediction") {
  CHECK(predict_decay(1.0).predicted_rate_exponent == doctest::Approx(1.0));
  CHECK(predict_decay(2.0).predicted_rate_exponent == doctest::Approx(0.5));
  CHECK(predict_decay(0.5).predicted_rate_exponent == doctest::Approx(2.0));
  CHECK(predict_decay(0.0).exponential_regime);
  CHECK(predict_decay(-0.3).exponential_regime);
  CHECK_FALSE(predict_decay(1.0).exponential_regime);
}

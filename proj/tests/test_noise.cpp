#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fracnls/experiments.hpp"
#include "fracnls/noise.hpp"
#include "fracnls/stochastic.hpp"

using namespace fracnls;

namespace {

NoiseConfig base_config() {
  NoiseConfig c;
  c.hurst = {0.65, 0.55};
  return c;
}

struct Moments {
  double mean = 0, var = 0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= double(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= double(x.size() - 1);
  return m;
}

}  // namespace

TEST(SpectralNoise, EqualSeedsGiveIdenticalDraws) {
  const auto a = sample_spectral_noise(base_config(), 3, 42);
  const auto b = sample_spectral_noise(base_config(), 3, 42);
  const auto c = sample_spectral_noise(base_config(), 3, 43);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_NE(a.values(), c.values());
}

TEST(SpectralNoise, MirroredCellsAreConjugates) {
  const auto a = sample_spectral_noise(base_config(), 2, 5);
  for (int r = 0; r < a.rows(); r += 7)
    for (int c = 0; c < a.cols(); ++c) EXPECT_EQ(a.mirrored(r, c), std::conj(a.value(r, c ^ 1)));
}

TEST(SpectralNoise, CellSecondMomentIsCellArea) {
  const auto noise = sample_spectral_noise(base_config(), 3, 17);
  double acc = 0.0;
  int count = 0;
  for (int r = 0; r < noise.rows() && count < 20000; ++r)
    for (int c = 0; c < noise.cols(); ++c, ++count) {
      const double area = noise.time_axis().cells[r].width() * noise.space_cell(c).width();
      acc += std::norm(noise.value(r, c)) / area;
    }
  ASSERT_GE(count, 10000);
  EXPECT_NEAR(acc / count, 1.0, 0.05);
}

TEST(SpectralNoise, LevelBoxesAreNestedPrefixes) {
  const auto big = sample_spectral_noise(base_config(), 5, 9);
  const auto small = sample_spectral_noise(base_config(), 3, 9);
  const auto cut = big.truncated(3);
  ASSERT_EQ(cut.rows(), small.rows());
  ASSERT_EQ(cut.cols(), small.cols());
  EXPECT_EQ(cut.values(), small.values());
  EXPECT_EQ(eval_noise_field(big, 3, 0.4, 1.3), eval_noise_field(cut, 3, 0.4, 1.3));
  EXPECT_EQ(eval_sheet(big, 2, 0.9, 2.2), eval_sheet(small, 2, 0.9, 2.2));
  for (int n = 1; n <= 5; ++n) {
    EXPECT_LE(big.time_axis().cells[big.rows(n) - 1].hi, std::ldexp(1.0, 2 * n) + 1e-9);
    EXPECT_GE(big.time_axis().cells[big.rows(n) - 1].hi, std::ldexp(1.0, 2 * n) - 1e-9);
  }
}

TEST(SpectralNoise, DifferentSeedsAreUncorrelated) {
  const auto cfg = base_config();
  const int N = 1000;
  const std::vector<std::pair<double, double>> pts{{0.1, 0.2}, {0.5, 1.0}, {-0.7, 3.0}, {1.2, 5.5}, {0.0, 0.7},
                                                   {-1.5, 2.2}, {0.9, 6.0}, {0.3, 4.4}, {1.8, 0.1}, {-0.2, 3.9}};
  std::vector<std::vector<double>> f1(pts.size(), std::vector<double>(N)), f2 = f1;
  for (int i = 0; i < N; ++i) {
    const auto a = sample_spectral_noise(cfg, 2, realisation_seed(1, i));
    const auto b = sample_spectral_noise(cfg, 2, realisation_seed(2, i));
    for (std::size_t p = 0; p < pts.size(); ++p) {
      f1[p][i] = eval_noise_field(a, 2, pts[p].first, pts[p].second);
      f2[p][i] = eval_noise_field(b, 2, pts[p].first, pts[p].second);
    }
  }
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const auto m1 = moments(f1[p]), m2 = moments(f2[p]);
    double cov = 0.0;
    for (int i = 0; i < N; ++i) cov += (f1[p][i] - m1.mean) * (f2[p][i] - m2.mean);
    cov /= N - 1;
    EXPECT_LT(std::abs(cov / std::sqrt(m1.var * m2.var)), 0.1) << "point " << p;
  }
}

TEST(Sheet, VanishesOnBothAxes) {
  const auto noise = sample_spectral_noise(base_config(), 3, 3);
  for (double v : {-1.3, 0.4, 2.0, 5.9}) {
    EXPECT_EQ(eval_sheet(noise, 3, 0.0, v), 0.0);
    EXPECT_EQ(eval_sheet(noise, 3, v, 0.0), 0.0);
  }
}

// Reference: c_H^2 int_{D_2} |e^{i xi}-1|^2 |e^{i eta}-1|^2 / (|xi|^{2H0+1} |eta|^{2H1+1}).
TEST(Sheet, VarianceMatchesQuadrature) {
  const double reference = 31.9981441514424;
  const int N = 1000;
  std::vector<double> v(N);
  for (int i = 0; i < N; ++i) v[i] = eval_sheet(sample_spectral_noise(base_config(), 2, realisation_seed(77, i)), 2, 1.0, 1.0);
  const auto m = moments(v);
  std::vector<double> sq(N);
  for (int i = 0; i < N; ++i) sq[i] = (v[i] - m.mean) * (v[i] - m.mean);
  const double se = std::sqrt(moments(sq).var / N);
  EXPECT_LT(std::abs(m.var - reference), 4.0 * se) << m.var << " +- " << se;
}

TEST(SheetDerivative, MixedDifferenceQuotient) {
  const auto noise = sample_spectral_noise(base_config(), 2, 8);
  const double t = 0.3, x = 1.7, h = 1e-3;
  const double fd = (eval_sheet(noise, 2, t + h, x + h) - eval_sheet(noise, 2, t + h, x - h) -
                     eval_sheet(noise, 2, t - h, x + h) + eval_sheet(noise, 2, t - h, x - h)) /
                    (4 * h * h);
  const double exact = eval_noise_field(noise, 2, t, x);
  EXPECT_NEAR(fd, exact, 1e-3 * (1.0 + std::abs(exact)));
}

TEST(NoiseModes, ZeroNoiseAndUnitKernel) {
  auto noise = sample_spectral_noise(base_config(), 2, 1);
  for (auto& w : noise.values()) w = 0.0f;
  const auto modes = eval_noise_modes(noise, 2, 4, TimeGrid(256));
  EXPECT_EQ(sup_distance(modes, ModeTrajectory(4, 256)), 0.0);
  for (int k : {-3, 0, 5}) EXPECT_NEAR(std::abs(mode_kernel(k, k) - 1.0), 0.0, 1e-15);
}

TEST(NoiseModes, RealFieldHasConjugateModes) {
  const auto noise = sample_spectral_noise(base_config(), 3, 12);
  const auto modes = eval_noise_modes(noise, 3, 6, TimeGrid(512));
  double scale = 0.0;
  for (const auto& v : modes.raw()) scale = std::max(scale, std::abs(v));
  for (int k = 0; k <= 6; ++k)
    for (int j = 0; j <= 512; j += 5) EXPECT_LT(std::abs(modes(k, j) - std::conj(modes(-k, j))), 1e-10 * scale);
}

TEST(NoiseModes, SpatialQuadratureOfField) {
  const auto noise = sample_spectral_noise(base_config(), 2, 31);
  const TimeGrid grid(512);
  const auto modes = eval_noise_modes(noise, 2, 8, grid);
  const int N = 512;
  for (int j : {256, 300, 400, 130}) {
    std::vector<double> field(N);
    for (int i = 0; i < N; ++i) field[i] = eval_noise_field(noise, 2, grid.t(j), 2.0 * std::numbers::pi * i / N);
    double norm = 0.0;
    for (int k = -8; k <= 8; ++k) norm = std::max(norm, std::abs(modes(k, j)));
    for (int k = -8; k <= 8; ++k) {
      // Trapezoid on the closed period: the field is not periodic, so both endpoints count half.
      cplx acc = 0.5 * (field[0] + eval_noise_field(noise, 2, grid.t(j), 2.0 * std::numbers::pi));
      for (int i = 1; i < N; ++i) acc += field[i] * std::polar(1.0, -k * 2.0 * std::numbers::pi * i / N);
      acc /= double(N);
      EXPECT_LT(std::abs(acc - modes(k, j)), 1e-3 * norm) << "k = " << k << " j = " << j;
    }
  }
}

TEST(NoiseCovariance, SymmetricAndStationary) {
  const auto cfg = base_config();
  EXPECT_DOUBLE_EQ(covariance_noise_exact(cfg, 3, 0.2, 1.1, -0.4, 2.5), covariance_noise_exact(cfg, 3, -0.4, 2.5, 0.2, 1.1));
  EXPECT_NEAR(covariance_noise_exact(cfg, 3, 1, 1, 0, 0), covariance_noise_exact(cfg, 3, 2, 1, 1, 0), 1e-9);
}

// Continuum reference c_H^2 int_{D_3} e^{i(0.3 xi + 0.7 eta)} |xi|^{1-2H0} |eta|^{1-2H1}.
// Midpoint phases make the cell model second order in the cell width.
TEST(NoiseCovariance, ReferenceLag) {
  const double reference = -3.4674136473793635;
  std::vector<double> err;
  for (double refine : {1.0, 2.0, 4.0}) {
    NoiseConfig c = base_config();
    c.xiDensity *= refine;
    c.etaDensity *= refine;
    err.push_back(std::abs(covariance_noise_exact(c, 3, 0.3, 0.7, 0.0, 0.0) - reference) / std::abs(reference));
  }
  EXPECT_LT(err[0], 1e-2);
  EXPECT_LT(err[2], 1e-3);
  EXPECT_GT(err[0] / err[1], 3.0);
  EXPECT_GT(err[1] / err[2], 3.0);
}

TEST(NoiseCovariance, LevelIncrementMatchesAnnulusIntegral) {
  const auto cfg = base_config();
  const int N = 3000;
  const std::vector<std::array<double, 4>> pairs{{0.3, 0.7, 0.3, 0.7}, {0.2, 1.0, 0.21, 1.02}, {0.0, 0.2, 0.005, 0.22}};
  std::vector<std::vector<double>> prod(pairs.size(), std::vector<double>(N));
  for (int i = 0; i < N; ++i) {
    const auto noise = sample_spectral_noise(cfg, 3, realisation_seed(5, i));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& q = pairs[p];
      const double a = eval_noise_field(noise, 3, q[0], q[1]) - eval_noise_field(noise, 2, q[0], q[1]);
      const double b = eval_noise_field(noise, 3, q[2], q[3]) - eval_noise_field(noise, 2, q[2], q[3]);
      prod[p][i] = a * b;
    }
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& q = pairs[p];
    const auto m = moments(prod[p]);
    const double exact = covariance_increment_exact(cfg, 2, q[0], q[1], q[2], q[3]);
    EXPECT_LT(std::abs(m.mean - exact), 4.0 * std::sqrt(m.var / N)) << "pair " << p << ": " << m.mean << " vs " << exact;
  }
}

TEST(BoundKernels, SwapSymmetryAndPositivity) {
  const auto a = bound_kernels(0.65, 2, -3, 1.5, -4.0);
  const auto b = bound_kernels(0.65, -3, 2, -4.0, 1.5);
  EXPECT_NEAR(a.gamma, b.gamma, 1e-10 * a.gamma);
  EXPECT_NEAR(a.lambda, b.lambda, 1e-10 * a.lambda);
  for (double v : {a.gamma, a.lambda, a.gammaTilde, a.lambdaTilde}) EXPECT_GT(v, 0.0);
}

TEST(BoundKernels, SingularIntegralReferenceValues) {
  EXPECT_NEAR(singular_pair_integral(0.3, 5, 20), 0.4594273483573996, 1e-8);
  EXPECT_NEAR(singular_pair_integral(0.3, 1, 3), 2.2084908679709776, 1e-8);
  EXPECT_NEAR(singular_pair_integral(0.5, -2, 4), 1.1797279930540488, 1e-8);
}

// Bound <a>^{-nu} <b-a>^{-(1-eps)} with eps = 0.1, constant calibrated at (a, b) = (1, 3).
TEST(BoundKernels, SingularLemmaShape) {
  const double nu = 0.3;
  auto shape = [nu](double a, double b) { return std::pow(bracket(a), -nu) * std::pow(bracket(b - a), -0.9); };
  const double C = singular_pair_integral(nu, 1, 3) / shape(1, 3);
  for (auto [a, b] : std::vector<std::pair<double, double>>{{5, 20}, {10, 60}, {40, 45}, {2, 30}})
    EXPECT_LE(singular_pair_integral(nu, a, b), 2.0 * C * shape(a, b)) << a << " " << b;
}

TEST(NoiseIo, RoundTrip) {
  const auto noise = sample_spectral_noise(base_config(), 3, 99);
  std::stringstream buf;
  write_noise(noise, buf);
  ASSERT_EQ(buf.str().substr(0, 4), "FNLS");
  const auto back = read_noise(buf);
  EXPECT_EQ(back.values(), noise.values());
  EXPECT_EQ(back.seed(), 99u);
  EXPECT_EQ(back.max_level(), 3);
  EXPECT_EQ(eval_noise_field(back, 3, 0.5, 0.5), eval_noise_field(noise, 3, 0.5, 0.5));
  std::stringstream bad("FNLX");
  EXPECT_THROW(read_noise(bad), ConfigError);
}

TEST(NoiseConfigCheck, RejectsBadInput) {
  NoiseConfig c = base_config();
  c.cH = -1.0;
  EXPECT_THROW(sample_spectral_noise(c, 2, 1), ConfigError);
  EXPECT_THROW(sample_spectral_noise(base_config(), 0, 1), ConfigError);
}

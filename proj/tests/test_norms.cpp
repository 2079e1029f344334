#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracnls/cutoff.hpp"
#include "fracnls/experiments.hpp"
#include "fracnls/norms.hpp"
#include "fracnls/operators.hpp"

using namespace fracnls;

namespace {

NormSpec make_spec(NormKind kind, double b, double c, double mu = 0.5) {
  NormSpec s;
  s.kind = kind;
  s.b = b;
  s.c = c;
  s.mu = mu;
  return s;
}

ModeTrajectory gaussian_mode(int K, int M, int k, double omega, cplx amp = 1.0) {
  ModeTrajectory z(K, M);
  const TimeGrid g(M);
  for (int j = 0; j <= M; ++j) z(k, j) = amp * std::exp(-8.0 * g.t(j) * g.t(j)) * std::polar(1.0, omega * g.t(j));
  return z;
}

}  // namespace

TEST(TimeFourier, ParsevalOnGaussian) {
  const auto s = time_fourier(gaussian_mode(0, 1024, 0, 0.0));
  double acc = 0.0;
  for (int m = 0; m < s.length; ++m) acc += std::norm(s(0, m));
  EXPECT_NEAR(acc * s.step / (2.0 * std::numbers::pi), std::sqrt(std::numbers::pi / 16.0), 1e-12);
  EXPECT_NEAR(s.step, std::numbers::pi / 8.0, 1e-15);
}

TEST(TimeFourier, PeakSitsAtTheTone) {
  const double omega = 12.0 * std::numbers::pi / 8.0;
  const auto s = time_fourier(gaussian_mode(0, 1024, 0, omega));
  int best = 0;
  for (int m = 0; m < s.length; ++m)
    if (std::abs(s(0, m)) > std::abs(s(0, best))) best = m;
  EXPECT_NEAR(s.lambda(best), omega, 1e-12);
}

// chi(t) e^{-t^2} (1 + t/2) at l = m pi/8, from adaptive quadrature.
TEST(TimeFourier, ReferenceValues) {
  const int M = 1024;
  const TimeGrid g(M);
  std::vector<cplx> f(g.points());
  for (int j = 0; j <= M; ++j) {
    const double t = g.t(j);
    f[j] = Cutoff::unit(t) * std::exp(-t * t) * (1.0 + 0.5 * t);
  }
  double step = 0.0;
  const auto F = time_fourier(f, g, 4, step);
  const int mid = static_cast<int>(F.size()) / 2;
  const std::vector<std::pair<int, cplx>> ref{{0, {1.7199857422887457, 0.0}},
                                              {3, {1.2736567842810884, -0.33229357397914694}},
                                              {16, {0.006414732490474091, -0.007676682323496935}},
                                              {40, {0.000277003559377792, -3.259615135711366e-05}},
                                              {-25, {-0.0007413000009733051, 0.0006576924488336557}}};
  for (const auto& [m, want] : ref) EXPECT_LT(std::abs(F[mid + m] - want), 1e-6) << m;
}

TEST(SpaceNorm, SingleToneInH2) {
  ModeTrajectory z(4, 64);
  for (auto& v : z.mode(3)) v = 1.0;
  EXPECT_NEAR(norm_eval(z, make_spec(NormKind::Hspace, 0.0, 2.0)), 10.0, 1e-12);
}

TEST(SpaceNorm, L2HcOfConstantMode) {
  ModeTrajectory z(2, 128);
  for (auto& v : z.mode(-1)) v = cplx(0.0, 3.0);
  EXPECT_NEAR(norm_eval(z, make_spec(NormKind::L2Hc, 0.0, 0.5)), std::sqrt(std::sqrt(2.0) * 9.0 * 4.0), 1e-12);
}

TEST(Xc, SeparatesSpaceAndTime) {
  const int K = 4, M = 512;
  ModeTrajectory z(K, M);
  const std::vector<std::pair<int, cplx>> amps{{-3, {0.5, 1.0}}, {0, {2.0, 0.0}}, {2, {0.0, -1.5}}};
  for (const auto& [k, a] : amps) z += gaussian_mode(K, M, k, 0.0, a);
  const double l2 = std::sqrt(std::sqrt(std::numbers::pi / 16.0));
  double want = 0.0;
  for (const auto& [k, a] : amps) want += std::pow(bracket(k), 0.6) * std::norm(a);
  EXPECT_NEAR(norm_eval(z, make_spec(NormKind::Xc, 0.0, 0.3)), std::sqrt(want) * l2, 1e-10);
}

TEST(Xbc, IsSumOfParts) {
  const auto z = probe_family(4, 512, 12)[11];
  EXPECT_NEAR(norm_eval(z, make_spec(NormKind::Xbc, 0.6, 0.2)),
              norm_eval(z, make_spec(NormKind::Xb, 0.6, 0.2)) + norm_eval(z, make_spec(NormKind::Xc, 0.6, 0.2)), 1e-12);
}

// At mu = 1 the pairing kernel is 1, leaving (int |F z_k| dl/2pi)^2 per mode.
TEST(Xcmu, FlatKernelLimit) {
  const auto z = probe_family(3, 256, 16)[13];
  const auto s = time_fourier(z);
  double want = 0.0;
  for (int k = -3; k <= 3; ++k) {
    double a = 0.0;
    for (int m = 0; m < s.length; ++m) a += std::abs(s(k, m));
    a *= s.step / (2.0 * std::numbers::pi);
    want += std::pow(bracket(k), 0.4) * a * a;
  }
  EXPECT_NEAR(norm_eval(z, make_spec(NormKind::Xcmu, 0.0, 0.2, 1.0)), std::sqrt(want), 1e-9 * std::sqrt(want));
}

TEST(Xcmu, MonotoneInMu) {
  const auto z = probe_family(3, 256, 16)[9];
  double prev = 0.0;
  for (double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double v = norm_eval(z, make_spec(NormKind::Xcmu, 0.0, 0.2, mu));
    EXPECT_GT(v, prev);
    prev = v;
  }
}

// e^{-8t^2} e^{-9it} in mode 3: the weight <l + 9> turns the X^{s,b} norm into 10^{s/2} ||e^{-8t^2}||_{H^b}.
TEST(Bourgain, ShiftedGaussianIdentity) {
  const int M = 2048;
  const auto z = gaussian_mode(3, M, 3, -9.0);
  const double want = 1.5092388684382276;
  EXPECT_NEAR(norm_eval(z, make_spec(NormKind::Bourgain, 0.6, 0.2)), want, 1e-6);
  const auto g = gaussian_mode(0, M, 0, 0.0);
  EXPECT_NEAR(time_sobolev_norm(g.mode(0), TimeGrid(M), 0.6), 1.1988310461438094, 1e-6);
  EXPECT_NEAR(std::pow(10.0, 0.1) * time_sobolev_norm(g.mode(0), TimeGrid(M), 0.6),
              norm_eval(z, make_spec(NormKind::Bourgain, 0.6, 0.2)), 1e-10);
}

TEST(NormSpecs, ValidationAndNames) {
  EXPECT_THROW(make_spec(NormKind::Xcmu, 0.6, 0.2, 1.5).validate(), ConfigError);
  EXPECT_THROW(make_spec(NormKind::Xb, -0.1, 0.2).validate(), ConfigError);
  NormSpec p;
  p.padding = 1;
  EXPECT_THROW(p.validate(), ConfigError);
  for (auto k : {NormKind::Hspace, NormKind::L2Hc, NormKind::Xb, NormKind::Xc, NormKind::Xbc, NormKind::Xcmu,
                 NormKind::Bourgain})
    EXPECT_EQ(parse_norm_kind(to_string(k)), k);
  EXPECT_THROW(parse_norm_kind("H1"), ConfigError);
}

TEST(Norms, HomogeneousAndTriangle) {
  const auto probes = probe_family(4, 256, 16);
  for (auto kind : {NormKind::L2Hc, NormKind::Xb, NormKind::Xc, NormKind::Xbc, NormKind::Xcmu, NormKind::Bourgain}) {
    const auto spec = make_spec(kind, 0.6, 0.2);
    const double a = norm_eval(probes[3], spec), b = norm_eval(probes[10], spec);
    EXPECT_NEAR(norm_eval(cplx(0.0, -2.5) * probes[3], spec), 2.5 * a, 1e-10 * a) << to_string(kind);
    EXPECT_LE(norm_eval(probes[3] + probes[10], spec), (a + b) * (1.0 + 1e-12)) << to_string(kind);
  }
}

TEST(Probes, VanishAtOriginAndAreDistinct) {
  const auto probes = probe_family(6, 256, 64);
  ASSERT_EQ(probes.size(), 64u);
  for (const auto& z : probes)
    for (int k = -6; k <= 6; ++k) EXPECT_EQ(z(k, 128), cplx(0.0));
  EXPECT_GT(sup_distance(probes[0], probes[1]), 0.0);
  const auto again = random_probes(6, 256, 5, 3);
  EXPECT_EQ(random_probes(6, 256, 5, 3)[4].raw(), again[4].raw());
}

TEST(OperatorNorm, ZeroOperatorHomogeneityAndMonotonicity) {
  const auto probes = probe_family(4, 256, 16);
  const std::vector<double> taus{1.0, 0.5, 0.25};
  auto zero = [](const ModeTrajectory& z) { return ModeTrajectory(z.K(), z.M()); };
  auto I = [](const ModeTrajectory& z) { return cutoff_integral(z); };
  auto twoI = [](const ModeTrajectory& z) { return cplx(2.0) * cutoff_integral(z); };
  EXPECT_EQ(operator_norm_estimate(zero, 0.6, 0.2, 0.5, probes, taus), 0.0);
  const double one = operator_norm_estimate(I, 0.6, 0.2, 0.5, probes, taus);
  EXPECT_GT(one, 0.0);
  EXPECT_NEAR(operator_norm_estimate(twoI, 0.6, 0.2, 0.5, probes, taus), 2.0 * one, 1e-10 * one);
  const std::vector<ModeTrajectory> subset(probes.begin(), probes.begin() + 8);
  EXPECT_LE(operator_norm_estimate(I, 0.6, 0.2, 0.5, subset, taus), one);
  EXPECT_THROW(operator_norm_estimate(I, 0.6, 0.2, 0.5, {}, taus), ConfigError);
  EXPECT_THROW(operator_norm_estimate(I, 0.6, 0.2, 0.5, probes, {1.5}), ConfigError);
}

class LocalizationSuite : public ::testing::TestWithParam<std::string> {};

TEST_P(LocalizationSuite, RatiosStayBounded) {
  for (double mu : {0.1, 0.25, 0.5}) {
    SuiteParams p;
    p.mu = mu;
    const auto r = localization_suite(GetParam(), p);
    ASSERT_EQ(r.ratios.size(), r.taus.size());
    EXPECT_TRUE(r.pass) << GetParam() << " mu=" << mu << " max " << r.max << " median(tau=1) " << r.medians[0];
  }
}

INSTANTIATE_TEST_SUITE_P(Suites, LocalizationSuite,
                         ::testing::Values("b-prim", "c-mu", "lam-z", "control-m-z-z"),
                         [](const auto& info) {
                           std::string s = info.param;
                           for (auto& ch : s)
                             if (ch == '-') ch = '_';
                           return s;
                         });

TEST(LocalizationSuiteNames, UnknownSuiteIsRejected) {
  EXPECT_THROW(localization_suite("b-prime", SuiteParams{}), ConfigError);
}

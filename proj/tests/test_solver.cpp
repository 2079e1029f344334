#include <gtest/gtest.h>

#include <cmath>

#include "fracnls/solver.hpp"
#include "fracnls/stochastic.hpp"

using namespace fracnls;

namespace {

int index_of(const TimeGrid& g, double t) { return static_cast<int>(std::lround((t + 2.0) / g.step())); }

SolverConfig solver_config(int K, int M, double tau) {
  SolverConfig c;
  c.K = K;
  c.M = M;
  c.tau = tau;
  c.tol = 1e-10;
  return c;
}

// One level-n tree together with the forcing integral of the same draw.
struct Draw {
  TreeElements tree;
  ModeTrajectory forcing;
};

Draw level_draw(int n, int K, int M, std::uint64_t seed) {
  NoiseConfig cfg;
  cfg.hurst = {0.65, 0.55};
  cfg.xiDensity = 2.5;
  cfg.etaDensity = 2.0;
  const TimeGrid g(M);
  const auto noise = sample_spectral_noise(cfg, n, seed);
  const ToneIntegrator integ(cfg, n, K, g);
  const auto V = project_modes(noise, n, K);
  auto psi = integ.psi(V);
  auto lam = compute_lambda(psi);
  auto sigma = exact_sigma_levels(cfg, n, n, K, g, 1.0).front();
  Draw d{make_tree(n, std::move(psi), std::move(lam), std::move(sigma)), integ.forcing(V)};
  return d;
}

}  // namespace

TEST(SolverConfig, RejectsOutOfRangeValues) {
  SolverConfig ok;
  EXPECT_NO_THROW(ok.validate());
  auto bad = [](auto edit) {
    SolverConfig c;
    edit(c);
    return c;
  };
  EXPECT_THROW(bad([](SolverConfig& c) { c.tau = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.tau = 1.5; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.tol = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.b = 0.5; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.c = 0.25; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.maxPicard = 0; }).validate(), ConfigError);
}

TEST(GammaMap, ZeroTreeFixesZero) {
  const auto tree = zero_tree(4, 128);
  const ModeTrajectory z(4, 128);
  EXPECT_EQ(sup_distance(gamma_map(z, tree, solver_config(4, 128, 0.5)), z), 0.0);
  const auto res = picard_solve(tree, solver_config(4, 128, 0.5));
  EXPECT_TRUE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 1);
  EXPECT_EQ(sup_distance(res.z, z), 0.0);
}

TEST(GammaMap, ZeroRemainderGivesLocalizedCenteredSquare) {
  const auto d = level_draw(3, 4, 256, 2);
  const auto cfg = solver_config(4, 256, 0.25);
  EXPECT_LE(sup_distance(gamma_map(ModeTrajectory(4, 256), d.tree, cfg), localize(d.tree.centered, 0.25)), 1e-15);
}

// z_2 = 0.1 t e^{-t^2}(1 + it) alone: Gamma_0 = -i chi(t/tau) chi(t) int_0^t chi |z_2|^2.
TEST(GammaMap, SingleModeAgainstQuadrature) {
  const int K = 3, M = 4000;  // every reference time on the grid
  const TimeGrid g(M);
  ModeTrajectory z(K, M);
  for (int j = 0; j <= M; ++j) {
    const double t = g.t(j);
    z(2, j) = 0.1 * t * std::exp(-t * t) * cplx(1.0, t);
  }
  const auto out = gamma_map(z, zero_tree(K, M), solver_config(K, M, 0.5));
  const std::vector<std::pair<double, double>> ref{
      {0.3, -8.515355378438989e-05}, {0.6, -0.0005468320781458205}, {-0.5, 0.0003553517079824919}};
  for (const auto& [t, im] : ref) {
    const cplx v = out(0, index_of(g, t));
    EXPECT_LT(std::abs(v - cplx(0.0, im)) / std::abs(im), 1e-5) << t;
  }
  EXPECT_EQ(out(0, index_of(g, 1.2)), cplx(0.0));
}

TEST(Picard, ContractsOnSmallData) {
  const auto d = level_draw(3, 8, 512, 6);
  auto cfg = solver_config(8, 512, 0.25);
  cfg.tol = 1e-8;
  const auto res = picard_solve(d.tree, cfg);
  ASSERT_TRUE(res.report.converged);
  EXPECT_EQ(res.report.restarts, 0);
  EXPECT_LE(res.report.residual, 2.0 * cfg.tol);
  for (double r : res.report.ratios) EXPECT_LT(r, 1.0);
  const auto& diff = res.report.differences;
  for (std::size_t i = diff.size() / 2; i + 1 < diff.size(); ++i) EXPECT_LT(diff[i + 1], diff[i]);
}

// This draw does not contract at tau = 1/4; one halving of the window suffices.
TEST(Picard, AdaptiveWindowHalves) {
  const auto d = level_draw(3, 8, 512, 4);
  auto cfg = solver_config(8, 512, 0.25);
  cfg.tol = 1e-8;
  const auto res = picard_solve(d.tree, cfg);
  ASSERT_TRUE(res.report.converged);
  EXPECT_EQ(res.report.restarts, 1);
  EXPECT_EQ(res.report.tau, 0.125);
  cfg.adaptiveTau = false;
  EXPECT_THROW(picard_solve(d.tree, cfg), NumericalError);
}

TEST(Picard, NonContractingDataIsReported) {
  auto d = level_draw(3, 8, 256, 4);
  d.tree.centered *= 1e5;
  auto cfg = solver_config(8, 256, 1.0);
  cfg.adaptiveTau = false;
  cfg.maxPicard = 20;
  EXPECT_THROW(picard_solve(d.tree, cfg), NumericalError);
}

TEST(Picard, ShorterWindowIsARestriction) {
  const auto d = level_draw(3, 8, 1024, 6);
  auto cfg = solver_config(8, 1024, 0.25);
  const auto wide = picard_solve(d.tree, cfg).z;
  cfg.tau = 0.125;
  const auto narrow = picard_solve(d.tree, cfg).z;
  EXPECT_LE(relative_window_distance(wide, narrow, 0.125), 1e-6);
}

TEST(Reconstruct, PhaseRoundTrip) {
  const auto d = level_draw(3, 4, 256, 8);
  const auto z = picard_solve(d.tree, solver_config(4, 256, 0.25)).z;
  const auto u = reconstruct_u(z, d.tree.psi);
  const TimeGrid g(256);
  for (int k = -4; k <= 4; ++k)
    for (int j = 0; j <= 256; j += 7) {
      const cplx v = z(k, j) + d.tree.psi(k, j);
      EXPECT_NEAR(std::abs(u(k, j)), std::abs(v), 1e-14);
      EXPECT_NEAR(std::abs(u(k, j) * std::polar(1.0, -g.t(j) * k * k) - v), 0.0, 1e-14);
    }
}

TEST(Forcing, TrapezoidOfConstantMode) {
  const int M = 256;
  const TimeGrid g(M);
  ModeTrajectory noise(1, M);
  for (auto& v : noise.mode(0)) v = 2.0;
  const auto F = forcing_from_noise_modes(noise);
  for (int j = 0; j <= M; j += 16) EXPECT_NEAR(std::abs(F(0, j) - cplx(2.0 * g.t(j))), 0.0, 1e-13);
  EXPECT_EQ(F(1, g.origin()), cplx(0.0));
}

TEST(DirectSolver, ZeroDataGivesZero) {
  const int K = 3, M = 256;
  const auto u = direct_mild_solve(ModeTrajectory(K, M), std::vector<cplx>(M + 1), ModeTrajectory(K, M),
                                   solver_config(K, M, 0.5));
  EXPECT_EQ(sup_distance(u, ModeTrajectory(K, M)), 0.0);
}

// Linear problem with constant Lambda = 0.5 + 0.2i and F_2' = e^{-4is} cos s, integrated by an ODE solver.
TEST(DirectSolver, LinearDuhamelReference) {
  const int K = 3, M = 4000;
  const TimeGrid g(M);
  ModeTrajectory F(K, M);
  const cplx I{0.0, 1.0};
  for (int j = 0; j <= M; ++j) {
    const double t = g.t(j);
    F(2, j) = (1.0 - std::exp(-3.0 * I * t)) / (6.0 * I) + (1.0 - std::exp(-5.0 * I * t)) / (10.0 * I);
  }
  const std::vector<cplx> lam(M + 1, cplx(0.5, 0.2));
  const auto u = direct_mild_solve(F, lam, ModeTrajectory(K, M), solver_config(K, M, 0.5), false);
  const std::vector<std::pair<double, cplx>> ref{{0.25, {0.12167277229279781, -0.19375532450698987}},
                                                 {0.125, {0.03363183643239906, -0.11676418400737973}},
                                                 {-0.2, {0.08603474012762086, 0.17604964470209133}}};
  for (const auto& [t, want] : ref) EXPECT_LT(std::abs(u(2, index_of(g, t)) - want), 1e-6) << t;
  EXPECT_EQ(u(2, index_of(g, 0.75)), cplx(0.0));
}

TEST(DirectSolver, AgreesWithPicard) {
  const int K = 8, M = 2048;
  const auto d = level_draw(3, K, M, 10);
  auto cfg = solver_config(K, M, 0.25);
  cfg.tol = 1e-10;
  const auto res = picard_solve(d.tree, cfg);
  ASSERT_TRUE(res.report.converged);
  const auto picard = reconstruct_u(res.z, d.tree.psi);
  const auto direct = direct_mild_solve(d.forcing, d.tree.lambda, d.tree.sigma, cfg);
  EXPECT_LE(relative_window_distance(picard, direct, 0.25), 1e-4);
}

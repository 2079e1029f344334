#pragma once

#include <vector>

#include "fracnls/cutoff.hpp"
#include "fracnls/types.hpp"

namespace fracnls {

// Stochastic inputs of the remainder equation at one level.
struct TreeElements {
  int level = 0;
  ModeTrajectory psi;
  std::vector<cplx> lambda;
  ModeTrajectory sigma;
  ModeTrajectory counterterm;  // I_chi(e^{-i.k^2} sigma_k)
  ModeTrajectory centered;     // I_chi(M~(psi,psi)) - counterterm
};

// Fills the counterterm and the centred square from psi, lambda and sigma.
TreeElements make_tree(int level, ModeTrajectory psi, std::vector<cplx> lambda, ModeTrajectory sigma);

// Tree with every element zero.
TreeElements zero_tree(int K, int M);

struct SolverConfig {
  int K = 16;
  int M = 2048;
  double tau = 0.25;
  int maxPicard = 80;
  double tol = 1e-10;
  double b = 0.6;
  double c = 0.2;
  bool adaptiveTau = true;
  double coupling = 1.0;  // sign of the nonlinearity

  void validate() const;
};

// chi_tau [I M(z,z) + I M(z,psi) + I M(psi,z) - I(lambda z) + centred]
ModeTrajectory gamma_map(const ModeTrajectory& z, const TreeElements& tree, const SolverConfig& cfg);

struct SolveReport {
  int iterations = 0;
  int restarts = 0;
  double tau = 0.0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> differences;  // ||z_{m+1} - z_m||_{X^b_c}
  std::vector<double> ratios;       // successive difference ratios
};

struct PicardResult {
  ModeTrajectory z;
  SolveReport report;
};

PicardResult picard_solve(const TreeElements& tree, const SolverConfig& cfg);

// u_k(t) = e^{ik^2 t} (z_k(t) + psi_k(t))
ModeTrajectory reconstruct_u(const ModeTrajectory& z, const ModeTrajectory& psi);

// Integral of e^{-isk^2} dB_k(s) from 0 by the trapezoid rule on the grid.
ModeTrajectory forcing_from_noise_modes(const ModeTrajectory& noiseModes);

// Implicit trapezoid stepping of the rotated mild equation on [-tau, tau],
// v' = -i F' - i (M(v,v) - lambda v - e^{-itk^2} sigma), returning u = e^{itk^2} v (zero outside the window).
ModeTrajectory direct_mild_solve(const ModeTrajectory& forcingIntegral, const std::vector<cplx>& lambda,
                                 const ModeTrajectory& sigma, const SolverConfig& cfg, bool quadratic = true);

// max_j ||a(t_j) - b(t_j)||_{L^2} / max_j ||b(t_j)||_{L^2} over grid points with |t_j| <= tau.
double relative_window_distance(const ModeTrajectory& a, const ModeTrajectory& b, double tau);

}  // namespace fracnls

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fracnls/types.hpp"

namespace fracnls {

enum class NormKind { Hspace, L2Hc, Xb, Xc, Xbc, Xcmu, Bourgain };

std::string to_string(NormKind k);
NormKind parse_norm_kind(const std::string& name);

struct NormSpec {
  NormKind kind = NormKind::Xbc;
  double b = 0.6;     // time-frequency exponent
  double c = 0.2;     // space exponent (negative values give H^{-alpha})
  double mu = 0.5;    // kernel exponent of the X_{c,mu} pairing
  int padding = 4;    // zero-padding factor of the time transform
  int timeIndex = -1; // grid index for Hspace; -1 selects t = 0

  void validate() const;
};

// F(z_k)(l) = int e^{-ilt} z_k(t) dt sampled on a uniform l-grid from a zero-padded DFT.
struct Spectrum {
  int K = 0;
  int length = 0;         // number of l samples
  double step = 0.0;      // l spacing
  double edgeFraction = 0;  // largest |F|^2 at the window edge relative to the peak
  std::vector<cplx> values; // (2K+1) x length, mode-major

  double lambda(int m) const { return step * (m - length / 2); }
  cplx operator()(int k, int m) const { return values[static_cast<std::size_t>(k + K) * length + m]; }
};

Spectrum time_fourier(const ModeTrajectory& traj, int padding = 4);

// Scalar series version.
std::vector<cplx> time_fourier(std::span<const cplx> series, const TimeGrid& grid, int padding, double& step);

// Norms with l-integrals taken against dl/(2 pi).
double norm_eval(const ModeTrajectory& traj, const NormSpec& spec);

// H^gamma(R) norm of a time series on the grid.
double time_sobolev_norm(std::span<const cplx> series, const TimeGrid& grid, double gamma, int padding = 4);

using TrajectoryMap = std::function<ModeTrajectory(const ModeTrajectory&)>;

// max over probes and taus of ||chi_tau op(z)||_{X^b_c} / (tau^mu ||z||_{X^b_c}).
double operator_norm_estimate(const TrajectoryMap& op, double b, double c, double mu,
                              const std::vector<ModeTrajectory>& probes, const std::vector<double>& taus);

// Fixed probe family: eight odd Hermite-type time bumps vanishing at t = 0,
// times eight spatial patterns (single modes and mode pairs) clipped to the box.
std::vector<ModeTrajectory> probe_family(int K, int M, int count = 64);

// Smooth scalar time probes for multiplier suites: Gaussian-windowed tones e^{i omega t}, omega = i/2.
std::vector<std::vector<cplx>> scalar_probe_family(const TimeGrid& grid, int count = 8);

}  // namespace fracnls

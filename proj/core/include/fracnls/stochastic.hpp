#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "fracnls/cutoff.hpp"
#include "fracnls/noise.hpp"
#include "fracnls/operators.hpp"
#include "fracnls/tones.hpp"
#include "fracnls/types.hpp"

namespace fracnls {

// Per-row torus-mode amplitudes V_{a,k} of one realisation restricted to one level box.
struct ModeAmplitudes {
  int K = 0;
  int rows = 0;
  int level = 0;
  std::vector<cplx> values;  // rows x (2K+1), row-major

  int width() const { return 2 * K + 1; }
  cplx operator()(int a, int k) const { return values[static_cast<std::size_t>(a) * width() + k + K]; }
};

// BLAS projection of a realisation onto torus modes, advancing one level box at a time.
// Rows already present receive only the new space band; new rows receive every band.
class ModeProjector {
 public:
  ModeProjector(const SpectralNoise& noise, int K);

  const ModeAmplitudes& advance_to(int level);
  const ModeAmplitudes& current() const { return amps_; }

 private:
  void accumulate(int rowLo, int rowHi, int colLo, int colHi);

  const SpectralNoise& noise_;
  int K_;
  std::vector<std::complex<float>> kernel_;  // cols x (2K+1)
  std::vector<std::complex<float>> acc_;     // rows x (2K+1)
  int rowsDone_ = 0, colsDone_ = 0;
  ModeAmplitudes amps_;
};

ModeAmplitudes project_modes(const SpectralNoise& noise, int level, int K);

// Tone-exact integrators for one time axis, mode box and time grid.
class ToneIntegrator {
 public:
  ToneIntegrator(const NoiseConfig& cfg, int nMax, int K, const TimeGrid& grid);
  ~ToneIntegrator();

  const TimeGrid& grid() const { return grid_; }
  int K() const { return K_; }
  const FrequencyAxis& time_axis() const { return xi_; }
  const ToneLattice& lattice() const { return *lat_; }

  // Noise derivative modes on the grid.
  ModeTrajectory noise_modes(const ModeAmplitudes& V) const;
  // -i chi(t) int_0^t chi(s) e^{-isk^2} dB_k(s): chi linear per step, tones integrated exactly.
  ModeTrajectory psi(const ModeAmplitudes& V) const;
  // int_0^t e^{-isk^2} dB_k(s) ds, exact for the discrete noise.
  ModeTrajectory forcing(const ModeAmplitudes& V) const;

 private:
  double tone_coefficient(int a) const;

  NoiseConfig cfg_;
  TimeGrid grid_;
  int K_;
  FrequencyAxis xi_;
  std::unique_ptr<ToneLattice> lat_;
  std::vector<double> chi_;
  std::vector<cplx> weights_;  // per (mode, row): left/right weights of +xi and -xi, phase and amplitude folded in
  std::vector<long long> binUp_, binDown_;
  std::vector<cplx> shift_;    // per (mode, time): e^{-i t_j k^2}
};

// Trapezoid route: apply the cutoff integral to the phase-twisted noise modes.
ModeTrajectory compute_psi(const ModeTrajectory& noiseModes, const Cutoff& chi = Cutoff());

// Lambda(t) = conj(psi_0(t)).
std::vector<cplx> compute_lambda(const ModeTrajectory& psi);

// (i/2pi) chi(t) [chi(t) B(t,2pi) - int_0^t chi'(s) B(s,2pi) ds], with B summed tone by tone.
std::vector<cplx> lambda_from_sheet(const SpectralNoise& noise, int level, const TimeGrid& grid);

// E[Psi_a(t) conj Psi_b(t)] for |a|,|b| <= K, from the separable spectral measure.
// Levels lo..hi share the tone responses; result[n - lo] is the level-n table.
class PsiCovariance {
 public:
  // Entries are filled for |t| <= window only.
  PsiCovariance(const NoiseConfig& cfg, int lo, int hi, int K, const TimeGrid& grid, bool diagonalOnly = false,
                double window = 2.0);

  int K() const { return K_; }
  int lo() const { return lo_; }
  int hi() const { return hi_; }
  // Value at one grid time.
  cplx operator()(int level, int a, int b, int j) const;

 private:
  std::size_t slot(int level, int a, int b) const;
  int K_, lo_, hi_, M_;
  bool diagonal_;
  std::vector<cplx> time_;    // per level, per (|a|,|b|) pair, per time
  std::vector<cplx> space_;   // per level, per (a,b)
};

// Trapezoid value of int e^{-ilt} f(t) dt for one grid series.
cplx fourier_at(std::span<const cplx> f, const TimeGrid& g, double lambda);

// E[F(Psi_k)(l) conj F(Psi_k2)(l2)] for the discrete noise at one level, built from the tone responses.
cplx psi_fourier_covariance(const NoiseConfig& cfg, int level, const TimeGrid& grid, int k, int k2, double lambda,
                            double lambda2);

enum class SigmaMethod { Exact, MonteCarlo };

struct SigmaEstimate {
  ModeTrajectory mean;
  ModeTrajectory stderr_;  // real and imaginary standard errors, zero for the exact route
  int samples = 0;
};

// Approximate number of tone-time products the exact route needs.
double sigma_exact_cost(const NoiseConfig& cfg, int level, int K, const TimeGrid& grid, double window = 2.0);

// sigma_k(t) = e^{itk^2} E[ M~(Psi,Psi)_k(t) ].
SigmaEstimate compute_sigma(const NoiseConfig& cfg, int level, int K, const TimeGrid& grid, SigmaMethod method,
                            int samples = 0, std::uint64_t seed = 1);

// Exact sigma for every level in lo..hi, zero outside |t| <= window.
std::vector<ModeTrajectory> exact_sigma_levels(const NoiseConfig& cfg, int lo, int hi, int K, const TimeGrid& grid,
                                               double window = 2.0);

// Exact sigma_0(t) only, for every level in lo..hi, zero outside |t| <= window.
std::vector<std::vector<double>> exact_sigma_zero_levels(const NoiseConfig& cfg, int lo, int hi, int K,
                                                         const TimeGrid& grid, double window = 2.0);

// int phi(t) sigma_0(t) dt by the trapezoid rule.
double pair_sigma(const ModeTrajectory& sigma, const std::function<double(double)>& phi);
double pair_sigma(std::span<const double> sigmaZero, const TimeGrid& grid, const std::function<double(double)>& phi);

// I_chi(e^{-i.k^2} sigma_k), the deterministic centring term.
ModeTrajectory sigma_counterterm(const ModeTrajectory& sigma, const Cutoff& chi = Cutoff());

// I_chi(M~(Psi,Psi)) - counterterm.
ModeTrajectory compute_centered_square(const ModeTrajectory& psi, const ModeTrajectory& counterterm,
                                       const Cutoff& chi = Cutoff());

enum class ProductSide { Plus, Minus };

// Plus: I_chi M(z, Psi); Minus: I_chi M(Psi, z).
ModeTrajectory product_operator(const ModeTrajectory& psi, const ModeTrajectory& z, ProductSide side,
                                const Cutoff& chi = Cutoff());

struct ProductParts {
  ModeTrajectory sharp;  // zero mode: I_chi(sum_k1 z_k1 conj Psi_k1)
  ModeTrajectory flat;   // k != 0: I_chi(z_k conj Psi_0)
  ModeTrajectory tilde;  // k != 0: I_chi(sum_{k1 != 0} e^{it 2kk1} z_{k+k1} conj Psi_k1)
};

// Three-way split of the plus operator, built from separate sums.
ProductParts product_parts(const ModeTrajectory& psi, const ModeTrajectory& z, const Cutoff& chi = Cutoff());

}  // namespace fracnls

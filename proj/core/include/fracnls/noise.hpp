#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracnls/types.hpp"

namespace fracnls {

// Discretisation of the frequency-domain white noise behind the fractional sheet.
struct NoiseConfig {
  HurstPair hurst;
  double cH = 1.0;
  double xiDensity = 5.0;   // fine cells per unit time frequency (rounded onto the tone lattice)
  double etaDensity = 4.0;  // fine cells per unit space frequency
  double xiFocus = 5184.0;  // extent of the uniform time-frequency zone
  double etaFocus = 80.0;   // extent of the uniform space-frequency zone
  double growth = 0.05;     // coarse cell width relative to the distance past the focus

  // Fine zones sized so that every mode |k| <= K sees uniform cells around k^2 and k.
  static NoiseConfig focused(const HurstPair& h, int K);

  int lattice_q() const;
  double lattice_step() const;
  void validate() const;
};

struct FrequencyCell {
  double lo = 0, hi = 0;
  double tone = 0;          // phase frequency of the cell
  long long lattice = 0;    // tone / lattice_step (time axis only)
  double mass = 0;          // int_cell |f|^{1-2H} df
  int level = 0;            // smallest n with the cell inside the level-n box

  double width() const { return hi - lo; }
  double amplitude() const { return std::sqrt(mass / width()); }
};

// Positive half-axis partition; cells inside the level-n box form a prefix.
struct FrequencyAxis {
  std::vector<FrequencyCell> cells;
  int prefix(int level) const;
};

FrequencyAxis time_frequency_axis(const NoiseConfig& cfg, int nMax);
FrequencyAxis space_frequency_axis(const NoiseConfig& cfg, int nMax);

// One realisation of the cell values on the half-domain xi > 0.
// Column 2i holds the space cell +eta_i and column 2i+1 the cell -eta_i.
class SpectralNoise {
 public:
  SpectralNoise() = default;
  SpectralNoise(NoiseConfig cfg, int nMax, std::uint64_t seed, std::vector<std::complex<float>> values);

  const NoiseConfig& config() const { return cfg_; }
  int max_level() const { return nMax_; }
  std::uint64_t seed() const { return seed_; }
  const FrequencyAxis& time_axis() const { return xi_; }
  const FrequencyAxis& space_axis() const { return eta_; }

  int rows() const { return static_cast<int>(xi_.cells.size()); }
  int cols() const { return 2 * static_cast<int>(eta_.cells.size()); }
  int rows(int level) const { return xi_.prefix(level); }
  int cols(int level) const { return 2 * eta_.prefix(level); }

  std::complex<float> value(int row, int col) const { return w_[static_cast<std::size_t>(row) * cols() + col]; }
  // Value on the mirrored cell (-xi_row, -eta_col); equals conj(value(row, col ^ 1)) by construction.
  std::complex<float> mirrored(int row, int col) const { return std::conj(value(row, col ^ 1)); }
  double space_tone(int col) const;
  double space_sign(int col) const { return (col & 1) ? -1.0 : 1.0; }
  const FrequencyCell& space_cell(int col) const { return eta_.cells[col / 2]; }

  const std::vector<std::complex<float>>& values() const { return w_; }
  std::vector<std::complex<float>>& values() { return w_; }

  // Same draw restricted to the level-n box.
  SpectralNoise truncated(int level) const;

 private:
  NoiseConfig cfg_;
  int nMax_ = 0;
  std::uint64_t seed_ = 0;
  FrequencyAxis xi_, eta_;
  std::vector<std::complex<float>> w_;
};

SpectralNoise sample_spectral_noise(const NoiseConfig& cfg, int nMax, std::uint64_t seed);

// Seed of the index-th realisation of an ensemble.
std::uint64_t realisation_seed(std::uint64_t seed, std::uint64_t index);

// Sheet B^(n)(t, x), vanishing on both axes.
double eval_sheet(const SpectralNoise& noise, int level, double t, double x);

// Mixed derivative of the sheet at (t, x).
double eval_noise_field(const SpectralNoise& noise, int level, double t, double x);

// Spatial kernel m_k(eta) = (e^{2 pi i (eta-k)} - 1)/(2 pi i (eta-k)).
std::complex<double> mode_kernel(int k, double eta);

// Per-cell mode amplitudes V_{a,k} = sum_b sign_b beta_b m_k(eta_b) w_ab for |k| <= K and
// rows in the level box (plain loops, independent of the BLAS path).
std::vector<cplx> mode_amplitudes(const SpectralNoise& noise, int level, int K);

// Torus modes of the noise derivative on the time grid.
ModeTrajectory eval_noise_modes(const SpectralNoise& noise, int level, int K, const TimeGrid& grid);

// Exact covariance of the discretised noise derivative at level n.
double covariance_noise_exact(const NoiseConfig& cfg, int level, double t, double x, double t2, double x2);

// Exact covariance of the level increment (level+1 minus level).
double covariance_increment_exact(const NoiseConfig& cfg, int level, double t, double x, double t2, double x2);

// Continuum separable covariance factors: sum over cells of mass * 2cos(lag * tone).
double time_covariance_factor(const FrequencyAxis& axis, int level, double lag);
double space_covariance_factor(const FrequencyAxis& axis, int level, double lag);

struct BoundKernels {
  double gamma = 0, lambda = 0, gammaTilde = 0, lambdaTilde = 0;
};

// Integrals over the real line with the |f|^{1-2H} singularity split out.
BoundKernels bound_kernels(double H, int k, int k2, double lambda, double lambda2);

// int |f|^{-nu} / (<f-a><f-b>) df
double singular_pair_integral(double nu, double a, double b);

void write_noise(const SpectralNoise& noise, std::ostream& out);
void write_noise(const SpectralNoise& noise, const std::string& path);
SpectralNoise read_noise(std::istream& in);
SpectralNoise read_noise(const std::string& path);

}  // namespace fracnls

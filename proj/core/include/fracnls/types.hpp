#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracnls {

using cplx = std::complex<double>;

// Uniform grid t_j = -2 + 4j/M, j = 0..M, covering the cutoff support.
struct TimeGrid {
  int M = 2048;

  explicit TimeGrid(int steps = 2048);
  double step() const { return 4.0 / M; }
  double t(int j) const { return -2.0 + step() * j; }
  int points() const { return M + 1; }
  int origin() const { return M / 2; }
};

// Complex Fourier coefficients z_k(t_j) for |k| <= K on a TimeGrid.
// Storage is mode-major so that each mode's time series is contiguous.
class ModeTrajectory {
 public:
  ModeTrajectory() = default;
  ModeTrajectory(int K, int M);

  int K() const { return K_; }
  int M() const { return M_; }
  int modes() const { return 2 * K_ + 1; }
  int points() const { return M_ + 1; }
  TimeGrid grid() const { return TimeGrid(M_); }

  cplx& operator()(int k, int j) { return data_[index(k, j)]; }
  const cplx& operator()(int k, int j) const { return data_[index(k, j)]; }

  std::span<cplx> mode(int k) { return {data_.data() + index(k, 0), static_cast<std::size_t>(M_ + 1)}; }
  std::span<const cplx> mode(int k) const {
    return {data_.data() + index(k, 0), static_cast<std::size_t>(M_ + 1)};
  }

  std::vector<cplx>& raw() { return data_; }
  const std::vector<cplx>& raw() const { return data_; }

  bool same_shape(const ModeTrajectory& o) const { return K_ == o.K_ && M_ == o.M_; }

  ModeTrajectory& operator+=(const ModeTrajectory& o);
  ModeTrajectory& operator-=(const ModeTrajectory& o);
  ModeTrajectory& operator*=(cplx a);

 private:
  std::size_t index(int k, int j) const {
    return static_cast<std::size_t>(k + K_) * static_cast<std::size_t>(M_ + 1) + static_cast<std::size_t>(j);
  }
  int K_ = 0;
  int M_ = 0;
  std::vector<cplx> data_;
};

ModeTrajectory operator+(ModeTrajectory a, const ModeTrajectory& b);
ModeTrajectory operator-(ModeTrajectory a, const ModeTrajectory& b);
ModeTrajectory operator*(cplx s, ModeTrajectory a);

void require_same_shape(const ModeTrajectory& a, const ModeTrajectory& b, const char* where);

// Largest pointwise modulus difference.
double sup_distance(const ModeTrajectory& a, const ModeTrajectory& b);

enum class Regime { Function, RoughRenormalizable, RoughUnhandled, OutOfScope };

std::string to_string(Regime r);

// Roughness parameters of the noise in time (h0) and space (h1).
struct HurstPair {
  double h0 = 0.65;
  double h1 = 0.55;

  double scaling() const { return 2.0 * h0 + h1; }
  double kappa() const;
  Regime regime() const;
  void validate() const;
};

// <x> = (1 + x^2)^{1/2}
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fracnls

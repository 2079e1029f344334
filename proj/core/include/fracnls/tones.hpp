#pragma once

#include <memory>
#include <span>
#include <vector>

#include "fracnls/types.hpp"

namespace fracnls {

// Sums of lattice tones sum_m c_m e^{i t_j m d} on a TimeGrid, with d = pi/(2Q).
// Because d * step * (M Q) = 2 pi, the sums fold onto one FFT of length M Q.
class ToneLattice {
 public:
  ToneLattice(const TimeGrid& grid, int Q);
  ~ToneLattice();
  ToneLattice(const ToneLattice&) = delete;
  ToneLattice& operator=(const ToneLattice&) = delete;

  const TimeGrid& grid() const { return grid_; }
  int q() const { return Q_; }
  long long period() const { return P_; }
  double spacing() const;

  // e^{i t_j m d}, exact table lookup.
  cplx phase(long long m, int j) const;
  // e^{i m d * step}
  cplx step_phase(long long m) const { return twiddle_[wrap(m)]; }

  std::vector<cplx> zero_bins() const { return std::vector<cplx>(static_cast<std::size_t>(P_)); }
  void deposit(std::vector<cplx>& bins, long long m, cplx c) const;
  // Bin and phase factor used by deposit, for callers that cache them.
  long long bin(long long m) const { return wrap(m); }
  cplx origin_factor(long long m) const;
  // Evaluates the folded sum at every grid point; bins are consumed.
  void evaluate(std::vector<cplx>& bins, std::span<cplx> out) const;

  long long wrap(long long m) const {
    long long r = m % P_;
    return r < 0 ? r + P_ : r;
  }

 private:
  TimeGrid grid_;
  int Q_;
  long long P_;
  std::vector<cplx> twiddle_;  // e^{2 pi i r / P}
  std::vector<cplx> origin_;   // e^{-2 i m d}, period 2Q in m
  struct Plan;
  std::unique_ptr<Plan> plan_;
};

// Product-trapezoid weights: int_0^1 (1-u) e^{i theta u} du and int_0^1 u e^{i theta u} du.
void segment_weights(double theta, cplx& left, cplx& right);

// Response j(t_j) = -i chi(t_j) int_0^{t_j} chi(s) e^{i s (xi - k2)} ds of one lattice tone xi = m d,
// with chi interpolated linearly between grid points and the tone integrated exactly.
// A non-negative span restricts the work to the 2*span+1 points around the origin.
void tone_response(const ToneLattice& lat, long long m, double k2, std::span<const double> chi,
                   std::span<cplx> out, int span = -1);

}  // namespace fracnls

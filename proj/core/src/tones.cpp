#include "fracnls/tones.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "detail.hpp"

namespace fracnls {

namespace detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

struct ToneLattice::Plan {
  fftw_plan plan = nullptr;
};

ToneLattice::ToneLattice(const TimeGrid& grid, int Q) : grid_(grid), Q_(Q), P_(static_cast<long long>(grid.M) * Q) {
  if (Q < 1) throw ConfigError("tone lattice needs Q >= 1");
  twiddle_.resize(static_cast<std::size_t>(P_));
  for (long long r = 0; r < P_; ++r) twiddle_[r] = std::polar(1.0, 2.0 * std::numbers::pi * double(r) / double(P_));
  origin_.resize(static_cast<std::size_t>(2 * Q_));
  for (int r = 0; r < 2 * Q_; ++r) origin_[r] = std::polar(1.0, -std::numbers::pi * double(r) / double(Q_));
  plan_ = std::make_unique<Plan>();
  std::vector<cplx> scratch(static_cast<std::size_t>(P_));
  std::lock_guard lock(detail::fftw_planner_mutex());
  plan_->plan = fftw_plan_dft_1d(static_cast<int>(P_), reinterpret_cast<fftw_complex*>(scratch.data()),
                                 reinterpret_cast<fftw_complex*>(scratch.data()), FFTW_BACKWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
}

ToneLattice::~ToneLattice() {
  if (plan_ && plan_->plan) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan_->plan);
  }
}

double ToneLattice::spacing() const { return std::numbers::pi / (2.0 * Q_); }

cplx ToneLattice::phase(long long m, int j) const {
  long long r = m % (2 * Q_);
  if (r < 0) r += 2 * Q_;
  return origin_[r] * twiddle_[wrap(m * j)];
}

cplx ToneLattice::origin_factor(long long m) const {
  long long r = m % (2 * Q_);
  if (r < 0) r += 2 * Q_;
  return origin_[r];
}

void ToneLattice::deposit(std::vector<cplx>& bins, long long m, cplx c) const { bins[wrap(m)] += c * origin_factor(m); }

void ToneLattice::evaluate(std::vector<cplx>& bins, std::span<cplx> out) const {
  fftw_execute_dft(plan_->plan, reinterpret_cast<fftw_complex*>(bins.data()), reinterpret_cast<fftw_complex*>(bins.data()));
  for (int j = 0; j < grid_.points(); ++j) out[j] = bins[j % P_];
}

void segment_weights(double theta, cplx& left, cplx& right) {
  if (std::abs(theta) < 1e-2) {
    const double t2 = theta * theta;
    right = {0.5 - t2 / 8.0 + t2 * t2 / 144.0, theta / 3.0 - theta * t2 / 30.0};
    const cplx whole{1.0 - t2 / 6.0 + t2 * t2 / 120.0, theta / 2.0 - theta * t2 / 24.0};
    left = whole - right;
    return;
  }
  const cplx e = std::polar(1.0, theta);
  const cplx it{0.0, theta};
  const cplx whole = (e - 1.0) / it;
  right = (e - whole) / it;
  left = whole - right;
}

void tone_response(const ToneLattice& lat, long long m, double k2, std::span<const double> chi,
                   std::span<cplx> out, int span) {
  const TimeGrid& g = lat.grid();
  const double h = g.step();
  const double omega = double(m) * lat.spacing() - k2;
  cplx a, b;
  segment_weights(omega * h, a, b);
  const int o = g.origin();
  const int hi = span < 0 ? g.M : std::min(g.M, o + span);
  const int lo = span < 0 ? 0 : std::max(0, o - span);
  // e^{i t_i omega} advanced by a fixed rotation from the exact value at the origin (t=0 -> 1).
  const cplx rot = std::polar(1.0, omega * h);
  cplx cum{};
  cplx ph{1.0, 0.0};
  out[o] = 0.0;
  for (int i = o; i < hi; ++i) {
    if (((i - o) & 255) == 0) ph = std::polar(1.0, omega * g.t(i));
    cum += h * ph * (chi[i] * a + chi[i + 1] * b);
    out[i + 1] = cplx(0, -1) * chi[i + 1] * cum;
    ph *= rot;
  }
  cum = 0.0;
  const cplx back = std::conj(rot);
  ph = back;
  for (int i = o - 1; i >= lo; --i) {
    if (((o - 1 - i) & 255) == 0) ph = std::polar(1.0, omega * g.t(i));
    cum -= h * ph * (chi[i] * a + chi[i + 1] * b);
    out[i] = cplx(0, -1) * chi[i] * cum;
    ph *= back;
  }
}

}  // namespace fracnls

#include "fracnls/norms.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "fracnls/cutoff.hpp"
#include "fracnls/operators.hpp"
#include "detail.hpp"

namespace fracnls {

namespace {

// In-place complex FFT of any length; the plan is made under a lock, execution is lock-free.
void fft(std::vector<cplx>& data, int sign) {
  fftw_plan p;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    p = fftw_plan_dft_1d(static_cast<int>(data.size()), reinterpret_cast<fftw_complex*>(data.data()),
                         reinterpret_cast<fftw_complex*>(data.data()), sign, FFTW_ESTIMATE);
  }
  fftw_execute(p);
  std::lock_guard lock(detail::fftw_planner_mutex());
  fftw_destroy_plan(p);
}

constexpr double kInvTwoPi = 0.5 / std::numbers::pi;

}  // namespace

std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::Hspace: return "Hspace";
    case NormKind::L2Hc: return "L2Hc";
    case NormKind::Xb: return "Xb";
    case NormKind::Xc: return "Xc";
    case NormKind::Xbc: return "Xbc";
    case NormKind::Xcmu: return "Xcmu";
    case NormKind::Bourgain: return "Bourgain";
  }
  return "Xbc";
}

NormKind parse_norm_kind(const std::string& name) {
  for (auto k : {NormKind::Hspace, NormKind::L2Hc, NormKind::Xb, NormKind::Xc, NormKind::Xbc, NormKind::Xcmu,
                 NormKind::Bourgain}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unsupported norm kind: " + name);
}

void NormSpec::validate() const {
  if (padding < 2) throw ConfigError("time transform padding must be at least 2");
  if (kind == NormKind::Xcmu && !(mu >= 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in [0, 1]");
  if ((kind == NormKind::Xb || kind == NormKind::Xbc || kind == NormKind::Bourgain) && b < 0.0) {
    throw ConfigError("time exponent b must be non-negative");
  }
}

std::vector<cplx> time_fourier(std::span<const cplx> series, const TimeGrid& grid, int padding, double& step) {
  const int N = grid.M * padding;
  const double h = grid.step();
  std::vector<cplx> buf(N);
  std::copy(series.begin(), series.end(), buf.begin());
  fft(buf, FFTW_FORWARD);
  step = 2.0 * std::numbers::pi / (N * h);
  std::vector<cplx> out(N);
  for (int m = 0; m < N; ++m) {
    const double lambda = step * (m - N / 2);
    // t_0 = -2 contributes the e^{2il} factor.
    out[m] = h * std::polar(1.0, 2.0 * lambda) * buf[(m + N / 2) % N];
  }
  return out;
}

Spectrum time_fourier(const ModeTrajectory& traj, int padding) {
  if (padding < 2) throw ConfigError("time transform padding must be at least 2");
  Spectrum s;
  s.K = traj.K();
  s.length = traj.M() * padding;
  s.values.resize(static_cast<std::size_t>(traj.modes()) * s.length);
  const TimeGrid g = traj.grid();
  double peak = 0.0, edge = 0.0;
  for (int k = -traj.K(); k <= traj.K(); ++k) {
    auto f = time_fourier(traj.mode(k), g, padding, s.step);
    for (int m = 0; m < s.length; ++m) peak = std::max(peak, std::norm(f[m]));
    edge = std::max({edge, std::norm(f[0]), std::norm(f[s.length - 1])});
    std::copy(f.begin(), f.end(), s.values.begin() + static_cast<std::ptrdiff_t>(k + traj.K()) * s.length);
  }
  s.edgeFraction = peak > 0.0 ? edge / peak : 0.0;
  return s;
}

namespace {

double weighted_l2(const Spectrum& s, int k, const std::function<double(double)>& weight) {
  double acc = 0.0;
  for (int m = 0; m < s.length; ++m) acc += weight(s.lambda(m)) * std::norm(s(k, m));
  return acc * s.step * kInvTwoPi;
}

double xb_squared(const Spectrum& s, double b) {
  double acc = 0.0;
  for (int k = -s.K; k <= s.K; ++k) acc += weighted_l2(s, k, [b](double l) { return std::pow(bracket(l), 2.0 * b); });
  return acc;
}

double xc_squared(const Spectrum& s, double c) {
  double acc = 0.0;
  for (int k = -s.K; k <= s.K; ++k) acc += std::pow(bracket(k), 2.0 * c) * weighted_l2(s, k, [](double) { return 1.0; });
  return acc;
}

double xcmu_squared(const Spectrum& s, double c, double mu) {
  const int N = s.length;
  const int L = 2 * N;
  std::vector<cplx> kernel(L);
  for (int r = 0; r < L; ++r) {
    const int d = r < N ? r : r - L;
    kernel[r] = std::pow(bracket(d * s.step), -(1.0 - mu));
  }
  fft(kernel, FFTW_FORWARD);
  double acc = 0.0;
  for (int k = -s.K; k <= s.K; ++k) {
    std::vector<cplx> a(L);
    for (int m = 0; m < N; ++m) a[m] = std::abs(s(k, m));
    std::vector<cplx> conv = a;
    fft(conv, FFTW_FORWARD);
    for (int r = 0; r < L; ++r) conv[r] *= kernel[r];
    fft(conv, FFTW_BACKWARD);
    double pair = 0.0;
    for (int m = 0; m < N; ++m) pair += a[m].real() * conv[m].real() / L;
    acc += std::pow(bracket(k), 2.0 * c) * pair * s.step * s.step * kInvTwoPi * kInvTwoPi;
  }
  return acc;
}

}  // namespace

double norm_eval(const ModeTrajectory& traj, const NormSpec& spec) {
  spec.validate();
  const TimeGrid g = traj.grid();
  switch (spec.kind) {
    case NormKind::Hspace: {
      const int j = spec.timeIndex < 0 ? g.origin() : spec.timeIndex;
      if (j > g.M) throw ConfigError("time index outside the grid");
      double acc = 0.0;
      for (int k = -traj.K(); k <= traj.K(); ++k) acc += std::pow(bracket(k), 2.0 * spec.c) * std::norm(traj(k, j));
      return std::sqrt(acc);
    }
    case NormKind::L2Hc: {
      double acc = 0.0;
      for (int k = -traj.K(); k <= traj.K(); ++k) {
        auto m = traj.mode(k);
        double s = 0.0;
        for (int j = 0; j < g.points(); ++j) s += ((j == 0 || j == g.M) ? 0.5 : 1.0) * std::norm(m[j]);
        acc += std::pow(bracket(k), 2.0 * spec.c) * s * g.step();
      }
      return std::sqrt(acc);
    }
    case NormKind::Xb: return std::sqrt(xb_squared(time_fourier(traj, spec.padding), spec.b));
    case NormKind::Xc: return std::sqrt(xc_squared(time_fourier(traj, spec.padding), spec.c));
    case NormKind::Xbc: {
      const auto s = time_fourier(traj, spec.padding);
      return std::sqrt(xb_squared(s, spec.b)) + std::sqrt(xc_squared(s, spec.c));
    }
    case NormKind::Xcmu: return std::sqrt(xcmu_squared(time_fourier(traj, spec.padding), spec.c, spec.mu));
    case NormKind::Bourgain: {
      // The envelope of e^{-ik^2 t} waves carries the weight: <l + k^2>.
      const auto s = time_fourier(traj, spec.padding);
      double acc = 0.0;
      for (int k = -s.K; k <= s.K; ++k) {
        const double k2 = double(k) * k;
        acc += std::pow(bracket(k), 2.0 * spec.c) *
               weighted_l2(s, k, [&](double l) { return std::pow(bracket(l + k2), 2.0 * spec.b); });
      }
      return std::sqrt(acc);
    }
  }
  throw ConfigError("unsupported norm kind");
}

double time_sobolev_norm(std::span<const cplx> series, const TimeGrid& grid, double gamma, int padding) {
  double step = 0.0;
  const auto f = time_fourier(series, grid, padding, step);
  const int N = static_cast<int>(f.size());
  double acc = 0.0;
  for (int m = 0; m < N; ++m) acc += std::pow(bracket(step * (m - N / 2)), 2.0 * gamma) * std::norm(f[m]);
  return std::sqrt(acc * step * kInvTwoPi);
}

double operator_norm_estimate(const TrajectoryMap& op, double b, double c, double mu,
                              const std::vector<ModeTrajectory>& probes, const std::vector<double>& taus) {
  if (probes.empty()) throw ConfigError("operator norm estimate needs at least one probe");
  if (taus.empty()) throw ConfigError("operator norm estimate needs at least one tau");
  NormSpec spec;
  spec.kind = NormKind::Xbc;
  spec.b = b;
  spec.c = c;
  double best = 0.0;
  for (const auto& z : probes) {
    const double nz = norm_eval(z, spec);
    if (!(nz > 0.0)) throw ConfigError("probes must be nonzero");
    const ModeTrajectory image = op(z);
    for (double tau : taus) {
      if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("taus must lie in (0, 1]");
      const double r = norm_eval(localize(image, tau), spec) / (std::pow(tau, mu) * nz);
      best = std::max(best, r);
    }
  }
  return best;
}

namespace {

// Probabilists' Hermite polynomial He_n.
double hermite(int n, double x) {
  double a = 1.0, b = x;
  if (n == 0) return a;
  for (int i = 1; i < n; ++i) {
    const double c = x * b - i * a;
    a = b;
    b = c;
  }
  return b;
}

double time_bump(int n, double t) { return Cutoff::unit(t) * t * hermite(n, 2.0 * t) * std::exp(-2.0 * t * t) / (1.0 + n); }

}  // namespace

std::vector<ModeTrajectory> probe_family(int K, int M, int count) {
  const std::vector<std::vector<std::pair<int, cplx>>> patterns{
      {{0, 1.0}}, {{1, 1.0}}, {{2, 1.0}}, {{3, 1.0}}, {{5, 1.0}},
      {{1, 1.0}, {-2, cplx(0.0, 0.5)}}, {{0, 1.0}, {3, cplx(0.0, 0.5)}}, {{2, 1.0}, {4, cplx(0.0, 0.5)}}};
  const TimeGrid g(M);
  std::vector<ModeTrajectory> out;
  for (int i = 0; i < count; ++i) {
    const int n = i % 8;
    const auto& pat = patterns[(i / 8) % patterns.size()];
    ModeTrajectory z(K, M);
    for (const auto& [k, w] : pat) {
      const int kk = std::clamp(k, -K, K);
      for (int j = 0; j < g.points(); ++j) z(kk, j) += w * time_bump(n, g.t(j));
    }
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<std::vector<cplx>> scalar_probe_family(const TimeGrid& grid, int count) {
  std::vector<std::vector<cplx>> out;
  for (int i = 0; i < count; ++i) {
    const double omega = 0.5 * i;
    std::vector<cplx> v(grid.points());
    for (int j = 0; j < grid.points(); ++j) {
      const double t = grid.t(j);
      v[j] = Cutoff::unit(t) * std::exp(-t * t) * std::polar(1.0, omega * t) * (1.0 + 0.25 * i * t);
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace fracnls

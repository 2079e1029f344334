#include "fracnls/operators.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "detail.hpp"

namespace fracnls {

long long resonance(long long k, long long k1) { return 2 * k * k1; }

namespace {

// Rotating by e^{itm^2} turns the twisted sum into a plain correlation.
void correlate(const cplx* v, const cplx* w, int K, double t, PairSet pairs, cplx* out, std::vector<cplx>& a,
               std::vector<cplx>& b, std::vector<cplx>& rot) {
  for (int m = -K; m <= K; ++m) {
    rot[m + K] = std::polar(1.0, t * double(m) * double(m));
    a[m + K] = rot[m + K] * v[m + K];
    b[m + K] = std::conj(rot[m + K] * w[m + K]);
  }
  for (int k = -K; k <= K; ++k) {
    const int lo = std::max(-K, -K - k);
    const int hi = std::min(K, K - k);
    cplx s{};
    for (int k1 = lo; k1 <= hi; ++k1) {
      if (pairs == PairSet::SkipZero && k1 == 0) continue;
      s += a[k + k1 + K] * b[k1 + K];
    }
    out[k + K] = std::conj(rot[k + K]) * s;
  }
}

}  // namespace

std::vector<cplx> twisted_product_at(std::span<const cplx> v, std::span<const cplx> w, int K, double t, PairSet pairs) {
  const int n = 2 * K + 1;
  if (static_cast<int>(v.size()) != n || static_cast<int>(w.size()) != n) {
    throw std::invalid_argument("twisted_product_at: mode vectors must have 2K+1 entries");
  }
  std::vector<cplx> a(n), b(n), rot(n), out(n);
  correlate(v.data(), w.data(), K, t, pairs, out.data(), a, b, rot);
  return out;
}

ModeTrajectory twisted_product(const ModeTrajectory& v, const ModeTrajectory& w, PairSet pairs) {
  require_same_shape(v, w, "twisted_product");
  const int K = v.K();
  const int n = v.modes();
  const TimeGrid g = v.grid();
  ModeTrajectory out(K, v.M());
  std::vector<cplx> a(n), b(n), rot(n), vj(n), wj(n), oj(n);
  for (int j = 0; j < g.points(); ++j) {
    for (int m = -K; m <= K; ++m) {
      vj[m + K] = v(m, j);
      wj[m + K] = w(m, j);
    }
    correlate(vj.data(), wj.data(), K, g.t(j), pairs, oj.data(), a, b, rot);
    for (int k = -K; k <= K; ++k) out(k, j) = oj[k + K];
  }
  return out;
}

std::vector<cplx> cutoff_integral(std::span<const cplx> v, const TimeGrid& g, const Cutoff& chi) {
  if (static_cast<int>(v.size()) != g.points()) throw std::invalid_argument("cutoff_integral: size mismatch");
  const double h = g.step();
  const int o = g.origin();
  std::vector<double> c = chi.sample(g);
  std::vector<cplx> out(g.points());
  cplx q{};
  for (int j = o + 1; j < g.points(); ++j) {
    q += 0.5 * h * (c[j - 1] * v[j - 1] + c[j] * v[j]);
    out[j] = cplx(0, -1) * c[j] * q;
  }
  q = {};
  for (int j = o - 1; j >= 0; --j) {
    q -= 0.5 * h * (c[j] * v[j] + c[j + 1] * v[j + 1]);
    out[j] = cplx(0, -1) * c[j] * q;
  }
  out[o] = 0.0;
  return out;
}

ModeTrajectory cutoff_integral(const ModeTrajectory& v, const Cutoff& chi) {
  ModeTrajectory out(v.K(), v.M());
  const TimeGrid g = v.grid();
  for (int k = -v.K(); k <= v.K(); ++k) {
    auto r = cutoff_integral(v.mode(k), g, chi);
    std::copy(r.begin(), r.end(), out.mode(k).begin());
  }
  return out;
}

ModeTrajectory localize(const ModeTrajectory& z, double tau) {
  const Cutoff chi(tau);
  const TimeGrid g = z.grid();
  const auto c = chi.sample(g);
  ModeTrajectory out = z;
  for (int k = -z.K(); k <= z.K(); ++k) {
    auto m = out.mode(k);
    for (int j = 0; j < g.points(); ++j) m[j] *= c[j];
  }
  return out;
}

namespace {

using boost::math::quadrature::gauss;

// Composite 20-point Gauss-Legendre, panels short against both the phase and the bump flank.
template <class F>
cplx panel_integral(F f, double a, double b, double freq) {
  const double width = std::min(0.1, 4.0 / (1.0 + std::abs(freq)));
  const int n = std::max(1, static_cast<int>(std::ceil((b - a) / width)));
  const double h = (b - a) / n;
  cplx s{};
  for (int i = 0; i < n; ++i) s += gauss<double, 20>::integrate(f, a + i * h, a + (i + 1) * h);
  return s;
}

// int_0^t e^{i s l1} chi(s) ds
cplx inner_integral(double t, double l1) {
  const double plateau = std::min(t, 1.0);
  cplx r = plateau * detail::phase_integral(l1 * plateau);
  if (t > 1.0) {
    auto f = [l1](double s) { return std::polar(Cutoff::unit(s), l1 * s); };
    r += panel_integral(f, 1.0, t, l1);
  }
  return r;
}

}  // namespace

cplx cutoff_integral_kernel(double lambda, double lambda1, double tau) {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("cutoff_integral_kernel: tau must be in [0,1]");
  if (tau == 0.0) return 0.0;
  auto f = [&](double t) {
    return std::polar(Cutoff::unit(t / tau) * Cutoff::unit(t), -lambda * t) * inner_integral(t, lambda1);
  };
  std::vector<double> cuts{0.0, tau};
  if (1.0 < 2.0 * tau && 1.0 > tau) cuts.push_back(1.0);
  cuts.push_back(2.0 * tau);
  std::sort(cuts.begin(), cuts.end());
  cplx total{};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) total += panel_integral(f, cuts[i], cuts[i + 1], std::abs(lambda) + std::abs(lambda1));
  }
  return total;
}

}  // namespace fracnls

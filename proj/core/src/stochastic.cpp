#include "fracnls/stochastic.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "detail.hpp"

namespace fracnls {

namespace {

constexpr cplx kMinusI{0.0, -1.0};

std::vector<std::complex<float>> space_kernel(const SpectralNoise& noise, int colHi, int K) {
  const int W = 2 * K + 1;
  std::vector<std::complex<float>> ker(static_cast<std::size_t>(colHi) * W);
  for (int b = 0; b < colHi; ++b) {
    const double weight = noise.space_sign(b) * noise.space_cell(b).amplitude();
    for (int k = -K; k <= K; ++k) {
      ker[static_cast<std::size_t>(b) * W + k + K] = std::complex<float>(weight * mode_kernel(k, noise.space_tone(b)));
    }
  }
  return ker;
}

// Cumulative product-trapezoid from the grid origin, returning -i chi_j * int_0^{t_j}.
void accumulate_segments(const TimeGrid& g, std::span<const cplx> seg, std::span<const double> chi, std::span<cplx> out) {
  const int o = g.origin();
  cplx cum{};
  out[o] = 0.0;
  for (int i = o; i < g.M; ++i) {
    cum += seg[i];
    out[i + 1] = kMinusI * chi[i + 1] * cum;
  }
  cum = 0.0;
  for (int i = o - 1; i >= 0; --i) {
    cum -= seg[i];
    out[i] = kMinusI * chi[i] * cum;
  }
}

}  // namespace

ModeProjector::ModeProjector(const SpectralNoise& noise, int K)
    : noise_(noise), K_(K), kernel_(space_kernel(noise, noise.cols(), K)) {
  amps_.K = K;
}

void ModeProjector::accumulate(int rowLo, int rowHi, int colLo, int colHi) {
  if (rowHi <= rowLo || colHi <= colLo) return;
  const int W = 2 * K_ + 1;
  const std::complex<float> one{1.0f, 0.0f};
  cblas_cgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, rowHi - rowLo, W, colHi - colLo, &one,
              noise_.values().data() + static_cast<std::size_t>(rowLo) * noise_.cols() + colLo, noise_.cols(),
              kernel_.data() + static_cast<std::size_t>(colLo) * W, W, &one,
              acc_.data() + static_cast<std::size_t>(rowLo) * W, W);
}

const ModeAmplitudes& ModeProjector::advance_to(int level) {
  if (level < 0 || level > noise_.max_level()) throw ConfigError("requested level exceeds the sampled level");
  const int W = 2 * K_ + 1;
  if (level < amps_.level || rowsDone_ == 0) {
    acc_.clear();
    rowsDone_ = colsDone_ = 0;
  }
  const int R = noise_.rows(level), C = noise_.cols(level);
  acc_.resize(static_cast<std::size_t>(R) * W);
  accumulate(0, rowsDone_, colsDone_, C);
  accumulate(rowsDone_, R, 0, C);
  rowsDone_ = R;
  colsDone_ = C;
  amps_.level = level;
  amps_.rows = R;
  amps_.values.assign(acc_.begin(), acc_.end());
  return amps_;
}

ModeAmplitudes project_modes(const SpectralNoise& noise, int level, int K) {
  ModeProjector p(noise, K);
  return p.advance_to(level);
}

ToneIntegrator::ToneIntegrator(const NoiseConfig& cfg, int nMax, int K, const TimeGrid& grid)
    : cfg_(cfg), grid_(grid), K_(K), xi_(time_frequency_axis(cfg, nMax)),
      lat_(std::make_unique<ToneLattice>(grid, cfg.lattice_q())), chi_(Cutoff().sample(grid)) {
  const int W = 2 * K + 1;
  const int R = static_cast<int>(xi_.cells.size());
  const double h = grid.step();
  weights_.resize(static_cast<std::size_t>(R) * W * 4);
  binUp_.resize(R);
  binDown_.resize(R);
  for (int a = 0; a < R; ++a) {
    const long long m = xi_.cells[a].lattice;
    binUp_[a] = lat_->bin(m);
    binDown_[a] = lat_->bin(-m);
  }
  for (int k = -K; k <= K; ++k) {
    const double k2 = double(k) * k;
    for (int a = 0; a < R; ++a) {
      const double xi = xi_.cells[a].tone;
      const long long m = xi_.cells[a].lattice;
      const double c = tone_coefficient(a);
      cplx* w = &weights_[(static_cast<std::size_t>(k + K) * R + a) * 4];
      segment_weights((xi - k2) * h, w[0], w[1]);
      segment_weights((-xi - k2) * h, w[2], w[3]);
      const cplx up = c * lat_->origin_factor(m), down = c * lat_->origin_factor(-m);
      w[0] *= up;
      w[1] *= up;
      w[2] *= down;
      w[3] *= down;
    }
  }
  shift_.resize(static_cast<std::size_t>(W) * grid.points());
  for (int k = -K; k <= K; ++k) {
    for (int j = 0; j < grid.points(); ++j) {
      shift_[static_cast<std::size_t>(k + K) * grid.points() + j] = std::polar(1.0, -grid.t(j) * double(k) * k);
    }
  }
}

ToneIntegrator::~ToneIntegrator() = default;

double ToneIntegrator::tone_coefficient(int a) const { return -cfg_.cH * xi_.cells[a].amplitude(); }

ModeTrajectory ToneIntegrator::noise_modes(const ModeAmplitudes& V) const {
  if (V.K != K_) throw std::invalid_argument("noise_modes: mode box mismatch");
  ModeTrajectory out(K_, grid_.M);
  for (int k = -K_; k <= K_; ++k) {
    auto bins = lat_->zero_bins();
    for (int a = 0; a < V.rows; ++a) {
      const double c = tone_coefficient(a);
      const long long m = xi_.cells[a].lattice;
      lat_->deposit(bins, m, c * V(a, k));
      lat_->deposit(bins, -m, c * std::conj(V(a, -k)));
    }
    lat_->evaluate(bins, out.mode(k));
  }
  return out;
}

ModeTrajectory ToneIntegrator::psi(const ModeAmplitudes& V) const {
  if (V.K != K_) throw std::invalid_argument("psi: mode box mismatch");
  if (V.rows > static_cast<int>(xi_.cells.size())) throw std::invalid_argument("psi: more rows than the integrator axis");
  const int W = 2 * K_ + 1;
  const int P = grid_.points();
  const int R = static_cast<int>(xi_.cells.size());
  const double h = grid_.step();
  // Mode-major copy so the row loop below is contiguous.
  std::vector<cplx> Vt(static_cast<std::size_t>(W) * V.rows);
  for (int a = 0; a < V.rows; ++a) {
    for (int i = 0; i < W; ++i) Vt[static_cast<std::size_t>(i) * V.rows + a] = V.values[static_cast<std::size_t>(a) * W + i];
  }
  ModeTrajectory out(K_, grid_.M);
  std::vector<cplx> left(P), right(P), seg(P);
  for (int k = -K_; k <= K_; ++k) {
    auto bl = lat_->zero_bins();
    auto br = lat_->zero_bins();
    const cplx* vu = &Vt[static_cast<std::size_t>(k + K_) * V.rows];
    const cplx* vd = &Vt[static_cast<std::size_t>(-k + K_) * V.rows];
    const cplx* w = &weights_[static_cast<std::size_t>(k + K_) * R * 4];
    for (int a = 0; a < V.rows; ++a, w += 4) {
      const cplx up = vu[a], down = std::conj(vd[a]);
      bl[binUp_[a]] += up * w[0];
      br[binUp_[a]] += up * w[1];
      bl[binDown_[a]] += down * w[2];
      br[binDown_[a]] += down * w[3];
    }
    lat_->evaluate(bl, left);
    lat_->evaluate(br, right);
    const cplx* sh = &shift_[static_cast<std::size_t>(k + K_) * P];
    for (int i = 0; i < grid_.M; ++i) seg[i] = h * sh[i] * (chi_[i] * left[i] + chi_[i + 1] * right[i]);
    accumulate_segments(grid_, seg, chi_, out.mode(k));
  }
  return out;
}

ModeTrajectory ToneIntegrator::forcing(const ModeAmplitudes& V) const {
  if (V.K != K_) throw std::invalid_argument("forcing: mode box mismatch");
  const int P = grid_.points();
  const double d = lat_->spacing();
  ModeTrajectory out(K_, grid_.M);
  std::vector<cplx> sum(P);
  for (int k = -K_; k <= K_; ++k) {
    const double k2 = double(k) * k;
    auto bins = lat_->zero_bins();
    cplx constant{};
    std::vector<std::pair<double, cplx>> slow;
    auto add = [&](long long m, cplx c) {
      const double omega = double(m) * d - k2;
      if (std::abs(omega) < 1e-6) {
        slow.emplace_back(omega, c);
        return;
      }
      const cplx q = c / cplx(0.0, omega);
      lat_->deposit(bins, m, q);
      constant += q;
    };
    for (int a = 0; a < V.rows; ++a) {
      const double c = tone_coefficient(a);
      const long long m = xi_.cells[a].lattice;
      add(m, c * V(a, k));
      add(-m, c * std::conj(V(a, -k)));
    }
    lat_->evaluate(bins, sum);
    auto mode = out.mode(k);
    const cplx* sh = &shift_[static_cast<std::size_t>(k + K_) * P];
    for (int j = 0; j < P; ++j) {
      cplx v = sh[j] * sum[j] - constant;
      const double t = grid_.t(j);
      for (const auto& [omega, c] : slow) v += c * t * detail::phase_integral(t * omega);
      mode[j] = v;
    }
  }
  return out;
}

ModeTrajectory compute_psi(const ModeTrajectory& noiseModes, const Cutoff& chi) {
  ModeTrajectory twisted = noiseModes;
  const TimeGrid g = noiseModes.grid();
  for (int k = -noiseModes.K(); k <= noiseModes.K(); ++k) {
    auto m = twisted.mode(k);
    for (int j = 0; j < g.points(); ++j) m[j] *= std::polar(1.0, -g.t(j) * double(k) * k);
  }
  return cutoff_integral(twisted, chi);
}

std::vector<cplx> compute_lambda(const ModeTrajectory& psi) {
  auto m = psi.mode(0);
  std::vector<cplx> out(m.size());
  std::transform(m.begin(), m.end(), out.begin(), [](cplx v) { return std::conj(v); });
  return out;
}

std::vector<cplx> lambda_from_sheet(const SpectralNoise& noise, int level, const TimeGrid& grid) {
  if (level < 0 || level > noise.max_level()) throw ConfigError("requested level exceeds the sampled level");
  const int R = noise.rows(level), C = noise.cols(level);
  const double twoPi = 2.0 * std::numbers::pi;
  std::vector<cplx> spaceFactor(C);
  for (int b = 0; b < C; ++b) {
    const double eta = noise.space_tone(b);
    spaceFactor[b] = noise.space_sign(b) * noise.space_cell(b).amplitude() * twoPi * detail::phase_integral(twoPi * eta);
  }
  // B(t, 2pi) = -2 cH Re sum_a alpha_a U_a (e^{it xi_a} - 1)/(i xi_a)
  ToneLattice lat(grid, noise.config().lattice_q());
  auto bins = lat.zero_bins();
  cplx constant{}, linear{};
  for (int a = 0; a < R; ++a) {
    cplx u{};
    for (int b = 0; b < C; ++b) u += spaceFactor[b] * cplx(noise.value(a, b));
    const auto& cell = noise.time_axis().cells[a];
    const cplx c = cell.amplitude() * u;
    if (cell.lattice == 0) {
      linear += c;
    } else {
      const cplx q = c / cplx(0.0, cell.tone);
      lat.deposit(bins, cell.lattice, q);
      constant += q;
    }
  }
  std::vector<cplx> sum(grid.points());
  lat.evaluate(bins, sum);
  const double cH = noise.config().cH;
  std::vector<double> B(grid.points()), dchi(grid.points()), chi(grid.points());
  const Cutoff cut;
  for (int j = 0; j < grid.points(); ++j) {
    const double t = grid.t(j);
    B[j] = -2.0 * cH * (sum[j] - constant + t * linear).real();
    chi[j] = cut(t);
    dchi[j] = cut.derivative(t);
  }
  const double h = grid.step();
  const int o = grid.origin();
  std::vector<double> Q(grid.points());
  for (int j = o + 1; j < grid.points(); ++j) Q[j] = Q[j - 1] + 0.5 * h * (dchi[j - 1] * B[j - 1] + dchi[j] * B[j]);
  for (int j = o - 1; j >= 0; --j) Q[j] = Q[j + 1] - 0.5 * h * (dchi[j] * B[j] + dchi[j + 1] * B[j + 1]);
  std::vector<cplx> out(grid.points());
  for (int j = 0; j < grid.points(); ++j) out[j] = cplx(0.0, 1.0 / twoPi) * chi[j] * (chi[j] * B[j] - Q[j]);
  return out;
}

PsiCovariance::PsiCovariance(const NoiseConfig& cfg, int lo, int hi, int K, const TimeGrid& grid, bool diagonalOnly,
                             double window)
    : K_(K), lo_(lo), hi_(hi), M_(grid.M), diagonal_(diagonalOnly) {
  cfg.validate();
  if (lo < 0 || hi < lo) throw ConfigError("covariance levels must satisfy 0 <= lo <= hi");
  const auto xi = time_frequency_axis(cfg, std::max(hi, 1));
  const auto eta = space_frequency_axis(cfg, std::max(hi, 1));
  const int P = grid.points();
  const int span = std::min(grid.M / 2, static_cast<int>(std::floor(window / grid.step() + 1e-9)));
  const int j0 = grid.origin() - span, j1 = grid.origin() + span;
  const int L = hi - lo + 1;
  const int npairs = diagonal_ ? K + 1 : (K + 1) * (K + 2) / 2;
  time_.assign(static_cast<std::size_t>(L) * npairs * P, cplx{});
  std::vector<cplx> running(static_cast<std::size_t>(npairs) * P);

  ToneLattice lat(grid, cfg.lattice_q());
  const auto chi = Cutoff().sample(grid);
  std::vector<cplx> resp(static_cast<std::size_t>(K + 1) * 2 * P);
  auto snapshot = [&](int level) {
    if (level < lo || level > hi) return;
    std::copy(running.begin(), running.end(), time_.begin() + static_cast<std::ptrdiff_t>(level - lo) * npairs * P);
  };
  int current = 0;
  const int R = xi.prefix(hi);
  for (int a = 0; a < R; ++a) {
    const auto& cell = xi.cells[a];
    while (cell.level > current) snapshot(current++);
    for (int p = 0; p <= K; ++p) {
      tone_response(lat, cell.lattice, double(p) * p, chi, {&resp[(static_cast<std::size_t>(p) * 2) * P], std::size_t(P)}, span);
      tone_response(lat, -cell.lattice, double(p) * p, chi, {&resp[(static_cast<std::size_t>(p) * 2 + 1) * P], std::size_t(P)},
                    span);
    }
    int idx = 0;
    for (int p = 0; p <= K; ++p) {
      for (int q = p; q <= (diagonal_ ? p : K); ++q, ++idx) {
        const cplx* jp = &resp[static_cast<std::size_t>(p) * 2 * P];
        const cplx* jq = &resp[static_cast<std::size_t>(q) * 2 * P];
        cplx* acc = &running[static_cast<std::size_t>(idx) * P];
        for (int j = j0; j <= j1; ++j) acc[j] += cell.mass * (jp[j] * std::conj(jq[j]) + jp[P + j] * std::conj(jq[P + j]));
      }
    }
  }
  while (current <= hi) snapshot(current++);

  const int W = 2 * K + 1;
  space_.assign(static_cast<std::size_t>(L) * W * W, cplx{});
  for (int n = lo; n <= hi; ++n) {
    const int nb = eta.prefix(n);
    cplx* S = &space_[static_cast<std::size_t>(n - lo) * W * W];
    for (int b = 0; b < nb; ++b) {
      const auto& cell = eta.cells[b];
      for (int s : {1, -1}) {
        std::vector<cplx> m(W);
        for (int k = -K; k <= K; ++k) m[k + K] = mode_kernel(k, s * cell.tone);
        for (int x = 0; x < W; ++x) {
          for (int y = 0; y < W; ++y) S[x * W + y] += cell.mass * m[x] * std::conj(m[y]);
        }
      }
    }
    for (auto& v : std::span(S, static_cast<std::size_t>(W) * W)) v *= cfg.cH * cfg.cH;
  }
}

std::size_t PsiCovariance::slot(int level, int a, int b) const {
  const int p = std::abs(a), q = std::abs(b);
  const int P = M_ + 1;
  const int npairs = diagonal_ ? K_ + 1 : (K_ + 1) * (K_ + 2) / 2;
  int idx;
  if (diagonal_) {
    if (p != q) throw std::invalid_argument("PsiCovariance: only diagonal entries were computed");
    idx = p;
  } else {
    const int lo = std::min(p, q), hi = std::max(p, q);
    idx = lo * (K_ + 1) - lo * (lo - 1) / 2 + (hi - lo);
  }
  return (static_cast<std::size_t>(level - lo_) * npairs + idx) * P;
}

cplx PsiCovariance::operator()(int level, int a, int b, int j) const {
  if (level < lo_ || level > hi_ || std::abs(a) > K_ || std::abs(b) > K_) throw std::out_of_range("PsiCovariance index");
  cplx g = time_[slot(level, a, b) + j];
  if (std::abs(a) > std::abs(b)) g = std::conj(g);
  const int W = 2 * K_ + 1;
  return space_[static_cast<std::size_t>(level - lo_) * W * W + (a + K_) * W + (b + K_)] * g;
}

cplx fourier_at(std::span<const cplx> f, const TimeGrid& g, double lambda) {
  cplx acc{};
  for (int j = 0; j < g.points(); ++j) {
    acc += ((j == 0 || j == g.M) ? 0.5 : 1.0) * std::polar(1.0, -lambda * g.t(j)) * f[j];
  }
  return acc * g.step();
}

cplx psi_fourier_covariance(const NoiseConfig& cfg, int level, const TimeGrid& grid, int k, int k2, double lambda,
                            double lambda2) {
  cfg.validate();
  const auto xi = time_frequency_axis(cfg, std::max(level, 1));
  const auto eta = space_frequency_axis(cfg, std::max(level, 1));
  const ToneLattice lat(grid, cfg.lattice_q());
  const auto chi = Cutoff().sample(grid);
  std::vector<cplx> ra(grid.points()), rb(grid.points());
  cplx time{};
  for (int a = 0; a < xi.prefix(level); ++a) {
    const auto& cell = xi.cells[a];
    for (int sgn : {1, -1}) {
      tone_response(lat, sgn * cell.lattice, double(k) * k, chi, ra);
      tone_response(lat, sgn * cell.lattice, double(k2) * k2, chi, rb);
      time += cell.mass * fourier_at(ra, grid, lambda) * std::conj(fourier_at(rb, grid, lambda2));
    }
  }
  cplx space{};
  for (int b = 0; b < eta.prefix(level); ++b) {
    const auto& cell = eta.cells[b];
    for (int sgn : {1, -1}) space += cell.mass * mode_kernel(k, sgn * cell.tone) * std::conj(mode_kernel(k2, sgn * cell.tone));
  }
  return cfg.cH * cfg.cH * time * space;
}

double sigma_exact_cost(const NoiseConfig& cfg, int level, int K, const TimeGrid& grid, double window) {
  const auto xi = time_frequency_axis(cfg, std::max(level, 1));
  const double pairs = 0.5 * (K + 1.0) * (K + 2.0);
  const double frac = std::min(1.0, window / 2.0);
  return 2.0 * pairs * xi.prefix(level) * grid.points() * frac;
}

namespace {

constexpr double kExactBudget = 6e10;

void check_budget(const NoiseConfig& cfg, int level, int K, const TimeGrid& grid, double window) {
  if (sigma_exact_cost(cfg, level, K, grid, window) <= kExactBudget) return;
  int k = K;
  while (k > 1 && sigma_exact_cost(cfg, level, k, grid, window) > kExactBudget) k = k * 3 / 4;
  throw ConfigError("exact sigma over budget at K = " + std::to_string(K) + "; try K <= " + std::to_string(k) +
                    " or the Monte Carlo route");
}

ModeTrajectory sigma_from_covariance(const PsiCovariance& cov, int level, const TimeGrid& grid) {
  const int K = cov.K();
  ModeTrajectory out(K, grid.M);
  for (int j = 0; j < grid.points(); ++j) {
    const double t = grid.t(j);
    for (int k = -K; k <= K; ++k) {
      cplx s{};
      for (int k1 = std::max(-K, -K - k); k1 <= std::min(K, K - k); ++k1) {
        if (k1 == 0) continue;
        const double phase = t * (double(k + k1) * (k + k1) - double(k1) * k1);
        s += std::polar(1.0, phase) * cov(level, k + k1, k1, j);
      }
      out(k, j) = s;
    }
  }
  return out;
}

}  // namespace

std::vector<ModeTrajectory> exact_sigma_levels(const NoiseConfig& cfg, int lo, int hi, int K, const TimeGrid& grid,
                                               double window) {
  check_budget(cfg, hi, K, grid, window);
  PsiCovariance cov(cfg, lo, hi, K, grid, false, window);
  std::vector<ModeTrajectory> out;
  for (int n = lo; n <= hi; ++n) out.push_back(sigma_from_covariance(cov, n, grid));
  return out;
}

std::vector<std::vector<double>> exact_sigma_zero_levels(const NoiseConfig& cfg, int lo, int hi, int K,
                                                         const TimeGrid& grid, double window) {
  PsiCovariance cov(cfg, lo, hi, K, grid, true, window);
  std::vector<std::vector<double>> out;
  for (int n = lo; n <= hi; ++n) {
    std::vector<double> s(grid.points());
    for (int j = 0; j < grid.points(); ++j) {
      double v = 0.0;
      for (int k1 = -K; k1 <= K; ++k1) {
        if (k1 != 0) v += cov(n, k1, k1, j).real();
      }
      s[j] = v;
    }
    out.push_back(std::move(s));
  }
  return out;
}

SigmaEstimate compute_sigma(const NoiseConfig& cfg, int level, int K, const TimeGrid& grid, SigmaMethod method,
                            int samples, std::uint64_t seed) {
  SigmaEstimate est;
  if (method == SigmaMethod::Exact) {
    est.mean = exact_sigma_levels(cfg, level, level, K, grid).front();
    est.stderr_ = ModeTrajectory(K, grid.M);
    return est;
  }
  if (samples < 2) throw ConfigError("Monte Carlo sigma needs at least 2 samples");
  ToneIntegrator integ(cfg, std::max(level, 1), K, grid);
  const std::size_t N = static_cast<std::size_t>(2 * K + 1) * grid.points();
  std::vector<double> sre(N), sim(N), qre(N), qim(N);
  std::vector<cplx> rot(N);
  for (int k = -K; k <= K; ++k) {
    for (int j = 0; j < grid.points(); ++j) rot[static_cast<std::size_t>(k + K) * grid.points() + j] = std::polar(1.0, grid.t(j) * double(k) * k);
  }
  for (int s = 0; s < samples; ++s) {
    const auto noise = sample_spectral_noise(cfg, std::max(level, 1), realisation_seed(seed, s));
    const auto psi = integ.psi(project_modes(noise, level, K));
    const auto m = twisted_product(psi, psi, PairSet::SkipZero);
    for (std::size_t i = 0; i < N; ++i) {
      const cplx v = rot[i] * m.raw()[i];
      sre[i] += v.real();
      sim[i] += v.imag();
      qre[i] += v.real() * v.real();
      qim[i] += v.imag() * v.imag();
    }
  }
  est.mean = ModeTrajectory(K, grid.M);
  est.stderr_ = ModeTrajectory(K, grid.M);
  est.samples = samples;
  const double n = samples;
  for (std::size_t i = 0; i < N; ++i) {
    const double mr = sre[i] / n, mi = sim[i] / n;
    const double vr = std::max(0.0, (qre[i] - n * mr * mr) / (n - 1.0));
    const double vi = std::max(0.0, (qim[i] - n * mi * mi) / (n - 1.0));
    est.mean.raw()[i] = {mr, mi};
    est.stderr_.raw()[i] = {std::sqrt(vr / n), std::sqrt(vi / n)};
  }
  return est;
}

double pair_sigma(std::span<const double> sigmaZero, const TimeGrid& grid, const std::function<double(double)>& phi) {
  double s = 0.0;
  for (int j = 0; j < grid.points(); ++j) {
    const double w = (j == 0 || j == grid.M) ? 0.5 : 1.0;
    s += w * phi(grid.t(j)) * sigmaZero[j];
  }
  return s * grid.step();
}

double pair_sigma(const ModeTrajectory& sigma, const std::function<double(double)>& phi) {
  std::vector<double> zero(sigma.points());
  auto m = sigma.mode(0);
  for (int j = 0; j < sigma.points(); ++j) zero[j] = m[j].real();
  return pair_sigma(zero, sigma.grid(), phi);
}

ModeTrajectory sigma_counterterm(const ModeTrajectory& sigma, const Cutoff& chi) {
  ModeTrajectory twisted = sigma;
  const TimeGrid g = sigma.grid();
  for (int k = -sigma.K(); k <= sigma.K(); ++k) {
    auto m = twisted.mode(k);
    for (int j = 0; j < g.points(); ++j) m[j] *= std::polar(1.0, -g.t(j) * double(k) * k);
  }
  return cutoff_integral(twisted, chi);
}

ModeTrajectory compute_centered_square(const ModeTrajectory& psi, const ModeTrajectory& counterterm, const Cutoff& chi) {
  require_same_shape(psi, counterterm, "compute_centered_square");
  return cutoff_integral(twisted_product(psi, psi, PairSet::SkipZero), chi) - counterterm;
}

ModeTrajectory product_operator(const ModeTrajectory& psi, const ModeTrajectory& z, ProductSide side, const Cutoff& chi) {
  require_same_shape(psi, z, "product_operator");
  return side == ProductSide::Plus ? cutoff_integral(twisted_product(z, psi), chi)
                                   : cutoff_integral(twisted_product(psi, z), chi);
}

ProductParts product_parts(const ModeTrajectory& psi, const ModeTrajectory& z, const Cutoff& chi) {
  require_same_shape(psi, z, "product_parts");
  const int K = z.K();
  const TimeGrid g = z.grid();
  ModeTrajectory sharp(K, g.M), flat(K, g.M), tilde(K, g.M);
  std::vector<cplx> powers(static_cast<std::size_t>(4 * K * K + 1));
  const int shift = 2 * K * K;
  for (int j = 0; j < g.points(); ++j) {
    // powers[shift + r] = e^{i t r}
    const cplx base = std::polar(1.0, g.t(j));
    powers[shift] = 1.0;
    for (int r = 1; r <= shift; ++r) {
      if (r % 64 == 0) {
        powers[shift + r] = std::polar(1.0, g.t(j) * r);
      } else {
        powers[shift + r] = powers[shift + r - 1] * base;
      }
      powers[shift - r] = std::conj(powers[shift + r]);
    }
    cplx s{};
    for (int k1 = -K; k1 <= K; ++k1) s += z(k1, j) * std::conj(psi(k1, j));
    sharp(0, j) = s;
    for (int k = -K; k <= K; ++k) {
      if (k == 0) continue;
      flat(k, j) = z(k, j) * std::conj(psi(0, j));
      cplx r{};
      for (int k1 = std::max(-K, -K - k); k1 <= std::min(K, K - k); ++k1) {
        if (k1 == 0) continue;
        r += powers[shift + 2 * k * k1] * z(k + k1, j) * std::conj(psi(k1, j));
      }
      tilde(k, j) = r;
    }
  }
  return {cutoff_integral(sharp, chi), cutoff_integral(flat, chi), cutoff_integral(tilde, chi)};
}

}  // namespace fracnls

#include "fracnls/noise.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

#include "detail.hpp"
#include "fracnls/tones.hpp"

namespace fracnls {

static_assert(std::endian::native == std::endian::little, "binary noise format assumes a little-endian host");

NoiseConfig NoiseConfig::focused(const HurstPair& h, int K) {
  NoiseConfig c;
  c.hurst = h;
  c.xiFocus = double(K + 8) * double(K + 8);
  c.etaFocus = double(K + 16);
  return c;
}

int NoiseConfig::lattice_q() const { return std::max(1, int(std::lround(xiDensity * std::numbers::pi / 2.0))); }

double NoiseConfig::lattice_step() const { return std::numbers::pi / (2.0 * lattice_q()); }

void NoiseConfig::validate() const {
  hurst.validate();
  if (!(cH > 0)) throw ConfigError("noise normalisation cH must be positive");
  if (!(xiDensity > 0 && etaDensity > 0)) throw ConfigError("frequency resolutions must be positive");
  if (!(xiFocus > 0 && etaFocus > 0 && growth > 0)) throw ConfigError("frequency grid extents must be positive");
}

int FrequencyAxis::prefix(int level) const {
  int n = 0;
  while (n < int(cells.size()) && cells[n].level <= level) ++n;
  return n;
}

namespace {

// int_lo^hi f^{p-1} df with p = 2 - 2H, stable for narrow cells far from 0.
double cell_mass(double lo, double hi, double H) {
  const double p = 2.0 - 2.0 * H;
  if (lo <= 0.0) return std::pow(hi, p) / p;
  return std::pow(lo, p) * std::expm1(p * std::log1p((hi - lo) / lo)) / p;
}

int level_of(double hi, double base, int nMax) {
  double box = 1.0;
  for (int n = 0; n <= nMax; ++n, box *= base) {
    if (hi <= box * (1.0 + 1e-12)) return n;
  }
  return nMax + 1;
}

// Splits [lo, hi] at the powers of base and appends the pieces, dropping anything past the outer box.
template <class ToneOf>
void push_split(std::vector<FrequencyCell>& out, double lo, double hi, double base, int nMax, double H, ToneOf tone_of) {
  std::vector<double> edges{lo};
  double box = 1.0;
  for (int n = 0; n <= nMax; ++n, box *= base) {
    if (box > lo && box < hi) edges.push_back(box);
  }
  edges.push_back(hi);
  const double outer = std::pow(base, nMax);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = std::min(edges[i + 1], outer);
    if (b <= a) break;
    FrequencyCell c;
    c.lo = a;
    c.hi = b;
    tone_of(c);
    c.mass = cell_mass(a, b, H);
    c.level = level_of(b, base, nMax);
    out.push_back(c);
  }
}

}  // namespace

FrequencyAxis time_frequency_axis(const NoiseConfig& cfg, int nMax) {
  const double d = cfg.lattice_step();
  const double outer = std::pow(4.0, nMax);
  const double H = cfg.hurst.h0;
  FrequencyAxis axis;
  auto snap = [d](FrequencyCell& c) {
    c.lattice = std::llround(0.5 * (c.lo + c.hi) / d);
    c.tone = double(c.lattice) * d;
  };
  // Edges tracked as integer multiples of d/2 so that coarse cells stay centred on lattice points.
  long long half = 0;
  while (half * 0.5 * d < outer) {
    long long next;
    if (half == 0) {
      next = 1;
    } else {
      const double e = half * 0.5 * d;
      long long j = 0;
      if (e > cfg.xiFocus) j = static_cast<long long>(std::floor(cfg.growth * (e - cfg.xiFocus) / d / 2.0));
      next = half + 2 * (2 * j + 1);
    }
    const double lo = half * 0.5 * d, hi = next * 0.5 * d;
    push_split(axis.cells, lo, hi, 4.0, nMax, H, snap);
    half = next;
  }
  return axis;
}

FrequencyAxis space_frequency_axis(const NoiseConfig& cfg, int nMax) {
  const double d = 1.0 / cfg.etaDensity;
  const double outer = std::pow(2.0, nMax);
  const double H = cfg.hurst.h1;
  FrequencyAxis axis;
  auto mid = [](FrequencyCell& c) { c.tone = 0.5 * (c.lo + c.hi); };
  double e = 0.0;
  long long i = 0;
  while (e < outer) {
    double next;
    if (e < cfg.etaFocus) {
      next = double(++i) * d;
    } else {
      next = e + std::max(d, cfg.growth * (e - cfg.etaFocus));
    }
    push_split(axis.cells, e, next, 2.0, nMax, H, mid);
    e = next;
  }
  return axis;
}

SpectralNoise::SpectralNoise(NoiseConfig cfg, int nMax, std::uint64_t seed, std::vector<std::complex<float>> values)
    : cfg_(cfg), nMax_(nMax), seed_(seed), xi_(time_frequency_axis(cfg, nMax)), eta_(space_frequency_axis(cfg, nMax)),
      w_(std::move(values)) {
  if (w_.size() != static_cast<std::size_t>(rows()) * cols()) throw ConfigError("noise payload does not match its grid");
}

double SpectralNoise::space_tone(int col) const { return space_sign(col) * space_cell(col).tone; }

SpectralNoise SpectralNoise::truncated(int level) const {
  if (level > nMax_ || level < 0) throw ConfigError("truncation level exceeds the sampled level");
  const int r = rows(level), c = cols(level);
  std::vector<std::complex<float>> v(static_cast<std::size_t>(r) * c);
  for (int a = 0; a < r; ++a) {
    for (int b = 0; b < c; ++b) v[static_cast<std::size_t>(a) * c + b] = value(a, b);
  }
  return SpectralNoise(cfg_, level, seed_, std::move(v));
}

SpectralNoise sample_spectral_noise(const NoiseConfig& cfg, int nMax, std::uint64_t seed) {
  cfg.validate();
  if (nMax < 1) throw ConfigError("noise level must be at least 1");
  const FrequencyAxis xi = time_frequency_axis(cfg, nMax);
  const FrequencyAxis eta = space_frequency_axis(cfg, nMax);
  if (xi.prefix(1) < 4 || eta.prefix(1) < 2) throw ConfigError("frequency grid too coarse to resolve the level-1 box");
  const int R = int(xi.cells.size());
  const int C = 2 * int(eta.cells.size());
  std::vector<std::complex<float>> w(static_cast<std::size_t>(R) * C);
  std::vector<double> colScale(C);
  for (int b = 0; b < C; ++b) colScale[b] = std::sqrt(0.5 * eta.cells[b / 2].width());
  for (int a = 0; a < R; ++a) {
    // Fresh stream and distribution per row: a row's draws do not depend on the number of rows or columns.
    auto gen = detail::make_stream(seed, std::uint64_t(a));
    boost::random::normal_distribution<double> normal;  // ziggurat
    const double rowScale = std::sqrt(xi.cells[a].width());
    for (int b = 0; b < C; ++b) {
      const double s = rowScale * colScale[b];
      const double re = normal(gen);
      const double im = normal(gen);
      w[static_cast<std::size_t>(a) * C + b] = {float(s * re), float(s * im)};
    }
  }
  return SpectralNoise(cfg, nMax, seed, std::move(w));
}

std::uint64_t realisation_seed(std::uint64_t seed, std::uint64_t index) {
  auto gen = detail::make_stream(~seed, index);
  return gen();
}

namespace {

void require_level(const SpectralNoise& noise, int level) {
  if (level < 0 || level > noise.max_level()) throw ConfigError("requested level exceeds the sampled level");
}

// -2 cH Re sum_a alpha_a T_a sum_b sign_b beta_b X_b w_ab
template <class TimeFactor, class SpaceFactor>
double half_domain_sum(const SpectralNoise& noise, int level, TimeFactor tf, SpaceFactor sf) {
  require_level(noise, level);
  const int R = noise.rows(level), C = noise.cols(level);
  std::vector<cplx> space(C);
  for (int b = 0; b < C; ++b) {
    const auto& cell = noise.space_cell(b);
    space[b] = noise.space_sign(b) * cell.amplitude() * sf(noise.space_tone(b));
  }
  cplx total{};
  for (int a = 0; a < R; ++a) {
    cplx u{};
    for (int b = 0; b < C; ++b) u += space[b] * cplx(noise.value(a, b));
    const auto& cell = noise.time_axis().cells[a];
    total += cell.amplitude() * tf(cell.tone) * u;
  }
  return -2.0 * noise.config().cH * total.real();
}

}  // namespace

double eval_sheet(const SpectralNoise& noise, int level, double t, double x) {
  return half_domain_sum(
      noise, level, [t](double xi) { return t * detail::phase_integral(t * xi); },
      [x](double eta) { return x * detail::phase_integral(x * eta); });
}

double eval_noise_field(const SpectralNoise& noise, int level, double t, double x) {
  return half_domain_sum(
      noise, level, [t](double xi) { return std::polar(1.0, t * xi); },
      [x](double eta) { return std::polar(1.0, x * eta); });
}

cplx mode_kernel(int k, double eta) { return detail::phase_integral(2.0 * std::numbers::pi * (eta - k)); }

std::vector<cplx> mode_amplitudes(const SpectralNoise& noise, int level, int K) {
  require_level(noise, level);
  const int R = noise.rows(level), C = noise.cols(level), W = 2 * K + 1;
  std::vector<cplx> kernel(static_cast<std::size_t>(C) * W);
  for (int b = 0; b < C; ++b) {
    const double weight = noise.space_sign(b) * noise.space_cell(b).amplitude();
    for (int k = -K; k <= K; ++k) kernel[static_cast<std::size_t>(b) * W + k + K] = weight * mode_kernel(k, noise.space_tone(b));
  }
  std::vector<cplx> V(static_cast<std::size_t>(R) * W);
  for (int a = 0; a < R; ++a) {
    for (int b = 0; b < C; ++b) {
      const cplx w(noise.value(a, b));
      for (int i = 0; i < W; ++i) V[static_cast<std::size_t>(a) * W + i] += kernel[static_cast<std::size_t>(b) * W + i] * w;
    }
  }
  return V;
}

ModeTrajectory eval_noise_modes(const SpectralNoise& noise, int level, int K, const TimeGrid& grid) {
  require_level(noise, level);
  const auto V = mode_amplitudes(noise, level, K);
  const int R = noise.rows(level), W = 2 * K + 1;
  ToneLattice lat(grid, noise.config().lattice_q());
  ModeTrajectory out(K, grid.M);
  const double cH = noise.config().cH;
  for (int k = -K; k <= K; ++k) {
    auto bins = lat.zero_bins();
    for (int a = 0; a < R; ++a) {
      const auto& cell = noise.time_axis().cells[a];
      const double alpha = -cH * cell.amplitude();
      lat.deposit(bins, cell.lattice, alpha * V[static_cast<std::size_t>(a) * W + k + K]);
      lat.deposit(bins, -cell.lattice, alpha * std::conj(V[static_cast<std::size_t>(a) * W - k + K]));
    }
    lat.evaluate(bins, out.mode(k));
  }
  return out;
}

double time_covariance_factor(const FrequencyAxis& axis, int level, double lag) {
  const int n = axis.prefix(level);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += axis.cells[i].mass * 2.0 * std::cos(lag * axis.cells[i].tone);
  return s;
}

double space_covariance_factor(const FrequencyAxis& axis, int level, double lag) {
  return time_covariance_factor(axis, level, lag);
}

double covariance_noise_exact(const NoiseConfig& cfg, int level, double t, double x, double t2, double x2) {
  cfg.validate();
  const int nMax = std::max(level, 1);
  const auto xi = time_frequency_axis(cfg, nMax);
  const auto eta = space_frequency_axis(cfg, nMax);
  return cfg.cH * cfg.cH * time_covariance_factor(xi, level, t - t2) * space_covariance_factor(eta, level, x - x2);
}

double covariance_increment_exact(const NoiseConfig& cfg, int level, double t, double x, double t2, double x2) {
  cfg.validate();
  const auto xi = time_frequency_axis(cfg, level + 1);
  const auto eta = space_frequency_axis(cfg, level + 1);
  const double c2 = cfg.cH * cfg.cH;
  const double hi = time_covariance_factor(xi, level + 1, t - t2) * space_covariance_factor(eta, level + 1, x - x2);
  const double lo = time_covariance_factor(xi, level, t - t2) * space_covariance_factor(eta, level, x - x2);
  return c2 * (hi - lo);
}

double singular_pair_integral(double nu, double a, double b) {
  using namespace boost::math::quadrature;
  auto half = [nu](double p, double q) {
    return [nu, p, q](double f) { return std::pow(f, -nu) / (bracket(f - p) * bracket(f - q)); };
  };
  const auto g1 = half(a, b), g2 = half(-a, -b);
  auto g = [&](double f) { return g1(f) + g2(f); };
  tanh_sinh<double> ts;
  double total = ts.integrate(g, 0.0, 1.0);
  std::vector<double> cuts{1.0};
  for (double p : {std::abs(a), std::abs(b)}) {
    if (p > 1.0) cuts.push_back(p);
  }
  std::sort(cuts.begin(), cuts.end());
  const double far = cuts.back() + 16.0;
  cuts.push_back(far);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) total += gauss_kronrod<double, 31>::integrate(g, cuts[i], cuts[i + 1], 15, 1e-12);
  }
  exp_sinh<double> es;
  total += es.integrate([&](double f) { return g(f + far); }, 0.0, std::numeric_limits<double>::infinity());
  return total;
}

BoundKernels bound_kernels(double H, int k, int k2, double lambda, double lambda2) {
  if (!(H > 0.5 && H < 1.0)) throw ConfigError("bound kernels need H in (1/2, 1)");
  const double nu = 2.0 * H - 1.0;
  const double kk = double(k) * k, kk2 = double(k2) * k2;
  BoundKernels r;
  r.gamma = singular_pair_integral(nu, kk - lambda, kk2 - lambda2);
  r.lambda = singular_pair_integral(nu, k, k2);
  r.gammaTilde = singular_pair_integral(nu, kk - lambda, lambda2 - kk2);
  r.lambdaTilde = singular_pair_integral(nu, k, -k2);
  return r;
}

namespace {

constexpr char kMagic[4] = {'F', 'N', 'L', 'S'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("truncated noise file");
  return v;
}

}  // namespace

void write_noise(const SpectralNoise& noise, std::ostream& out) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, std::uint32_t(noise.max_level()));
  put<std::uint32_t>(out, std::uint32_t(noise.rows()));
  put<std::uint32_t>(out, std::uint32_t(noise.cols()));
  put<std::uint64_t>(out, noise.seed());
  const auto& c = noise.config();
  for (double v : {c.hurst.h0, c.hurst.h1, c.cH, c.xiDensity, c.etaDensity, c.xiFocus, c.etaFocus, c.growth}) put(out, v);
  out.write(reinterpret_cast<const char*>(noise.values().data()),
            std::streamsize(noise.values().size() * sizeof(std::complex<float>)));
  if (!out) throw NumericalError("failed to write noise realisation");
}

void write_noise(const SpectralNoise& noise, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  write_noise(noise, f);
}

SpectralNoise read_noise(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not a noise realisation file");
  if (get<std::uint32_t>(in) != kVersion) throw ConfigError("unsupported noise file version");
  const int nMax = int(get<std::uint32_t>(in));
  const auto R = get<std::uint32_t>(in);
  const auto C = get<std::uint32_t>(in);
  const auto seed = get<std::uint64_t>(in);
  NoiseConfig c;
  c.hurst.h0 = get<double>(in);
  c.hurst.h1 = get<double>(in);
  c.cH = get<double>(in);
  c.xiDensity = get<double>(in);
  c.etaDensity = get<double>(in);
  c.xiFocus = get<double>(in);
  c.etaFocus = get<double>(in);
  c.growth = get<double>(in);
  std::vector<std::complex<float>> w(std::size_t(R) * C);
  in.read(reinterpret_cast<char*>(w.data()), std::streamsize(w.size() * sizeof(std::complex<float>)));
  if (!in) throw ConfigError("truncated noise payload");
  SpectralNoise noise(c, nMax, seed, std::move(w));
  if (std::uint32_t(noise.rows()) != R || std::uint32_t(noise.cols()) != C) throw ConfigError("noise grid descriptor mismatch");
  return noise;
}

SpectralNoise read_noise(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  return read_noise(f);
}

}  // namespace fracnls

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <random>

namespace fracnls::detail {

// (e^{ix} - 1)/(ix), with its Taylor series near 0.
inline std::complex<double> phase_integral(double x) {
  if (std::abs(x) < 1e-4) return {1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0};
  return (std::polar(1.0, x) - 1.0) / std::complex<double>(0.0, x);
}

// Independent generator for (seed, index); seed_seq spreads both words over the state.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(index), std::uint32_t(index >> 32)};
  return std::mt19937_64(seq);
}

// FFTW planning is not thread-safe; every planner call takes this lock.
std::mutex& fftw_planner_mutex();

}  // namespace fracnls::detail

#pragma once

#include "fracnls/cutoff.hpp"
#include "fracnls/types.hpp"

namespace fracnls {

// Resonance function 2 k k1 of the quadratic interaction.
long long resonance(long long k, long long k1);

enum class PairSet { All, SkipZero };

// M(v,w)_k(t) = sum_{k1} e^{it 2kk1} v_{k+k1}(t) conj(w_{k1}(t)), truncated to the mode box.
// PairSet::SkipZero drops the k1 = 0 pairing.
ModeTrajectory twisted_product(const ModeTrajectory& v, const ModeTrajectory& w,
                               PairSet pairs = PairSet::All);

// Same sum at a single time t for mode vectors indexed k + K.
std::vector<cplx> twisted_product_at(std::span<const cplx> v, std::span<const cplx> w, int K, double t,
                                     PairSet pairs = PairSet::All);

// -i chi(t) int_0^t chi(s) v(s) ds with the composite trapezoid rule from the grid origin.
ModeTrajectory cutoff_integral(const ModeTrajectory& v, const Cutoff& chi = Cutoff());

// Scalar version on one time series.
std::vector<cplx> cutoff_integral(std::span<const cplx> v, const TimeGrid& g, const Cutoff& chi = Cutoff());

// Pointwise multiplication by the rescaled cutoff chi(t/tau).
ModeTrajectory localize(const ModeTrajectory& z, double tau);

// int_0^{2 tau} dt e^{-i lambda t} chi(t/tau) chi(t) int_0^t ds e^{i s lambda1} chi(s); zero at tau = 0.
cplx cutoff_integral_kernel(double lambda, double lambda1, double tau);

}  // namespace fracnls

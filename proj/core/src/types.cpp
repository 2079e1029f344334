#include "fracnls/types.hpp"

#include <algorithm>
#include <cmath>

namespace fracnls {

TimeGrid::TimeGrid(int steps) : M(steps) {
  if (steps < 4 || steps % 2 != 0) throw ConfigError("time grid needs an even number of steps >= 4");
}

ModeTrajectory::ModeTrajectory(int K, int M) : K_(K), M_(M) {
  if (K < 0 || M < 4 || M % 2 != 0) throw ConfigError("mode trajectory needs K >= 0 and even M >= 4");
  data_.assign(static_cast<std::size_t>(2 * K + 1) * static_cast<std::size_t>(M + 1), cplx{});
}

void require_same_shape(const ModeTrajectory& a, const ModeTrajectory& b, const char* where) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(where) + ": trajectories differ in (K, M)");
  }
}

ModeTrajectory& ModeTrajectory::operator+=(const ModeTrajectory& o) {
  require_same_shape(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

ModeTrajectory& ModeTrajectory::operator-=(const ModeTrajectory& o) {
  require_same_shape(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

ModeTrajectory& ModeTrajectory::operator*=(cplx a) {
  for (auto& x : data_) x *= a;
  return *this;
}

ModeTrajectory operator+(ModeTrajectory a, const ModeTrajectory& b) { return a += b; }
ModeTrajectory operator-(ModeTrajectory a, const ModeTrajectory& b) { return a -= b; }
ModeTrajectory operator*(cplx s, ModeTrajectory a) { return a *= s; }

double sup_distance(const ModeTrajectory& a, const ModeTrajectory& b) {
  require_same_shape(a, b, "sup_distance");
  double m = 0.0;
  for (std::size_t i = 0; i < a.raw().size(); ++i) m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
  return m;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Function: return "function";
    case Regime::RoughRenormalizable: return "rough-renormalizable";
    case Regime::RoughUnhandled: return "rough-unhandled";
    case Regime::OutOfScope: return "out-of-scope";
  }
  return "out-of-scope";
}

double HurstPair::kappa() const { return std::min(h0 - 0.5, h1 - 0.5); }

Regime HurstPair::regime() const {
  const double s = scaling();
  if (s > 2.0) return Regime::Function;
  if (s > 1.75 && s < 2.0) return Regime::RoughRenormalizable;
  if (s > 1.5 && s <= 1.75) return Regime::RoughUnhandled;
  return Regime::OutOfScope;
}

void HurstPair::validate() const {
  if (!(h0 > 0.5 && h0 < 1.0 && h1 > 0.5 && h1 < 1.0)) {
    throw ConfigError("Hurst indices must lie in (1/2, 1)");
  }
}

}  // namespace fracnls

#include "fracnls/cutoff.hpp"

#include <cmath>

namespace fracnls {

Cutoff::Cutoff(double scale) : scale_(scale) {
  if (!(scale > 0.0)) throw ConfigError("cutoff scale must be positive");
}

double Cutoff::unit(double t) {
  const double a = std::abs(t);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  const double u = a - 1.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

double Cutoff::unit_derivative(double t) {
  const double a = std::abs(t);
  if (a <= 1.0 || a >= 2.0) return 0.0;
  const double u = a - 1.0;
  const double q = 1.0 - u * u;
  const double d = unit(t) * (-2.0 * u / (q * q));
  return t > 0 ? d : -d;
}

double Cutoff::operator()(double t) const { return unit(t / scale_); }

double Cutoff::derivative(double t) const { return unit_derivative(t / scale_) / scale_; }

std::vector<double> Cutoff::sample(const TimeGrid& g) const {
  std::vector<double> out(g.points());
  for (int j = 0; j < g.points(); ++j) out[j] = (*this)(g.t(j));
  return out;
}

}  // namespace fracnls

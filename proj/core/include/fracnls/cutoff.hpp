#pragma once

#include <vector>

#include "fracnls/types.hpp"

namespace fracnls {

// Smooth even bump: 1 on [-1,1], exp(1 - 1/(1-(|t|-1)^2)) on 1<|t|<2, 0 beyond.
// A non-unit scale gives the rescaled cutoff t -> chi(t/scale).
class Cutoff {
 public:
  explicit Cutoff(double scale = 1.0);

  double scale() const { return scale_; }
  double operator()(double t) const;
  double derivative(double t) const;
  std::vector<double> sample(const TimeGrid& g) const;

  static double unit(double t);
  static double unit_derivative(double t);

 private:
  double scale_;
};

}  // namespace fracnls

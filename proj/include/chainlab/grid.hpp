#pragma once

#include <stdexcept>

namespace chainlab {

// Uniform 1-d grid of cell centres.
struct Grid1D {
  double x0 = 0.0;
  double dx = 1.0;
  int count = 0;

  double x(int i) const { return x0 + dx * i; }
  double xmin() const { return x0; }
  double xmax() const { return x(count - 1); }
  double width() const { return dx * (count - 1); }

  static Grid1D linspace(double lo, double hi, int count) {
    if (count < 2 || !(hi > lo))
      throw std::invalid_argument("Grid1D: need count >= 2 and hi > lo");
    return Grid1D{lo, (hi - lo) / (count - 1), count};
  }
};

} // namespace chainlab

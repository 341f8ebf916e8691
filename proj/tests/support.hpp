#pragma once

// Hand-rolled generators for property tests. Deliberately independent of the
// library's counter-based generator.

#include <random>
#include <vector>

#include "rfi/geometry.hpp"

namespace rfi::testing {

class Gen {
public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>()(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

  Vector vector(Eigen::Index n, double scale = 1.0) {
    Vector v(n);
    for (auto& x : v) x = scale * normal();
    return v;
  }

  Matrix symmetric(Eigen::Index n, double scale = 1.0) {
    Matrix M(n, n);
    for (auto& x : M.reshaped()) x = scale * normal();
    return 0.5 * (M + M.transpose());
  }

  SpiderPoint spider(int legs, double max_radius) {
    // a quarter of the draws land exactly on the origin
    if (uniform() < 0.25) return {};
    return SpiderPoint(integer(0, legs - 1), uniform(0.0, max_radius));
  }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
};

} // namespace rfi::testing

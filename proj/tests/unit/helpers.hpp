#pragma once

#include "core/common.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace sgarch::testing {

inline std::vector<double> normal_draws(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace sgarch::testing

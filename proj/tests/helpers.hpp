#pragma once

#include <random>
#include <vector>

#include "telsim/fock.hpp"
#include "telsim/random.hpp"

namespace telsim::test {

inline double distance(const FockVector& a, const FockVector& b) { return norm(a - b); }

// Random finite coherent combination with moderately sized factors.
inline FockVector random_span_vector(int modes, int ambient, std::mt19937_64& gen,
                                     int max_terms = 3, double scale = 0.8) {
  FockVector v(modes, ambient);
  const int terms = 1 + static_cast<int>(gen() % max_terms);
  for (int t = 0; t < terms; ++t) {
    std::vector<ModeVector> factors;
    factors.reserve(modes);
    for (int q = 0; q < modes; ++q)
      factors.push_back(rng::random_mode_vector(ambient, gen, scale));
    v.add_term(rng::complex_gaussian(gen), std::move(factors));
  }
  return v;
}

}  // namespace telsim::test

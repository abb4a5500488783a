#pragma once

// Column-count reduction that preserves constrained factorization cost up to
// (1+eps) factors: a composed left sketch S with sprime = ceil(c1 k
// ln(k+1)/eps) rows, a CountSketch T1 with ceil(c2 sprime^2/eps^2) columns
// (used only while that width is below d; at or past d the column sketch is
// the identity), and T2 the top-sprime right singular vectors of S A T1.
// The reduced instance is A' = A T1 T2 with sprime columns; a dictionary D'
// solved in reduced space lifts back to d columns through
// D = D' pinv(S A T1 T2) (S A).
//
// Degenerate regimes fall back gracefully: sprime >= d keeps A unchanged
// (lift is the identity), and a rank-deficient sketched product switches to
// an exact truncated SVD of A (lift multiplies by the transposed basis).

#include "sketchfactor/matrix.hpp"

#include <cstdint>

namespace sketchfactor {

enum class ReducePath { Sketched, SvdFallback, PassThrough };

struct ReducedInstance {
  Matrix aprime;  // n x sprime
  Matrix sat;     // sprime x sprime; identity on the fallback paths
  Matrix sa;      // sprime x d
  Matrix t2;      // orthonormal columns; rightmost reduction factor
  int sprime = 0;
  std::uint64_t seed = 0;
  ReducePath path = ReducePath::Sketched;
};

struct ReduceOptions {
  double c1 = 1.0;  // multiplier in sprime = ceil(c1 * k * ln(k+1) / eps)
  double c2 = 1.0;  // multiplier in the T1 width ceil(c2 * sprime^2 / eps^2)
};

ReducedInstance reduce(const DesignMatrix& a, int k, double eps,
                       std::uint64_t seed, const ReduceOptions& opts = {});

// D' (k x sprime) -> k x d dictionary in the original coordinates.
Matrix lift_dictionary(const ReducedInstance& r, const Matrix& dprime);

}  // namespace sketchfactor

#pragma once

// Row sampling that stands in for the full matrix inside enumeration loops.
// A weight multiplies the squared residual of its row, so for any candidate
// dictionary the weighted cost sum_j w_j * rowcost(row_j) is an unbiased
// estimator of the full cost when rows are drawn i.i.d. with probability q
// and weighted 1/(m q).
//
// lightweight_coreset_kmeans uses the mean-based mixture
// q_i = 1/(2n) + dist(a_i, mean)^2 / (2 sum_j dist(a_j, mean)^2).
// dictionary_coreset importance-samples proportionally to the row
// sensitivity upper bounds sigma_i from the solver module (Lloyd bicriteria
// residual share plus inverse cluster size, capped at 1).
// Requesting m == n switches both to the exhaustive mode: every row once
// with weight 1.

#include "sketchfactor/matrix.hpp"

#include <cstdint>
#include <vector>

namespace sketchfactor {

struct WeightedInstance {
  Matrix rows;     // m x d
  Vector weights;  // m positive entries
  std::vector<int> source_index;  // row index in the source matrix
};

WeightedInstance lightweight_coreset_kmeans(const DesignMatrix& a, int m,
                                            std::uint64_t seed);

WeightedInstance dictionary_coreset(const DesignMatrix& a, int k, int r, int m,
                                    std::uint64_t seed);

// Largest relative gap between weighted and true optimal-assignment cost over
// the candidate dictionaries, under the given constraint. A candidate whose
// true cost is zero while the weighted cost is not yields +infinity.
double coreset_error(const WeightedInstance& w, const DesignMatrix& a,
                     const std::vector<Matrix>& candidates,
                     const Constraint& c);

// Weighted optimal-assignment cost of one candidate against the coreset.
double weighted_candidate_cost(const WeightedInstance& w, const Matrix& dict,
                               const Constraint& c);

// True optimal-assignment cost of one candidate against the full matrix.
double true_candidate_cost(const DesignMatrix& a, const Matrix& dict,
                           const Constraint& c);

}  // namespace sketchfactor

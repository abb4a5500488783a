#include "sketchfactor/coreset.hpp"

#include "sketchfactor/rng.hpp"
#include "sketchfactor/solvers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sketchfactor {

namespace {

WeightedInstance exhaustive_instance(const DesignMatrix& a) {
  WeightedInstance w;
  w.rows = a;
  w.weights = Vector::Ones(a.rows());
  w.source_index.resize(static_cast<std::size_t>(a.rows()));
  for (int i = 0; i < a.rows(); ++i) w.source_index[static_cast<std::size_t>(i)] = i;
  return w;
}

WeightedInstance sample_by(const DesignMatrix& a, const std::vector<double>& q,
                           int m, std::uint64_t seed) {
  const int n = static_cast<int>(a.rows());
  WeightedInstance w;
  w.rows = Matrix(m, a.cols());
  w.weights = Vector(m);
  w.source_index.resize(static_cast<std::size_t>(m));
  Rng rng(seed);
  for (int j = 0; j < m; ++j) {
    const int i = static_cast<int>(rng.categorical(q));
    w.rows.row(j) = a.row(i);
    w.weights(j) = 1.0 / (m * q[static_cast<std::size_t>(i)]);
    w.source_index[static_cast<std::size_t>(j)] = i;
  }
  (void)n;
  return w;
}

void check_sampling_args(const DesignMatrix& a, int m) {
  if (a.rows() < 1) throw std::invalid_argument("coreset: empty matrix");
  if (!a.allFinite()) throw std::invalid_argument("coreset: non-finite entries");
  if (m < 1) throw std::invalid_argument("coreset: m must be >= 1");
}

}  // namespace

WeightedInstance lightweight_coreset_kmeans(const DesignMatrix& a, int m,
                                            std::uint64_t seed) {
  check_sampling_args(a, m);
  const int n = static_cast<int>(a.rows());
  if (m == n) return exhaustive_instance(a);

  const Vector mean = a.colwise().mean().transpose();
  std::vector<double> q(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dist2 = (a.row(i).transpose() - mean).squaredNorm();
    q[static_cast<std::size_t>(i)] = dist2;
    total += dist2;
  }
  for (int i = 0; i < n; ++i) {
    double& qi = q[static_cast<std::size_t>(i)];
    qi = total > 0.0 ? 0.5 / n + 0.5 * qi / total : 1.0 / n;
  }
  return sample_by(a, q, m, seed);
}

WeightedInstance dictionary_coreset(const DesignMatrix& a, int k, int r, int m,
                                    std::uint64_t seed) {
  check_sampling_args(a, m);
  if (k < 1 || r < 1)
    throw std::invalid_argument("dictionary coreset: need k >= 1 and r >= 1");
  if (m < k * r)
    throw std::invalid_argument(
        "dictionary coreset: m < k*r cannot preserve dictionary costs");
  const int n = static_cast<int>(a.rows());
  if (m == n) return exhaustive_instance(a);

  const Vector sigma = sensitivity_upper_bounds(a, k);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += sigma(i);
  std::vector<double> q(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(i)] = sigma(i) / total;
  return sample_by(a, q, m, seed);
}

double weighted_candidate_cost(const WeightedInstance& w, const Matrix& dict,
                               const Constraint& c) {
  double cost = 0.0;
  for (int j = 0; j < w.rows.rows(); ++j)
    cost += w.weights(j) * fit_row(w.rows.row(j).transpose(), dict, c).cost;
  return cost;
}

double true_candidate_cost(const DesignMatrix& a, const Matrix& dict,
                           const Constraint& c) {
  double cost = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    cost += fit_row(a.row(i).transpose(), dict, c).cost;
  return cost;
}

double coreset_error(const WeightedInstance& w, const DesignMatrix& a,
                     const std::vector<Matrix>& candidates,
                     const Constraint& c) {
  if (candidates.empty())
    throw std::invalid_argument("coreset_error: no candidates");
  double worst = 0.0;
  for (const Matrix& dict : candidates) {
    if (dict.cols() != a.cols())
      throw std::invalid_argument("coreset_error: candidate dimension mismatch");
    const double truth = true_candidate_cost(a, dict, c);
    const double approx = weighted_candidate_cost(w, dict, c);
    if (truth <= 0.0) {
      if (approx > 1e-9)
        return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, std::abs(approx - truth) / truth);
  }
  return worst;
}

}  // namespace sketchfactor

#include "sketchfactor/solvers.hpp"

#include "sketchfactor/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sketchfactor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

Matrix assignment_to_x(const std::vector<int>& asg, int k) {
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(asg.size()), k);
  for (std::size_t i = 0; i < asg.size(); ++i) x(static_cast<Eigen::Index>(i), asg[i]) = 1.0;
  return x;
}

// Nearest row of `centers` to `p`, ties to the lowest index.
int nearest_center(const Vector& p, const Matrix& centers, double* dist2_out) {
  int arg = 0;
  double best = (p.transpose() - centers.row(0)).squaredNorm();
  for (int c = 1; c < centers.rows(); ++c) {
    const double d2 = (p.transpose() - centers.row(c)).squaredNorm();
    if (d2 < best) {
      best = d2;
      arg = c;
    }
  }
  if (dist2_out) *dist2_out = best;
  return arg;
}

// Visits every partition of {0..n-1} into at most k blocks, one restricted
// growth string per relabeling class.
template <typename F>
void for_each_partition(int n, int k, F&& fn) {
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  std::vector<int> prefix_max(static_cast<std::size_t>(n), 0);
  while (true) {
    fn(a);
    int i = n - 1;
    for (; i >= 1; --i) {
      const int limit = std::min(prefix_max[static_cast<std::size_t>(i - 1)] + 1, k - 1);
      if (a[static_cast<std::size_t>(i)] < limit) break;
    }
    if (i < 1) return;
    ++a[static_cast<std::size_t>(i)];
    prefix_max[static_cast<std::size_t>(i)] =
        std::max(prefix_max[static_cast<std::size_t>(i - 1)], a[static_cast<std::size_t>(i)]);
    for (int j = i + 1; j < n; ++j) {
      a[static_cast<std::size_t>(j)] = 0;
      prefix_max[static_cast<std::size_t>(j)] = prefix_max[static_cast<std::size_t>(j - 1)];
    }
  }
}

// All r-subsets of {0..k-1} in lexicographic order.
std::vector<std::vector<int>> all_supports(int k, int r) {
  std::vector<std::vector<int>> out;
  std::vector<int> c(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) c[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(c);
    int i = r - 1;
    for (; i >= 0; --i)
      if (c[static_cast<std::size_t>(i)] < k - (r - i)) break;
    if (i < 0) return out;
    ++c[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < r; ++j)
      c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
}

double binomial(int k, int r) {
  double v = 1.0;
  for (int i = 0; i < r; ++i) v = v * (k - i) / (i + 1);
  return v;
}

// ||W vec(M) - wvec||^2 regenerating W entries on the fly, aborting once the
// running total exceeds `bound` (scores only ever need comparing).
double w_score(const SketchState& state, const Matrix& m, double bound) {
  const SketchSpec& w = state.w_spec();
  const int nd = state.n() * state.d();
  const double* v = m.data();  // row-major, so v[i*d+j] = M(i,j)
  double total = 0.0;
  for (int r = 0; r < w.rows; ++r) {
    double acc = -state.wvec()(r);
    for (int idx = 0; idx < nd; ++idx)
      if (v[idx] != 0.0) acc += v[idx] * sketch_entry(w, r, idx);
    total += acc * acc;
    if (total > bound) return total;
  }
  return total;
}

}  // namespace

FactorPair assign_kmeans(const DesignMatrix& a, const Matrix& centers) {
  require(centers.rows() >= 1, "assign_kmeans: no centers");
  require(centers.cols() == a.cols(), "assign_kmeans: dimension mismatch");
  require(a.allFinite() && centers.allFinite(), "assign_kmeans: non-finite input");
  const int n = static_cast<int>(a.rows());
  std::vector<int> asg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    asg[static_cast<std::size_t>(i)] = nearest_center(a.row(i).transpose(), centers, nullptr);
  return make_factor_pair(a, assignment_to_x(asg, static_cast<int>(centers.rows())),
                          centers, kmeans_constraint());
}

FactorPair sparse_code(const DesignMatrix& a, const Matrix& dict, int r,
                       int dmax, long long cap) {
  require(dict.rows() >= 1, "sparse_code: empty dictionary");
  require(dict.cols() == a.cols(), "sparse_code: dimension mismatch");
  require(r >= 1, "sparse_code: r must be >= 1");
  const int k = static_cast<int>(dict.rows());
  Constraint c;
  if (dmax < 0) {
    c = sparse_constraint(r);
  } else {
    c = discrete_constraint(r, dmax);
    const double per_row = discrete_candidates_per_row(k, std::min(r, k), dmax);
    if (per_row > static_cast<double>(cap)) {
      std::ostringstream msg;
      msg << "sparse_code: discrete enumeration needs " << per_row
          << " candidates per row, cap is " << cap;
      throw std::invalid_argument(msg.str());
    }
  }
  Matrix x(a.rows(), k);
  for (int i = 0; i < a.rows(); ++i)
    x.row(i) = fit_row(a.row(i).transpose(), dict, c).code.transpose();
  return make_factor_pair(a, x, dict, c);
}

FactorPair brute_force_kmeans(const DesignMatrix& a, int k, long long cap) {
  const int n = static_cast<int>(a.rows());
  const int d = static_cast<int>(a.cols());
  require(k >= 1, "brute_force_kmeans: k must be >= 1");
  require(a.allFinite(), "brute_force_kmeans: non-finite input");

  if (k >= n) {
    // Every row its own center; unused centers sit at zero.
    Matrix centers = Matrix::Zero(k, d);
    centers.topRows(n) = a;
    std::vector<int> asg(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) asg[static_cast<std::size_t>(i)] = i;
    return make_factor_pair(a, assignment_to_x(asg, k), centers, kmeans_constraint());
  }
  if (std::pow(static_cast<double>(k), n) > static_cast<double>(cap)) {
    std::ostringstream msg;
    msg << "brute_force_kmeans: k^n = " << std::pow(static_cast<double>(k), n)
        << " exceeds cap " << cap;
    throw std::invalid_argument(msg.str());
  }

  Vector row_norm2(n);
  for (int i = 0; i < n; ++i) row_norm2(i) = a.row(i).squaredNorm();
  const double total_norm2 = row_norm2.sum();

  std::vector<int> best_asg;
  double best_cost = kInf;
  Matrix sums(k, d);
  std::vector<int> counts(static_cast<std::size_t>(k));
  for_each_partition(n, k, [&](const std::vector<int>& asg) {
    sums.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      sums.row(asg[static_cast<std::size_t>(i)]) += a.row(i);
      ++counts[static_cast<std::size_t>(asg[static_cast<std::size_t>(i)])];
    }
    double cost = total_norm2;
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        cost -= sums.row(c).squaredNorm() / counts[static_cast<std::size_t>(c)];
    if (cost < best_cost) {
      best_cost = cost;
      best_asg = asg;
    }
  });

  Matrix centers = Matrix::Zero(k, d);
  std::vector<int> counts2(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < n; ++i) {
    centers.row(best_asg[static_cast<std::size_t>(i)]) += a.row(i);
    ++counts2[static_cast<std::size_t>(best_asg[static_cast<std::size_t>(i)])];
  }
  for (int c = 0; c < k; ++c)
    if (counts2[static_cast<std::size_t>(c)] > 0)
      centers.row(c) /= counts2[static_cast<std::size_t>(c)];
  return make_factor_pair(a, assignment_to_x(best_asg, k), centers,
                          kmeans_constraint());
}

namespace {

struct LloydRun {
  Matrix centers;
  std::vector<int> assignment;
  double cost = kInf;
};

LloydRun lloyd_once(const Matrix& rows, const Vector& weights, int k,
                    std::uint64_t seed, const LloydOptions& opts) {
  const int n = static_cast<int>(rows.rows());
  const int d = static_cast<int>(rows.cols());
  Rng rng(seed);

  // k-means++ seeding on the weighted instance.
  Matrix centers(k, d);
  std::vector<double> pick(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = weights(i);
  centers.row(0) = rows.row(static_cast<Eigen::Index>(rng.categorical(pick)));
  Vector min_d2(n);
  for (int i = 0; i < n; ++i)
    min_d2(i) = (rows.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      pick[static_cast<std::size_t>(i)] = weights(i) * min_d2(i);
      total += pick[static_cast<std::size_t>(i)];
    }
    const int chosen = total > 0.0 ? static_cast<int>(rng.categorical(pick))
                                   : static_cast<int>(rng.below(n));
    centers.row(c) = rows.row(chosen);
    for (int i = 0; i < n; ++i)
      min_d2(i) = std::min(min_d2(i), (rows.row(i) - centers.row(c)).squaredNorm());
  }

  std::vector<int> asg(static_cast<std::size_t>(n), 0);
  double prev_cost = kInf;
  double cost = kInf;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    // Assignment step, with empty-cluster repair: an empty cluster's center
    // jumps to the point farthest from it and assignment is redone.
    for (int repair = 0; repair <= k; ++repair) {
      cost = 0.0;
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (int i = 0; i < n; ++i) {
        double d2 = 0.0;
        const int c = nearest_center(rows.row(i).transpose(), centers, &d2);
        asg[static_cast<std::size_t>(i)] = c;
        cost += weights(i) * d2;
        ++counts[static_cast<std::size_t>(c)];
      }
      int empty = -1;
      for (int c = 0; c < k; ++c)
        if (counts[static_cast<std::size_t>(c)] == 0) {
          empty = c;
          break;
        }
      if (empty < 0 || n < k) break;
      int far = 0;
      double far_d2 = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d2 = (rows.row(i) - centers.row(empty)).squaredNorm();
        if (d2 > far_d2) {
          far_d2 = d2;
          far = i;
        }
      }
      centers.row(empty) = rows.row(far);
    }

    // Weighted centroid step.
    Matrix sums = Matrix::Zero(k, d);
    Vector wsum = Vector::Zero(k);
    for (int i = 0; i < n; ++i) {
      sums.row(asg[static_cast<std::size_t>(i)]) += weights(i) * rows.row(i);
      wsum(asg[static_cast<std::size_t>(i)]) += weights(i);
    }
    for (int c = 0; c < k; ++c)
      if (wsum(c) > 0.0) centers.row(c) = sums.row(c) / wsum(c);

    if (prev_cost < kInf && prev_cost - cost <= opts.tol * std::max(prev_cost, 1e-300))
      break;
    prev_cost = cost;
  }

  // Final assignment against the last centroids.
  cost = 0.0;
  for (int i = 0; i < n; ++i) {
    double d2 = 0.0;
    asg[static_cast<std::size_t>(i)] = nearest_center(rows.row(i).transpose(), centers, &d2);
    cost += weights(i) * d2;
  }
  return {centers, asg, cost};
}

LloydRun lloyd_best(const Matrix& rows, const Vector& weights, int k,
                    std::uint64_t seed, const LloydOptions& opts) {
  require(rows.rows() >= 1, "lloyd: empty input");
  require(k >= 1, "lloyd: k must be >= 1");
  require(rows.allFinite(), "lloyd: non-finite input");
  require(weights.size() == rows.rows(), "lloyd: weight count mismatch");
  require(weights.minCoeff() > 0.0, "lloyd: weights must be positive");
  LloydRun best;
  const int restarts = std::max(1, opts.restarts);
  for (int r = 0; r < restarts; ++r) {
    LloydRun run = lloyd_once(rows, weights, k, hash2(seed, static_cast<std::uint64_t>(r)), opts);
    if (run.cost < best.cost) best = std::move(run);
  }
  return best;
}

}  // namespace

FactorPair lloyd(const DesignMatrix& a, int k, std::uint64_t seed,
                 const LloydOptions& opts) {
  const LloydRun run = lloyd_best(a, Vector::Ones(a.rows()), k, seed, opts);
  return make_factor_pair(a, assignment_to_x(run.assignment, k), run.centers,
                          kmeans_constraint());
}

FactorPair lloyd_weighted(const Matrix& rows, const Vector& weights, int k,
                          std::uint64_t seed, const LloydOptions& opts) {
  const LloydRun run = lloyd_best(rows, weights, k, seed, opts);
  FactorPair fp;
  fp.x = assignment_to_x(run.assignment, k);
  fp.d = run.centers;
  fp.constraint = kmeans_constraint();
  fp.cost = run.cost;  // weighted objective, not the plain Frobenius residual
  return fp;
}

LeverageSample leverage_sample(const Matrix& m, int s, std::uint64_t seed) {
  require(m.rows() >= 1 && m.cols() >= 1, "leverage_sample: empty matrix");
  require(s >= 1, "leverage_sample: s must be >= 1");
  require(m.allFinite(), "leverage_sample: non-finite input");
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 && sv(0) > 0.0 ? kSingularCutoff * sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff && sv(i) > 0.0) ++rank;

  LeverageSample out;
  out.q = Vector(rows);
  const double floor_q = 2.0 / rows;
  for (int i = 0; i < rows; ++i) {
    const double lev = rank > 0 ? svd.matrixU().row(i).head(rank).squaredNorm() : 0.0;
    const double p = lev / cols;
    double q;
    if (rank == 0) {
      q = floor_q;  // zero matrix: uniform sampling
    } else if (p <= 0.0) {
      q = 0.0;  // zero leverage: the row is never drawn
    } else {
      q = std::exp2(std::ceil(std::log2(p)));
      while (q < p) q *= 2.0;  // guard the exact-power boundary in fp
      q = std::max(q, floor_q);
    }
    out.q(i) = std::min(q, 1.0);
  }

  std::vector<double> mass(static_cast<std::size_t>(rows));
  int last_positive = 0;
  for (int i = 0; i < rows; ++i) {
    mass[static_cast<std::size_t>(i)] = out.q(i);
    if (out.q(i) > 0.0) last_positive = i;
  }
  Rng rng(seed);
  out.indices.resize(static_cast<std::size_t>(s));
  out.rescale = Vector(s);
  for (int j = 0; j < s; ++j) {
    int i = static_cast<int>(rng.categorical(mass));
    if (out.q(i) <= 0.0) i = last_positive;  // fp fallthrough guard
    out.indices[static_cast<std::size_t>(j)] = i;
    out.rescale(j) = 1.0 / std::sqrt(out.q(i) * s);
  }
  return out;
}

PatternSolveResult pattern_solver(const Matrix& rows, const Vector& weights,
                                  const SparsityPattern& pattern, int k,
                                  const PatternSolverOptions& opts) {
  const int m = static_cast<int>(rows.rows());
  const int d = static_cast<int>(rows.cols());
  require(k >= 1, "pattern_solver: k must be >= 1");
  require(m >= 1, "pattern_solver: empty input");
  require(static_cast<int>(pattern.supports.size()) == m,
          "pattern_solver: one support per row required");
  require(weights.size() == m, "pattern_solver: weight count mismatch");
  require(weights.minCoeff() > 0.0, "pattern_solver: weights must be positive");
  bool all_empty = true;
  for (const auto& sup : pattern.supports) {
    for (int j : sup) require(j >= 0 && j < k, "pattern_solver: support index out of range");
    if (!sup.empty()) all_empty = false;
  }

  if (all_empty) {
    PatternSolveResult res;
    res.x = Matrix::Zero(m, k);
    Vector mean = Vector::Zero(d);
    double wtotal = 0.0;
    for (int i = 0; i < m; ++i) {
      mean += weights(i) * rows.row(i).transpose();
      wtotal += weights(i);
    }
    mean /= wtotal;
    res.d = mean.transpose().replicate(k, 1);
    double obj = 0.0;
    for (int i = 0; i < m; ++i) obj += weights(i) * rows.row(i).squaredNorm();
    res.objective = obj;
    res.history = {obj};
    return res;
  }

  const Vector sqrtw = weights.cwiseSqrt();
  Matrix rows_w = rows;
  for (int i = 0; i < m; ++i) rows_w.row(i) *= sqrtw(i);
  double scale = 0.0;
  for (int i = 0; i < m; ++i) scale += weights(i) * rows.row(i).squaredNorm();

  PatternSolveResult best;
  best.objective = kInf;
  for (int start = 0; start < std::max(1, opts.starts); ++start) {
    Matrix dict(k, d);
    if (start == 0) {
      // Spread data rows across the dictionary as the deterministic start.
      for (int c = 0; c < k; ++c) dict.row(c) = rows.row((c * std::max(1, m / k)) % m);
    } else {
      for (int c = 0; c < k; ++c)
        for (int j = 0; j < d; ++j)
          dict(c, j) = u64_to_gaussian(hash4(opts.seed, static_cast<std::uint64_t>(start),
                                             static_cast<std::uint64_t>(c),
                                             static_cast<std::uint64_t>(j)));
    }

    Matrix x = Matrix::Zero(m, k);
    double prev = kInf;
    std::vector<double> history;
    int iters = 0;
    for (int iter = 0; iter < opts.max_iters; ++iter) {
      // Coefficient step: per-row least squares on the support (weights scale
      // whole rows, so they cancel in each row's argmin). Normal equations
      // with a pseudoinverse fallback; supports are tiny.
      for (int i = 0; i < m; ++i) {
        const auto& sup = pattern.supports[static_cast<std::size_t>(i)];
        x.row(i).setZero();
        if (sup.empty()) continue;
        Matrix basis(d, static_cast<int>(sup.size()));
        for (std::size_t c = 0; c < sup.size(); ++c)
          basis.col(static_cast<Eigen::Index>(c)) = dict.row(sup[c]).transpose();
        const Matrix gram = basis.transpose() * basis;
        const Vector rhs = basis.transpose() * rows.row(i).transpose();
        Vector coef = gram.ldlt().solve(rhs);
        if (!coef.allFinite() || (gram * coef - rhs).norm() > 1e-8 * (rhs.norm() + 1.0))
          coef = least_squares(basis, rows.row(i).transpose());
        for (std::size_t c = 0; c < sup.size(); ++c)
          x(i, sup[c]) = coef(static_cast<Eigen::Index>(c));
      }

      // Dictionary step: weighted least squares over all rows at once.
      Matrix x_w = x;
      for (int i = 0; i < m; ++i) x_w.row(i) *= sqrtw(i);
      const Matrix gram = x_w.transpose() * x_w;
      const Matrix rhs = x_w.transpose() * rows_w;
      dict = gram.ldlt().solve(rhs);
      if (!dict.allFinite() || (gram * dict - rhs).norm() > 1e-8 * (rhs.norm() + 1.0))
        dict = least_squares(x_w, rows_w);

      double obj = 0.0;
      for (int i = 0; i < m; ++i)
        obj += weights(i) * (x.row(i) * dict - rows.row(i)).squaredNorm();
      if (prev < kInf && obj > prev * (1.0 + 1e-9) + 1e-12)
        throw std::logic_error("pattern_solver: objective increased");
      history.push_back(obj);
      iters = iter + 1;
      if (prev < kInf && prev - obj <= opts.tol * std::max(prev, 1e-300)) break;
      prev = obj;
    }

    const double obj = history.empty() ? kInf : history.back();
    if (obj < best.objective) {
      best.x = x;
      best.d = dict;
      best.objective = obj;
      best.iters = iters;
      best.history = std::move(history);
    }
    if (best.objective <= 1e-14 * std::max(1.0, scale)) break;  // exact hit
  }
  return best;
}

namespace {

int auto_coreset_size(int n, double per_row_choices, long long cap, int requested) {
  if (requested > 0) return std::min(requested, n);
  int m = 1;
  double count = per_row_choices;
  while (m < std::min(n, 12) && count * per_row_choices <= static_cast<double>(cap)) {
    count *= per_row_choices;
    ++m;
  }
  return m;
}

}  // namespace

PtasResult ptas_kmeans(const DesignMatrix& a, int k, double eps,
                       std::uint64_t seed, const PtasOptions& opts) {
  const int n = static_cast<int>(a.rows());
  require(k >= 1, "ptas_kmeans: k must be >= 1");
  require(eps > 0.0, "ptas_kmeans: eps must be > 0");
  require(a.allFinite(), "ptas_kmeans: non-finite input");

  PtasResult result;
  if (k == 1) {
    // Exact: the optimal single center is the centroid.
    Matrix center = a.colwise().mean();
    result.factors = make_factor_pair(a, Matrix::Ones(n, 1), center, kmeans_constraint());
    result.coreset_m = n;
    return result;
  }

  const int m = auto_coreset_size(n, static_cast<double>(k), opts.cap, opts.coreset_m);
  result.coreset_m = m;

  const int d = static_cast<int>(a.cols());
  double best_cost = kInf;
  for (int retry = 0; retry < std::max(1, opts.retries); ++retry) {
    const std::uint64_t rseed = hash2(seed, static_cast<std::uint64_t>(retry));
    const ReducedInstance red = reduce(a, k, eps, hash2(rseed, 0xA1), opts.reduce);
    const WeightedInstance cs =
        lightweight_coreset_kmeans(red.aprime, m, hash2(rseed, 0xB2));

    // A candidate dictionary is the weighted least squares fit of a
    // coreset partition, i.e. weighted block centroids. The centroid
    // coefficients depend only on the weights, so the same combination of
    // the original rows gives the candidate in full coordinates directly;
    // candidates are then ranked by their true cost on the full matrix.
    Matrix cand(k, d);
    Vector wsum(k);
    auto centroid_candidate = [&](const std::vector<int>& asg) {
      cand.setZero();
      wsum.setZero();
      for (int i = 0; i < m; ++i) {
        const int c = asg[static_cast<std::size_t>(i)];
        cand.row(c) += cs.weights(i) * a.row(cs.source_index[static_cast<std::size_t>(i)]);
        wsum(c) += cs.weights(i);
      }
      for (int c = 0; c < k; ++c)
        if (wsum(c) > 0.0) cand.row(c) /= wsum(c);
      for (int c = 0; c < k; ++c)
        if (wsum(c) == 0.0) cand.row(c) = cand.row(0);
    };
    auto weighted_score = [&](const std::vector<int>& asg) {
      // Reduced-space score of the same partition, for reporting.
      Matrix dprime = Matrix::Zero(k, static_cast<Eigen::Index>(red.sprime));
      Vector ws = Vector::Zero(k);
      for (int i = 0; i < m; ++i) {
        const int c = asg[static_cast<std::size_t>(i)];
        dprime.row(c) += cs.weights(i) * cs.rows.row(i);
        ws(c) += cs.weights(i);
      }
      for (int c = 0; c < k; ++c)
        if (ws(c) > 0.0) dprime.row(c) /= ws(c);
      double score = 0.0;
      for (int i = 0; i < m; ++i) {
        double d2 = 0.0;
        nearest_center(cs.rows.row(i).transpose(), dprime, &d2);
        score += cs.weights(i) * d2;
      }
      return score;
    };

    if (std::pow(static_cast<double>(k), m) <= static_cast<double>(opts.cap)) {
      for_each_partition(m, k, [&](const std::vector<int>& asg) {
        centroid_candidate(asg);
        FactorPair full = assign_kmeans(a, cand);
        if (full.cost < best_cost) {
          best_cost = full.cost;
          result.reduced_objective = weighted_score(asg);
          result.factors = std::move(full);
          result.used_lloyd_fallback = false;
        }
      });
    } else {
      const FactorPair fp = lloyd_weighted(cs.rows, cs.weights, k, hash2(rseed, 0xC3),
                                           {.restarts = 5});
      std::vector<int> asg(static_cast<std::size_t>(m), 0);
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < k; ++c)
          if (fp.x(i, c) == 1.0) asg[static_cast<std::size_t>(i)] = c;
      centroid_candidate(asg);
      FactorPair full = assign_kmeans(a, cand);
      if (full.cost < best_cost) {
        best_cost = full.cost;
        result.factors = std::move(full);
        result.reduced_objective = fp.cost;
        result.used_lloyd_fallback = true;
      }
    }
  }
  return result;
}

PtasResult ptas_sdl(const DesignMatrix& a, int k, int r, double eps,
                    std::uint64_t seed, const PtasOptions& opts) {
  const int n = static_cast<int>(a.rows());
  require(k >= 1, "ptas_sdl: k must be >= 1");
  require(r >= 1, "ptas_sdl: r must be >= 1");
  require(eps > 0.0, "ptas_sdl: eps must be > 0");
  require(a.allFinite(), "ptas_sdl: non-finite input");
  const int rr = std::min(r, k);

  const double support_count = binomial(k, rr);
  // The coreset must hold at least k*r rows to see any full dictionary; the
  // pattern-sampling fallback absorbs the blowup if that floor exceeds the
  // enumerable size.
  const int m = std::min(
      n, std::max(auto_coreset_size(n, support_count, opts.cap, opts.coreset_m),
                  k * rr));

  PtasResult result;
  result.coreset_m = m;
  double best_cost = kInf;
  for (int retry = 0; retry < std::max(1, opts.retries); ++retry) {
    const std::uint64_t rseed = hash2(seed, static_cast<std::uint64_t>(retry));
    const ReducedInstance red = reduce(a, k, eps, hash2(rseed, 0xA1), opts.reduce);
    WeightedInstance cs;
    if (m == n) {
      cs.rows = red.aprime;
      cs.weights = Vector::Ones(n);
      cs.source_index.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) cs.source_index[static_cast<std::size_t>(i)] = i;
    } else {
      cs = dictionary_coreset(red.aprime, k, rr, m, hash2(rseed, 0xB2));
    }

    const auto supports = all_supports(k, rr);
    const long long total_patterns_fit =
        std::pow(static_cast<double>(supports.size()), m) <=
                static_cast<double>(opts.cap)
            ? 1
            : 0;

    Matrix best_dprime;
    double best_obj = kInf;
    double cs_scale = 0.0;
    for (int i = 0; i < m; ++i)
      cs_scale += cs.weights(i) * cs.rows.row(i).squaredNorm();
    const double done = 1e-14 * std::max(1.0, cs_scale);  // nothing can beat ~0
    SparsityPattern pattern;
    pattern.supports.resize(static_cast<std::size_t>(m));
    auto try_pattern = [&]() {
      const PatternSolveResult res = pattern_solver(cs.rows, cs.weights, pattern, k);
      if (res.objective < best_obj) {
        best_obj = res.objective;
        best_dprime = res.d;
      }
    };

    if (total_patterns_fit == 1) {
      // Odometer over the support list, one digit per coreset row.
      std::vector<std::size_t> digit(static_cast<std::size_t>(m), 0);
      while (true) {
        for (int i = 0; i < m; ++i)
          pattern.supports[static_cast<std::size_t>(i)] = supports[digit[static_cast<std::size_t>(i)]];
        try_pattern();
        if (best_obj <= done) break;
        int pos = m - 1;
        while (pos >= 0 && digit[static_cast<std::size_t>(pos)] + 1 == supports.size()) {
          digit[static_cast<std::size_t>(pos)] = 0;
          --pos;
        }
        if (pos < 0) break;
        ++digit[static_cast<std::size_t>(pos)];
      }
    } else {
      result.sampled_patterns = true;
      Rng rng(hash2(rseed, 0xC4));
      for (int trial = 0; trial < std::max(1, opts.pattern_budget); ++trial) {
        for (int i = 0; i < m; ++i)
          pattern.supports[static_cast<std::size_t>(i)] =
              supports[static_cast<std::size_t>(rng.below(supports.size()))];
        try_pattern();
        if (best_obj <= done) break;
      }
    }

    const Matrix lifted = lift_dictionary(red, best_dprime);
    FactorPair full = sparse_code(a, lifted, rr, -1, opts.cap);
    if (full.cost < best_cost) {
      best_cost = full.cost;
      result.factors = std::move(full);
      result.reduced_objective = best_obj;
    }
  }
  return result;
}

GuessSketchResult guess_sketch_kmeans(const SketchState& state, int k,
                                      [[maybe_unused]] double eps,
                                      long long cap) {
  require(k >= 1, "guess_sketch_kmeans: k must be >= 1");
  const int n = state.n();
  const int d = state.d();
  if (std::pow(static_cast<double>(k), n) > static_cast<double>(cap)) {
    std::ostringstream msg;
    msg << "guess_sketch_kmeans: k^n = " << std::pow(static_cast<double>(k), n)
        << " candidates exceed cap " << cap;
    throw std::invalid_argument(msg.str());
  }

  const Matrix s_dense = sketch_dense(state.s_spec());  // s x n
  const Matrix& sa = state.sa();
  const Matrix& at = state.at();

  GuessSketchResult best;
  best.score = kInf;
  std::vector<int> asg(static_cast<std::size_t>(n), 0);
  // Full k^n enumeration: relabelings rank identically, the first one wins.
  while (true) {
    Matrix sx = Matrix::Zero(s_dense.rows(), k);
    for (int i = 0; i < n; ++i)
      sx.col(asg[static_cast<std::size_t>(i)]) += s_dense.col(i);
    const Matrix dict = pinv(sx) * sa;  // k x d

    // Re-assign each row by nearest sketched center.
    const Matrix dict_t = apply_right(dict, state.t_spec());  // k x t
    Matrix x = Matrix::Zero(n, k);
    Matrix m(n, d);
    for (int i = 0; i < n; ++i) {
      int arg = 0;
      double bd = (at.row(i) - dict_t.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d2 = (at.row(i) - dict_t.row(c)).squaredNorm();
        if (d2 < bd) {
          bd = d2;
          arg = c;
        }
      }
      x(i, arg) = 1.0;
      m.row(i) = dict.row(arg);
    }

    const double score = w_score(state, m, best.score);
    if (score < best.score) {
      best.score = score;
      best.x = x;
      best.d = dict;
    }

    int pos = n - 1;
    while (pos >= 0 && asg[static_cast<std::size_t>(pos)] + 1 == k) {
      asg[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++asg[static_cast<std::size_t>(pos)];
  }
  return best;
}

GuessSketchResult guess_sketch_sdl(const SketchState& state, int k, int r,
                                   int dmax, [[maybe_unused]] double eps,
                                   long long cap) {
  require(k >= 1, "guess_sketch_sdl: k must be >= 1");
  require(r >= 1, "guess_sketch_sdl: r must be >= 1");
  require(dmax >= 1, "guess_sketch_sdl: dmax must be >= 1");
  const int n = state.n();
  const int d = state.d();
  const int rr = std::min(r, k);

  const double per_row = binomial(k, rr) * std::pow(2.0 * dmax + 1.0, rr);
  if (std::pow(per_row, n) > static_cast<double>(cap)) {
    std::ostringstream msg;
    msg << "guess_sketch_sdl: " << std::pow(per_row, n)
        << " candidates exceed cap " << cap;
    throw std::invalid_argument(msg.str());
  }

  // Distinct feasible rows of X (support + integer coefficients, deduped).
  std::vector<Vector> codes;
  {
    std::set<std::vector<int>> seen;
    const auto supports = all_supports(k, rr);
    const int radix = 2 * dmax + 1;
    for (const auto& sup : supports) {
      long long tuples = 1;
      for (std::size_t i = 0; i < sup.size(); ++i) tuples *= radix;
      for (long long id = 0; id < tuples; ++id) {
        std::vector<int> full(static_cast<std::size_t>(k), 0);
        long long rem = id;
        for (std::size_t i = 0; i < sup.size(); ++i) {
          full[static_cast<std::size_t>(sup[i])] = static_cast<int>(rem % radix) - dmax;
          rem /= radix;
        }
        if (seen.insert(full).second) {
          Vector v(k);
          for (int j = 0; j < k; ++j) v(j) = full[static_cast<std::size_t>(j)];
          codes.push_back(v);
        }
      }
    }
  }

  const Matrix s_dense = sketch_dense(state.s_spec());
  const Matrix& sa = state.sa();
  const Matrix& at = state.at();

  GuessSketchResult best;
  best.score = kInf;
  std::vector<std::size_t> digit(static_cast<std::size_t>(n), 0);
  while (true) {
    Matrix sx = Matrix::Zero(s_dense.rows(), k);
    for (int i = 0; i < n; ++i)
      sx += s_dense.col(i) * codes[digit[static_cast<std::size_t>(i)]].transpose();
    const Matrix dict = pinv(sx) * sa;

    const Matrix dict_t = apply_right(dict, state.t_spec());  // k x t
    Matrix x(n, k);
    Matrix m(n, d);
    for (int i = 0; i < n; ++i) {
      std::size_t arg = 0;
      double bd = kInf;
      for (std::size_t c = 0; c < codes.size(); ++c) {
        const double d2 =
            (codes[c].transpose() * dict_t - at.row(i)).squaredNorm();
        if (d2 < bd) {
          bd = d2;
          arg = c;
        }
      }
      x.row(i) = codes[arg].transpose();
      m.row(i) = codes[arg].transpose() * dict;
    }

    const double score = w_score(state, m, best.score);
    if (score < best.score) {
      best.score = score;
      best.x = x;
      best.d = dict;
    }

    int pos = n - 1;
    while (pos >= 0 && digit[static_cast<std::size_t>(pos)] + 1 == codes.size()) {
      digit[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++digit[static_cast<std::size_t>(pos)];
  }
  return best;
}

Vector sensitivity_upper_bounds(const DesignMatrix& a, int k, double c) {
  require(k >= 1, "sensitivity_upper_bounds: k must be >= 1");
  require(c > 0.0, "sensitivity_upper_bounds: c must be > 0");
  require(a.rows() >= 1, "sensitivity_upper_bounds: empty input");
  const int n = static_cast<int>(a.rows());

  const FactorPair fp = lloyd(a, std::min(k, n), 0x5e251f17u, {.restarts = 5});
  std::vector<int> counts(static_cast<std::size_t>(fp.d.rows()), 0);
  std::vector<int> asg(static_cast<std::size_t>(n));
  Vector dist2(n);
  for (int i = 0; i < n; ++i) {
    double d2 = 0.0;
    const int cl = nearest_center(a.row(i).transpose(), fp.d, &d2);
    asg[static_cast<std::size_t>(i)] = cl;
    dist2(i) = d2;
    ++counts[static_cast<std::size_t>(cl)];
  }
  const double cost = dist2.sum();

  Vector sigma(n);
  for (int i = 0; i < n; ++i) {
    const double share = cost > 0.0 ? dist2(i) / cost : 0.0;
    const double inv_size = 1.0 / counts[static_cast<std::size_t>(asg[static_cast<std::size_t>(i)])];
    sigma(i) = std::min(1.0, c * (share + inv_size));
  }
  return sigma;
}

RandomOrderResult random_order_kmeans(const Matrix& arrivals, int k,
                                      double eps, double alpha,
                                      std::uint64_t seed,
                                      const RandomOrderOptions& opts) {
  const int n = static_cast<int>(arrivals.rows());
  const int d = static_cast<int>(arrivals.cols());
  require(n >= 1, "random_order_kmeans: empty stream");
  require(k >= 1, "random_order_kmeans: k must be >= 1");
  require(eps > 0.0, "random_order_kmeans: eps must be > 0");
  require(alpha > 0.0, "random_order_kmeans: alpha must be > 0");
  require(arrivals.allFinite(), "random_order_kmeans: non-finite input");

  const double raw = std::ceil(opts.c3 * alpha * n * k * d / (eps * eps));
  const int m = static_cast<int>(std::min(static_cast<double>(n), raw));
  const int prefix = std::max(1, m);

  const Matrix prefix_rows = arrivals.topRows(prefix);
  Matrix centers;
  long long solver_words = 0;
  if (opts.use_ptas) {
    PtasOptions po;
    po.cap = opts.cap;
    const PtasResult res = ptas_kmeans(prefix_rows, k, eps, hash2(seed, 0xF1), po);
    centers = res.factors.d;
    // The pipeline's reduced copy plus coreset dominate its extra footprint.
    solver_words = static_cast<long long>(prefix) * d + res.coreset_m * d;
  } else {
    const FactorPair fp = lloyd(prefix_rows, k, hash2(seed, 0xF1),
                                {.restarts = opts.lloyd_restarts});
    centers = fp.d;
    // Lloyd keeps centroid sums, counts and one assignment vector alive.
    solver_words = 2LL * k * d + 2LL * prefix + k;
  }

  RandomOrderResult out;
  out.prefix_rows = prefix;
  out.assignment.resize(static_cast<std::size_t>(n));
  double online_cost = 0.0;
  for (int i = 0; i < n; ++i) {
    double d2 = 0.0;
    out.assignment[static_cast<std::size_t>(i)] =
        nearest_center(arrivals.row(i).transpose(), centers, &d2);
    online_cost += d2;
  }
  out.factors = make_factor_pair(
      arrivals, assignment_to_x(out.assignment, k), centers, kmeans_constraint());
  // Online accumulation and the recomputed pair must agree.
  if (std::abs(online_cost - out.factors.cost) >
      1e-9 * std::max(1.0, out.factors.cost))
    throw std::logic_error("random_order_kmeans: online cost drifted");

  out.peak_words = static_cast<long long>(prefix) * d  // buffered prefix
                   + static_cast<long long>(k) * d     // centers
                   + n                                 // assignment words
                   + d                                 // the row in flight
                   + solver_words;
  return out;
}

}  // namespace sketchfactor

#include "sketchfactor/dimreduce.hpp"

#include "sketchfactor/rng.hpp"
#include "sketchfactor/sketch.hpp"

#include <cmath>
#include <stdexcept>

namespace sketchfactor {

namespace {

int numerical_rank(const Vector& singular_values) {
  if (singular_values.size() == 0 || singular_values(0) <= 0.0) return 0;
  const double cutoff = kSingularCutoff * singular_values(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i)
    if (singular_values(i) > cutoff) ++rank;
  return rank;
}

// Exact reduction through A's own top singular subspace, used when the
// sketched product is rank deficient and the generic-position argument
// behind the sketched path does not apply.
ReducedInstance svd_fallback(const DesignMatrix& a, int sprime,
                             std::uint64_t seed) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const int rank = numerical_rank(svd.singularValues());
  const int r = std::max(1, std::min(sprime, rank));
  ReducedInstance out;
  out.t2 = svd.matrixV().leftCols(r);
  out.aprime = a * out.t2;
  out.sat = Matrix::Identity(r, r);
  out.sa = out.t2.transpose();
  out.sprime = r;
  out.seed = seed;
  out.path = ReducePath::SvdFallback;
  return out;
}

}  // namespace

ReducedInstance reduce(const DesignMatrix& a, int k, double eps,
                       std::uint64_t seed, const ReduceOptions& opts) {
  if (k < 1) throw std::invalid_argument("reduce: k must be >= 1");
  if (eps <= 0.0) throw std::invalid_argument("reduce: eps must be > 0");
  if (!a.allFinite()) throw std::invalid_argument("reduce: non-finite entries");
  const int n = static_cast<int>(a.rows());
  const int d = static_cast<int>(a.cols());
  if (n < 1 || d < 1) throw std::invalid_argument("reduce: empty matrix");

  const int sprime = static_cast<int>(
      std::ceil(opts.c1 * k * std::log(static_cast<double>(k) + 1.0) / eps));

  if (sprime >= d) {
    ReducedInstance out;
    out.aprime = a;
    out.sat = Matrix::Identity(d, d);
    out.sa = Matrix::Identity(d, d);
    out.t2 = Matrix::Identity(d, d);
    out.sprime = d;
    out.seed = seed;
    out.path = ReducePath::PassThrough;
    return out;
  }

  // T1 only pays off while its width is below d; hashing d columns into d
  // or more buckets would just add collisions, so past the cap the column
  // sketch is skipped and the sketched products keep their exact norms.
  const int t1_width =
      std::max(sprime, static_cast<int>(std::ceil(
                           opts.c2 * sprime * sprime / (eps * eps))));
  const bool use_t1 = t1_width < d;
  const SketchSpec s_spec = composed_sketch(sprime, n, hash2(seed, 0xd1));

  const Matrix sa = apply_left(s_spec, a);  // sprime x d
  Matrix at1, sat1;
  if (use_t1) {
    const SketchSpec t1_spec = count_sketch(t1_width, d, hash2(seed, 0xd2));
    at1 = apply_right(a, t1_spec);      // n x t1_width
    sat1 = apply_left(s_spec, at1);     // sprime x t1_width
  } else {
    at1 = a;
    sat1 = sa;
  }
  Eigen::JacobiSVD<Matrix> svd(sat1, Eigen::ComputeThinV);
  if (numerical_rank(svd.singularValues()) < sprime)
    return svd_fallback(a, sprime, seed);

  ReducedInstance out;
  out.t2 = svd.matrixV().leftCols(sprime);  // t1 width (or d) x sprime
  out.aprime = at1 * out.t2;
  out.sat = sat1 * out.t2;
  out.sa = sa;
  out.sprime = sprime;
  out.seed = seed;
  out.path = ReducePath::Sketched;
  return out;
}

Matrix lift_dictionary(const ReducedInstance& r, const Matrix& dprime) {
  if (dprime.cols() != r.sprime)
    throw std::invalid_argument(
        "lift_dictionary: D' width must match the reduced width");
  if (r.path == ReducePath::PassThrough) return dprime;
  return dprime * pinv(r.sat) * r.sa;
}

}  // namespace sketchfactor

#include "doctest.h"

#include "sketchfactor/rng.hpp"
#include "sketchfactor/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

using namespace sketchfactor;

namespace {

Matrix random_matrix(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.gaussian();
  return m;
}

Matrix planted_clusters(int n, int d, int k, double spread, double sigma,
                        std::uint64_t seed) {
  Rng rng(seed);
  Matrix centers = Matrix::Zero(k, d);
  for (int c = 0; c < k; ++c) centers(c, c % d) = spread * (c + 1);
  Matrix a(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      a(i, j) = centers(i % k, j) + sigma * rng.gaussian();
  return a;
}

// Reference k-means cost by enumerating every labeled assignment in k^n.
double exhaustive_kmeans_cost(const Matrix& a, int k) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> asg(n, 0);
  double best = 1e300;
  while (true) {
    Matrix sums = Matrix::Zero(k, a.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(asg[i]) += a.row(i);
      ++counts[asg[i]];
    }
    double cost = 0.0;
    for (int i = 0; i < n; ++i)
      cost += (a.row(i) - sums.row(asg[i]) / counts[asg[i]]).squaredNorm();
    best = std::min(best, cost);
    int pos = n - 1;
    while (pos >= 0 && asg[pos] + 1 == k) asg[pos--] = 0;
    if (pos < 0) break;
    ++asg[pos];
  }
  return best;
}

}  // namespace

TEST_CASE("assign_kmeans: zero cost on its own centers, ties to lowest index") {
  const Matrix centers = random_matrix(3, 4, 1);
  const FactorPair fp = assign_kmeans(centers, centers);
  CHECK(fp.cost < 1e-20);

  Matrix two(2, 1);
  two << 0.0, 10.0;
  Matrix mid(1, 1);
  mid << 5.0;
  const FactorPair tie = assign_kmeans(mid, two);
  CHECK(tie.x(0, 0) == 1.0);
}

TEST_CASE("assign_kmeans is per-row optimal against fixed centers") {
  const Matrix a = random_matrix(10, 3, 5);
  const Matrix centers = random_matrix(4, 3, 6);
  const FactorPair fp = assign_kmeans(a, centers);
  double manual = 0.0;
  for (int i = 0; i < 10; ++i) {
    double best = 1e300;
    for (int c = 0; c < 4; ++c)
      best = std::min(best, (a.row(i) - centers.row(c)).squaredNorm());
    manual += best;
  }
  CHECK(fp.cost == doctest::Approx(manual).epsilon(1e-12));
  CHECK(satisfies(fp.x, kmeans_constraint()));
}

TEST_CASE("sparse_code with r = k matches global least squares") {
  const Matrix a = random_matrix(6, 5, 10);
  const Matrix dict = random_matrix(3, 5, 11);
  const FactorPair fp = sparse_code(a, dict, 3);
  const Matrix x = least_squares(dict.transpose(), a.transpose()).transpose();
  CHECK(fp.cost == doctest::Approx((x * dict - a).squaredNorm()).epsilon(1e-9));
}

TEST_CASE("sparse_code respects the constraint and reports consistent cost") {
  const Matrix a = random_matrix(7, 6, 20);
  const Matrix dict = random_matrix(4, 6, 21);
  const FactorPair cont = sparse_code(a, dict, 2);
  CHECK(satisfies(cont.x, sparse_constraint(2)));
  CHECK(cont.cost == doctest::Approx(frob_cost(a, cont.x, dict)).epsilon(1e-12));

  const FactorPair disc = sparse_code(a, dict, 2, 1);
  CHECK(satisfies(disc.x, discrete_constraint(2, 1)));
  CHECK(disc.cost >= cont.cost - 1e-12);  // smaller feasible set
}

TEST_CASE("sparse_code rejects a discrete budget above the cap") {
  const Matrix a = random_matrix(2, 3, 1);
  const Matrix dict = random_matrix(12, 3, 2);
  try {
    sparse_code(a, dict, 6, 8, 100);
    FAIL("expected a budget rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("cap") != std::string::npos);
  }
}

TEST_CASE("brute_force_kmeans equals full labeled enumeration") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Matrix a = random_matrix(6, 2, 40 + seed);
    const FactorPair fp = brute_force_kmeans(a, 2);
    CHECK(fp.cost ==
          doctest::Approx(exhaustive_kmeans_cost(a, 2)).epsilon(1e-10));
  }
  const Matrix b = random_matrix(5, 2, 50);
  const FactorPair fp3 = brute_force_kmeans(b, 3);
  CHECK(fp3.cost == doctest::Approx(exhaustive_kmeans_cost(b, 3)).epsilon(1e-10));
}

TEST_CASE("brute_force_kmeans trivial and guarded regimes") {
  const Matrix a = random_matrix(3, 2, 3);
  CHECK(brute_force_kmeans(a, 3).cost < 1e-20);
  CHECK(brute_force_kmeans(a, 5).cost < 1e-20);  // k > n pads unused centers
  CHECK_THROWS_AS(brute_force_kmeans(random_matrix(30, 2, 1), 4, 1000),
                  std::invalid_argument);
}

TEST_CASE("brute force cost is invariant under row permutation") {
  const Matrix a = random_matrix(7, 3, 60);
  Rng rng(61);
  const std::vector<int> perm = rng.permutation(7);
  Matrix b(7, 3);
  for (int i = 0; i < 7; ++i) b.row(i) = a.row(perm[i]);
  CHECK(brute_force_kmeans(a, 2).cost ==
        doctest::Approx(brute_force_kmeans(b, 2).cost).epsilon(1e-12));
}

TEST_CASE("lloyd separates well separated pairs exactly") {
  Matrix a(4, 2);
  a << 0, 0, 0.1, 0, 10, 10, 10.1, 10;
  const FactorPair fp = lloyd(a, 2, 1, {.restarts = 5});
  CHECK(fp.cost == doctest::Approx(2 * 0.05 * 0.05 * 2).epsilon(1e-9));
}

TEST_CASE("lloyd with restarts hits the brute force optimum almost always") {
  int hits = 0;
  const int seeds = 100;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const Matrix a = random_matrix(6, 2, hash2(seed, 7000));
    const double opt = brute_force_kmeans(a, 2).cost;
    const double got = lloyd(a, 2, seed, {.restarts = 20}).cost;
    CHECK(got >= opt - 1e-9 * std::max(1.0, opt));
    if (got <= opt * (1.0 + 1e-9) + 1e-12) ++hits;
  }
  CHECK(hits >= 95);
}

TEST_CASE("lloyd handles degenerate inputs") {
  Matrix same = Matrix::Ones(5, 3);
  CHECK(lloyd(same, 2, 1).cost < 1e-18);
  CHECK_THROWS_AS(lloyd(same, 0, 1), std::invalid_argument);
  Vector bad_w = Vector::Zero(5);
  CHECK_THROWS_AS(lloyd_weighted(same, bad_w, 2, 1), std::invalid_argument);
}

TEST_CASE("lloyd_weighted: k = 1 returns the weighted centroid exactly") {
  const Matrix rows = random_matrix(6, 3, 70);
  Vector w(6);
  w << 1, 2, 3, 1, 5, 0.5;
  const FactorPair fp = lloyd_weighted(rows, w, 1, 3);
  Vector centroid = Vector::Zero(3);
  for (int i = 0; i < 6; ++i) centroid += w(i) * rows.row(i).transpose();
  centroid /= w.sum();
  CHECK((fp.d.row(0).transpose() - centroid).norm() < 1e-12);
  double obj = 0.0;
  for (int i = 0; i < 6; ++i)
    obj += w(i) * (rows.row(i) - fp.d.row(0)).squaredNorm();
  CHECK(fp.cost == doctest::Approx(obj).epsilon(1e-12));
}

TEST_CASE("lloyd_weighted objective equals the replicated-row objective") {
  // Integer weights have an exact unweighted counterpart: repeat each row
  // w_i times. Any center set scores identically on both, so the weighted
  // run's reported cost must match a direct replicated evaluation.
  Matrix rows = random_matrix(5, 2, 80);
  Vector w(5);
  w << 3, 1, 2, 1, 2;
  const FactorPair fp = lloyd_weighted(rows, w, 2, 9, {.restarts = 8});
  double replicated = 0.0;
  for (int i = 0; i < 5; ++i) {
    double best = 1e300;
    for (int c = 0; c < 2; ++c)
      best = std::min(best, (rows.row(i) - fp.d.row(c)).squaredNorm());
    replicated += w(i) * best;
  }
  CHECK(fp.cost == doctest::Approx(replicated).epsilon(1e-9));
}

TEST_CASE("leverage probabilities are discretized upward powers of two") {
  const Matrix m = random_matrix(12, 3, 91);
  const LeverageSample ls = leverage_sample(m, 6, 3);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  for (int i = 0; i < 12; ++i) {
    const double p = svd.matrixU().row(i).squaredNorm() / 3.0;
    CHECK(ls.q(i) >= p - 1e-12);
    CHECK(ls.q(i) <= 1.0);
    const double l2 = std::log2(ls.q(i));
    const bool is_pow2 = std::abs(l2 - std::round(l2)) < 1e-12;
    CHECK((is_pow2 || ls.q(i) == doctest::Approx(2.0 / 12.0)));
  }
  for (std::size_t j = 0; j < ls.indices.size(); ++j)
    CHECK(ls.rescale(j) ==
          doctest::Approx(1.0 / std::sqrt(ls.q(ls.indices[j]) * 6.0)));
}

TEST_CASE("zero-leverage rows are never drawn; zero matrices sample uniformly") {
  Matrix m = Matrix::Zero(8, 3);
  m.topRows(3) = Matrix::Identity(3, 3);
  std::vector<int> counts(8, 0);
  for (std::uint64_t seed = 0; seed < 250; ++seed) {
    const LeverageSample ls = leverage_sample(m, 8, seed);
    for (int i : ls.indices) ++counts[i];
  }
  for (int i = 0; i < 3; ++i) CHECK(counts[i] > 0);
  for (int i = 3; i < 8; ++i) CHECK(counts[i] == 0);

  const LeverageSample zero = leverage_sample(Matrix::Zero(6, 2), 5, 1);
  for (int i = 0; i < 6; ++i) CHECK(zero.q(i) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("leverage-sampled regression tracks the exact solution") {
  int ok = 0;
  const int trials = 60;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const Matrix m = random_matrix(50, 3, hash2(seed, 1));
    const Matrix z_true = random_matrix(3, 2, hash2(seed, 2));
    const Matrix b = m * z_true + 0.3 * random_matrix(50, 2, hash2(seed, 3));

    const Matrix z_opt = least_squares(m, b);
    const double opt = (m * z_opt - b).squaredNorm();

    const int s = 30;
    const LeverageSample ls = leverage_sample(m, s, hash2(seed, 4));
    Matrix sm(s, 3), sb(s, 2);
    for (int j = 0; j < s; ++j) {
      sm.row(j) = ls.rescale(j) * m.row(ls.indices[j]);
      sb.row(j) = ls.rescale(j) * b.row(ls.indices[j]);
    }
    const Matrix z_hat = least_squares(sm, sb);
    const double got = (m * z_hat - b).squaredNorm();
    CHECK(got >= opt - 1e-9 * std::max(1.0, opt));
    if (got <= 1.5 * opt) ++ok;
  }
  CHECK(ok >= trials * 85 / 100);
}

TEST_CASE("pattern solver nails an exactly realizable pattern") {
  const Matrix dict = random_matrix(2, 4, 100);
  Matrix x = Matrix::Zero(5, 2);
  SparsityPattern pattern;
  pattern.supports = {{0}, {1}, {0}, {1}, {0}};
  Rng rng(101);
  for (int i = 0; i < 5; ++i) x(i, pattern.supports[i][0]) = 1.0 + rng.uniform();
  const Matrix rows = x * dict;
  const PatternSolveResult res =
      pattern_solver(rows, Vector::Ones(5), pattern, 2);
  CHECK(res.objective < 1e-8 * rows.squaredNorm());
  for (int i = 0; i < 5; ++i)
    for (int c = 0; c < 2; ++c)
      if (c != pattern.supports[i][0]) CHECK(res.x(i, c) == 0.0);
}

TEST_CASE("pattern solver all-empty pattern returns the weighted mean rows") {
  const Matrix rows = random_matrix(4, 3, 110);
  Vector w(4);
  w << 1, 2, 3, 4;
  SparsityPattern pattern;
  pattern.supports = {{}, {}, {}, {}};
  const PatternSolveResult res = pattern_solver(rows, w, pattern, 2);
  CHECK(res.x.norm() == 0.0);
  Vector mean = Vector::Zero(3);
  for (int i = 0; i < 4; ++i) mean += w(i) * rows.row(i).transpose();
  mean /= w.sum();
  CHECK((res.d.row(0).transpose() - mean).norm() < 1e-12);
  CHECK((res.d.row(1).transpose() - mean).norm() < 1e-12);
  double obj = 0.0;
  for (int i = 0; i < 4; ++i) obj += w(i) * rows.row(i).squaredNorm();
  CHECK(res.objective == doctest::Approx(obj));
}

TEST_CASE("pattern solver history never increases") {
  Rng rng(120);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 4 + static_cast<int>(rng.below(4));
    const int k = 2 + static_cast<int>(rng.below(2));
    const Matrix rows = random_matrix(m, 5, rng.next());
    Vector w(m);
    for (int i = 0; i < m; ++i) w(i) = 0.5 + rng.uniform();
    SparsityPattern pattern;
    pattern.supports.resize(m);
    for (int i = 0; i < m; ++i) {
      const int size = static_cast<int>(rng.below(3));  // 0, 1 or 2 entries
      std::set<int> sup;
      while (static_cast<int>(sup.size()) < std::min(size, k))
        sup.insert(static_cast<int>(rng.below(k)));
      pattern.supports[i].assign(sup.begin(), sup.end());
    }
    PatternSolverOptions opts;
    opts.starts = 3;
    const PatternSolveResult res = pattern_solver(rows, w, pattern, k, opts);
    REQUIRE(!res.history.empty());
    for (std::size_t h = 1; h < res.history.size(); ++h)
      CHECK(res.history[h] <= res.history[h - 1] * (1.0 + 1e-9) + 1e-12);
    CHECK(res.objective == doctest::Approx(res.history.back()));
  }
}

TEST_CASE("pattern solver beats a dense grid search on a tiny instance") {
  const Matrix rows = random_matrix(3, 2, 130) * 0.8;
  Vector w(3);
  w << 1.0, 0.7, 1.3;
  SparsityPattern pattern;
  pattern.supports = {{0}, {1}, {0}};

  // Reference: grid over each dictionary row in [-2,2]^2 at step 0.05. With
  // r = 1 supports the objective separates per dictionary row, so the grid
  // minimum is the sum of independent per-row minima.
  auto row_resid = [&](int i, double g0, double g1) {
    const double dd = g0 * g0 + g1 * g1;
    const double dot = rows(i, 0) * g0 + rows(i, 1) * g1;
    const double coef = dd > 0.0 ? dot / dd : 0.0;
    const double r0 = coef * g0 - rows(i, 0);
    const double r1 = coef * g1 - rows(i, 1);
    return w(i) * (r0 * r0 + r1 * r1);
  };
  double grid_min = 0.0;
  for (int c = 0; c < 2; ++c) {
    double best = 1e300;
    for (int u = 0; u <= 80; ++u)
      for (int v = 0; v <= 80; ++v) {
        const double g0 = -2.0 + 0.05 * u;
        const double g1 = -2.0 + 0.05 * v;
        double obj = 0.0;
        for (int i = 0; i < 3; ++i)
          if (pattern.supports[i][0] == c) obj += row_resid(i, g0, g1);
        best = std::min(best, obj);
      }
    grid_min += best;
  }

  const PatternSolveResult res =
      pattern_solver(rows, w, pattern, 2, {.starts = 6});
  CHECK(res.objective <= grid_min + 1e-6);
}

TEST_CASE("pattern solver argument validation") {
  const Matrix rows = random_matrix(3, 2, 1);
  SparsityPattern p;
  p.supports = {{0}, {1}};
  CHECK_THROWS_AS(pattern_solver(rows, Vector::Ones(3), p, 2),
                  std::invalid_argument);
  p.supports = {{0}, {5}, {1}};
  CHECK_THROWS_AS(pattern_solver(rows, Vector::Ones(3), p, 2),
                  std::invalid_argument);
}

TEST_CASE("ptas_kmeans: k = 1 is the exact centroid solution") {
  const Matrix a = random_matrix(9, 4, 140);
  const PtasResult res = ptas_kmeans(a, 1, 0.5, 7);
  const Matrix mean = a.colwise().mean();
  double direct = 0.0;
  for (int i = 0; i < 9; ++i) direct += (a.row(i) - mean).squaredNorm();
  CHECK(res.factors.cost == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("ptas_kmeans lands within (1+eps) of a strong Lloyd baseline") {
  const double eps = 0.5;
  int ok = 0;
  const int seeds = 10;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const Matrix a = planted_clusters(50, 10, 2, 6.0, 0.5, hash2(seed, 2024));
    PtasOptions opts;
    opts.coreset_m = 6;
    const PtasResult res = ptas_kmeans(a, 2, eps, seed, opts);
    const double baseline = lloyd(a, 2, hash2(seed, 5), {.restarts = 200}).cost;
    CHECK(res.factors.cost >= baseline * (1.0 - 1e-9) - 1e-9);
    if (res.factors.cost <= (1.0 + eps) * baseline) ++ok;
    CHECK(satisfies(res.factors.x, kmeans_constraint()));
  }
  CHECK(ok >= 8);
}

TEST_CASE("ptas_kmeans falls back to weighted lloyd when the cap is tiny") {
  const Matrix a = planted_clusters(20, 4, 2, 5.0, 0.3, 9);
  PtasOptions opts;
  opts.coreset_m = 8;
  opts.cap = 10;  // 2^8 partitions do not fit
  const PtasResult res = ptas_kmeans(a, 2, 0.5, 3, opts);
  CHECK(res.used_lloyd_fallback);
  CHECK(res.factors.cost < 1e300);
}

TEST_CASE("ptas_sdl recovers an exactly sparse instance") {
  const Matrix dict = random_matrix(3, 5, 150);
  Matrix x = Matrix::Zero(6, 3);
  Rng rng(151);
  for (int i = 0; i < 6; ++i) x(i, i % 3) = 1.0 + rng.uniform();
  const Matrix a = x * dict;
  const PtasResult res = ptas_sdl(a, 3, 1, 0.5, 11);
  CHECK(res.factors.cost <= 1e-8 * std::max(1.0, a.squaredNorm()));
  CHECK(satisfies(res.factors.x, sparse_constraint(1)));
  CHECK(res.coreset_m == 6);
}

TEST_CASE("ptas_sdl with r = k approaches the truncated-svd floor") {
  const double eps = 0.5;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Matrix a = random_matrix(8, 6, hash2(seed, 3030));
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& sv = svd.singularValues();
    double floor = 0.0;
    for (int i = 2; i < sv.size(); ++i) floor += sv(i) * sv(i);
    const PtasResult res = ptas_sdl(a, 2, 2, eps, seed);
    CHECK(res.factors.cost >= floor - 1e-9 * std::max(1.0, floor));
    if (res.factors.cost <= (1.0 + 3.0 * eps) * floor + 1e-9) ++ok;
  }
  CHECK(ok >= 6);
}

TEST_CASE("ptas_sdl samples patterns once full enumeration busts the cap") {
  const Matrix a = random_matrix(9, 4, 160);
  PtasOptions opts;
  opts.cap = 10;
  opts.coreset_m = 4;
  opts.retries = 1;
  opts.pattern_budget = 25;
  const PtasResult res = ptas_sdl(a, 3, 1, 0.5, 5, opts);
  CHECK(res.sampled_patterns);
  CHECK(res.factors.cost < 1e300);
}

TEST_CASE("guess_sketch_kmeans decodes a separated instance from sketches") {
  // Two exact duplicate groups; the decoder sees only the sketches.
  Matrix a(6, 8);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 8; ++j) a(i, j) = (i < 3 ? 1.0 : -1.0) * (j + 1) * 0.25;
  SketchState st = SketchState::for_kmeans(6, 8, 2, 0.5, 77);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 8; ++j) st.ingest({i, j, a(i, j)});

  const GuessSketchResult res = guess_sketch_kmeans(st, 2, 0.5);
  CHECK(frob_cost(a, res.x, res.d) <= 1e-8 * a.squaredNorm());
  // Rows 0-2 share a label distinct from rows 3-5.
  const int g0 = res.x(0, 0) == 1.0 ? 0 : 1;
  for (int i = 0; i < 3; ++i) CHECK(res.x(i, g0) == 1.0);
  for (int i = 3; i < 6; ++i) CHECK(res.x(i, 1 - g0) == 1.0);
}

TEST_CASE("guess_sketch_kmeans score equals a dense recomputation") {
  const Matrix a = planted_clusters(5, 6, 2, 4.0, 0.4, 170);
  SketchState st = SketchState::for_kmeans(5, 6, 2, 1.0, 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) st.ingest({i, j, a(i, j)});
  const GuessSketchResult res = guess_sketch_kmeans(st, 2, 1.0);

  const Matrix w_dense = sketch_dense(st.w_spec());
  const Matrix m = res.x * res.d;
  Vector vec(5 * 6);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) vec(i * 6 + j) = m(i, j) - a(i, j);
  const double direct = (w_dense * vec).squaredNorm();
  CHECK(res.score == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("guess_sketch_kmeans enforces its candidate budget") {
  SketchState st(30, 3, sign_sketch(2, 30, 1), sign_sketch(2, 3, 2),
                 sign_sketch(2, 90, 3));
  CHECK_THROWS_AS(guess_sketch_kmeans(st, 2, 0.5), std::invalid_argument);
}

TEST_CASE("guess_sketch_sdl reproduces an exact discrete factorization") {
  Matrix dict = random_matrix(2, 8, 180);
  dict.row(0).normalize();
  dict.row(1).normalize();
  Matrix x(4, 2);
  x << 1, 0, -1, 0, 0, 1, 0, -1;
  const Matrix a = x * dict;
  SketchState st = SketchState::for_sdl(4, 8, 2, 1, 1, 0.5, 21);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j) st.ingest({i, j, a(i, j)});
  const GuessSketchResult res = guess_sketch_sdl(st, 2, 1, 1, 0.5);
  CHECK(frob_cost(a, res.x, res.d) <= 1e-10 * std::max(1.0, a.squaredNorm()));
  CHECK(satisfies(res.x, discrete_constraint(1, 1)));
}

TEST_CASE("guess_sketch_sdl budget check uses the support-times-digits count") {
  SketchState st(20, 3, sign_sketch(2, 20, 1), sign_sketch(2, 3, 2),
                 sign_sketch(2, 60, 3));
  CHECK_THROWS_AS(guess_sketch_sdl(st, 2, 1, 1, 0.5), std::invalid_argument);
}

TEST_CASE("sensitivity upper bounds: uniform data, dominant outlier, sup rule") {
  // Identical rows: zero residuals leave only the 1/|cluster| term.
  Matrix same = Matrix::Ones(16, 2);
  const Vector sig_same = sensitivity_upper_bounds(same, 2);
  for (int i = 0; i < 16; ++i) CHECK(sig_same(i) == doctest::Approx(0.5));

  // A far outlier saturates at 1.
  Matrix out = Matrix::Zero(12, 2);
  out(11, 0) = 1000.0;
  Rng rng(190);
  for (int i = 0; i < 11; ++i) out(i, 1) = rng.uniform();
  const Vector sig_out = sensitivity_upper_bounds(out, 1);
  CHECK(sig_out(11) == doctest::Approx(1.0));

  // sigma must dominate the true k = 1 sensitivity sup_c cost_i(c)/cost(c).
  const Matrix a = random_matrix(6, 1, 191);
  const Vector sigma = sensitivity_upper_bounds(a, 1);
  for (double c = -3.0; c <= 3.0; c += 0.01) {
    double total = 0.0;
    for (int i = 0; i < 6; ++i) total += (a(i, 0) - c) * (a(i, 0) - c);
    for (int i = 0; i < 6; ++i) {
      const double ratio = (a(i, 0) - c) * (a(i, 0) - c) / total;
      CHECK(sigma(i) >= ratio - 1e-9);
    }
  }
}

TEST_CASE("random_order prefix formula and degenerate whole-stream prefix") {
  const Matrix a = planted_clusters(40, 3, 2, 5.0, 0.4, 200);
  // alpha large enough that the buffer swallows the whole stream.
  const RandomOrderResult res = random_order_kmeans(a, 2, 0.5, 1.0, 9);
  CHECK(res.prefix_rows == 40);
  // Degenerate prefix: identical to solving the whole instance offline with
  // the same internally derived seed.
  const FactorPair offline = lloyd(a, 2, hash2(9ull, 0xF1), {.restarts = 5});
  CHECK(res.factors.cost == doctest::Approx(offline.cost).epsilon(1e-12));

  const double alpha = 0.05;
  RandomOrderOptions opts;
  opts.c3 = 0.25;
  const RandomOrderResult small =
      random_order_kmeans(a, 2, 1.0, alpha, 9, opts);
  const int expect =
      static_cast<int>(std::min(40.0, std::ceil(0.25 * alpha * 40 * 2 * 3 / 1.0)));
  CHECK(small.prefix_rows == std::max(1, expect));
}

TEST_CASE("random_order peak memory follows the documented word budget") {
  const Matrix a = planted_clusters(60, 4, 2, 5.0, 0.4, 210);
  RandomOrderOptions opts;
  opts.c3 = 0.5;
  opts.lloyd_restarts = 3;
  const RandomOrderResult res = random_order_kmeans(a, 2, 1.0, 0.1, 4, opts);
  const long long prefix = res.prefix_rows;
  const long long lloyd_words = 2 * 2 * 4 + 2 * prefix + 2;
  CHECK(res.peak_words == prefix * 4 + 2 * 4 + 60 + 4 + lloyd_words);
  CHECK(res.factors.cost ==
        doctest::Approx(frob_cost(a, res.factors.x, res.factors.d)));
}

TEST_CASE("random_order recovers planted clusters from a genuine prefix") {
  const Matrix base = planted_clusters(400, 2, 2, 10.0, 0.3, 220);
  const double offline = lloyd(base, 2, 17, {.restarts = 20}).cost;
  int ok = 0;
  const int shuffles = 10;
  for (std::uint64_t s = 0; s < shuffles; ++s) {
    Rng rng(hash2(s, 4040));
    const std::vector<int> perm = rng.permutation(400);
    Matrix shuffled(400, 2);
    for (int i = 0; i < 400; ++i) shuffled.row(i) = base.row(perm[i]);
    RandomOrderOptions opts;
    opts.c3 = 0.25;
    const RandomOrderResult res =
        random_order_kmeans(shuffled, 2, 1.0, 0.05, s, opts);
    CHECK(res.prefix_rows < 400);
    if (res.factors.cost <= (1.0 + 1.0) * offline) ++ok;
  }
  CHECK(ok >= 8);
}

TEST_CASE("random_order argument validation") {
  const Matrix a = random_matrix(5, 2, 230);
  CHECK_THROWS_AS(random_order_kmeans(a, 0, 0.5, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(random_order_kmeans(a, 2, 0.0, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(random_order_kmeans(a, 2, 0.5, 0.0, 1), std::invalid_argument);
}

#pragma once

// Solvers and decoders. Offline: exact brute force, Lloyd iteration, the
// two enumeration pipelines (k-means and r-sparse dictionary learning) that
// run on a reduced instance and a coreset, leverage score sampling, and the
// alternating pattern solver they share. Streaming: guess-the-sketch
// decoders that recover (X, D) from the three linear sketches alone.

#include "sketchfactor/coreset.hpp"
#include "sketchfactor/dimreduce.hpp"
#include "sketchfactor/matrix.hpp"
#include "sketchfactor/stream.hpp"

#include <cstdint>
#include <vector>

namespace sketchfactor {

inline constexpr long long kDefaultEnumerationCap = 2'000'000;

// Nearest-center assignment, ties to the lowest center index.
FactorPair assign_kmeans(const DesignMatrix& a, const Matrix& centers);

// Per-row optimal coding against a fixed dictionary: continuous when dmax < 0
// (least squares on each of the C(k,r) supports), discrete otherwise
// (integer coefficients in [-dmax, dmax], budget-checked against cap).
FactorPair sparse_code(const DesignMatrix& a, const Matrix& dict, int r,
                       int dmax = -1,
                       long long cap = kDefaultEnumerationCap);

// Exact k-means by enumerating set partitions of the rows into at most k
// blocks (restricted growth strings, so relabelings are visited once).
// Requires k^n <= cap.
FactorPair brute_force_kmeans(const DesignMatrix& a, int k,
                              long long cap = kDefaultEnumerationCap);

struct LloydOptions {
  int restarts = 1;
  int max_iters = 200;
  double tol = 1e-9;  // stop when the relative cost change drops below this
};

// Lloyd iteration with k-means++ seeding; empty clusters are reseeded to the
// point farthest from the cluster's previous center. Weights, if given,
// scale squared distances (and centroids become weighted means).
FactorPair lloyd(const DesignMatrix& a, int k, std::uint64_t seed,
                 const LloydOptions& opts = {});
FactorPair lloyd_weighted(const Matrix& rows, const Vector& weights, int k,
                          std::uint64_t seed, const LloydOptions& opts = {});

// Row sampling by exact leverage scores of M (m x c): p_i = ||q_i||^2 / c
// for an orthonormal basis Q of M's column space, discretized upward to
// powers of 1/2 and floored at 2/m. Draws are i.i.d. proportional to q;
// the rescale factor for a draw of row i is 1/sqrt(q_i s).
struct LeverageSample {
  std::vector<int> indices;  // s draws
  Vector rescale;            // s rescale factors
  Vector q;                  // per-row discretized probability mass
};
LeverageSample leverage_sample(const Matrix& m, int s, std::uint64_t seed);

// Sparsity pattern for a block of rows: supports[i] lists the dictionary
// rows the i-th row may use (sorted, at most r of them).
struct SparsityPattern {
  std::vector<std::vector<int>> supports;
};

struct PatternSolverOptions {
  int starts = 10;
  int max_iters = 500;
  double tol = 1e-8;  // relative objective change stopping rule
  std::uint64_t seed = 0x9d2c5680u;  // multi-start initialization stream
};

struct PatternSolveResult {
  Matrix x;  // m x k, supported on the pattern
  Matrix d;  // k x d
  double objective = 0.0;
  int iters = 0;
  std::vector<double> history;  // objective after every half-step pair
};

// Alternating least squares for min ||diag(sqrt(w)) (X D - rows)||_F^2 with
// X restricted to the pattern. The objective is checked to be non-increasing
// after every iteration; a violation throws, since it would mean a broken
// least squares step. The all-empty pattern returns X = 0 and every
// dictionary row equal to the weighted row mean.
PatternSolveResult pattern_solver(const Matrix& rows, const Vector& weights,
                                  const SparsityPattern& pattern, int k,
                                  const PatternSolverOptions& opts = {});

struct PtasOptions {
  int coreset_m = 0;  // 0 picks the largest enumerable size, at most 12 rows
  long long cap = kDefaultEnumerationCap;
  int retries = 3;            // fresh-seed repetitions, best lifted cost wins
  int pattern_budget = 200;   // sampled patterns when full enumeration busts
  ReduceOptions reduce;
};

struct PtasResult {
  FactorPair factors;
  double reduced_objective = 0.0;  // weighted objective of the chosen candidate
  bool used_lloyd_fallback = false;
  bool sampled_patterns = false;
  int coreset_m = 0;
};

// (1+eps)-style k-means pipeline: reduce, lightweight coreset, enumerate
// coreset partitions, weighted centroid candidates, lift the best, assign
// all rows. k == 1 returns the exact centroid solution.
PtasResult ptas_kmeans(const DesignMatrix& a, int k, double eps,
                       std::uint64_t seed, const PtasOptions& opts = {});

// r-sparse dictionary pipeline: reduce, dictionary coreset, enumerate
// sparsity patterns over the coreset rows, alternating solver per pattern,
// lift the best dictionary, sparse-code all rows.
PtasResult ptas_sdl(const DesignMatrix& a, int k, int r, double eps,
                    std::uint64_t seed, const PtasOptions& opts = {});

// Streaming decode result. The score is the sketched squared residual
// ||W vec(X D) - W vec(A)||^2; the true cost needs A, which the stream
// never stores, so callers holding A recompute it.
struct GuessSketchResult {
  Matrix x;
  Matrix d;
  double score = 0.0;
};

// Enumerates every assignment matrix X (k^n of them, capped), solves the
// sketched regression D = pinv(S X) (S A), re-assigns rows by nearest
// sketched center using A T, and keeps the candidate with the smallest
// W-sketch score. Ties keep the earliest candidate.
GuessSketchResult guess_sketch_kmeans(const SketchState& state, int k,
                                      double eps,
                                      long long cap = kDefaultEnumerationCap);

// Same decoder over r-sparse integer rows with coefficients in
// [-dmax, dmax]; the candidate count (C(k,r) (2 dmax + 1)^r)^n is capped.
GuessSketchResult guess_sketch_sdl(const SketchState& state, int k, int r,
                                   int dmax, double eps,
                                   long long cap = kDefaultEnumerationCap);

// Upper bounds on k-means row sensitivities from a Lloyd bicriteria
// solution: sigma_i = min(1, c (dist_i^2 / cost + 1 / cluster size)).
Vector sensitivity_upper_bounds(const DesignMatrix& a, int k, double c = 8.0);

struct RandomOrderOptions {
  double c3 = 4.0;       // prefix multiplier
  int lloyd_restarts = 5;
  bool use_ptas = false;  // solve the prefix with ptas_kmeans instead of Lloyd
  long long cap = kDefaultEnumerationCap;
};

struct RandomOrderResult {
  FactorPair factors;
  std::vector<int> assignment;  // cluster per arrival index
  int prefix_rows = 0;
  long long peak_words = 0;
};

// Bounded-sensitivity random-order solver: buffer the first
// m = min(n, ceil(c3 alpha n k d / eps^2)) arrivals, solve them offline,
// then assign every remaining arrival to its nearest center as it passes.
// Cost is accumulated online; rows are never stored beyond the prefix.
RandomOrderResult random_order_kmeans(const Matrix& arrivals, int k,
                                      double eps, double alpha,
                                      std::uint64_t seed,
                                      const RandomOrderOptions& opts = {});

}  // namespace sketchfactor

#pragma once

// Oblivious sketching matrices described implicitly: a SketchSpec pins the
// distribution, shape and seed, and any entry or column is regenerated on
// demand from the counter-based hash. Nothing quadratic in the data is ever
// stored, which is what makes the turnstile streaming module possible.
//
// Entry conventions per kind:
//   CountSketch  one nonzero per column, value +-1 (bucket and sign hashed
//                from the column index)
//   Sign         dense +-1/sqrt(rows)
//   Gaussian     dense N(0, 1/rows)
//   Composed     G * C with C a CountSketch into `inner` buckets and G a
//                rows x inner Gaussian with N(0, 1/rows) entries; column j
//                equals sign_C(j) times column bucket_C(j) of G
//
// All four satisfy E[S^T S] = I, so squared norms are preserved in
// expectation and the distortion helper measures the deviation.

#include "sketchfactor/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sketchfactor {

enum class SketchKind { CountSketch, Sign, Gaussian, ComposedGaussianCountSketch };

struct SketchSpec {
  SketchKind kind = SketchKind::Sign;
  int rows = 0;
  int cols = 0;
  std::uint64_t seed = 0;
  double scale = 1.0;  // entry scale; factories set the variance convention
  int inner = 0;       // inner CountSketch width, composed kind only
};

SketchSpec count_sketch(int rows, int cols, std::uint64_t seed);
SketchSpec sign_sketch(int rows, int cols, std::uint64_t seed);
SketchSpec gaussian_sketch(int rows, int cols, std::uint64_t seed);
// inner <= 0 picks the default width max(16, 4 * rows * rows).
SketchSpec composed_sketch(int rows, int cols, std::uint64_t seed, int inner = 0);

// Bucket of column j of a CountSketch-style hash into `rows` buckets.
int count_sketch_bucket(const SketchSpec& spec, int col);
// Sign (+1/-1) of column j.
double count_sketch_sign(const SketchSpec& spec, int col);

double sketch_entry(const SketchSpec& spec, int row, int col);

// Column col as a dense vector of length spec.rows.
Vector sketch_column(const SketchSpec& spec, int col);

// Materialized spec.rows x spec.cols matrix; test and debug helper only.
Matrix sketch_dense(const SketchSpec& spec);

// S * A. Requires spec.cols == a.rows(). CountSketch takes the sparse path.
Matrix apply_left(const SketchSpec& spec, const Matrix& a);

// A * S^T, the right-sketch convention: output column i is A times row i of
// the sketch matrix. Requires spec.cols == a.cols(); result is n x rows.
Matrix apply_right(const Matrix& a, const SketchSpec& spec);

// max_v | ||S v||^2 - ||v||^2 | / ||v||^2 over the given vectors.
// Rejects empty sets and zero vectors.
double embedding_distortion(const SketchSpec& spec,
                            const std::vector<Vector>& vectors);

// One-line serialization "kind rows cols seed" used inside experiment
// configs. Parsing derives the default inner width for the composed kind.
std::string format_sketch_spec(const SketchSpec& spec);
SketchSpec parse_sketch_spec(const std::string& line);

}  // namespace sketchfactor

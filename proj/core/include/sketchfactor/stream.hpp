#pragma once

// Streaming state for factorization recovery: three linear sketches of A
// (left sketch S A, right sketch A T, flattened sketch W vec(A)) maintained
// under turnstile updates A_ij += delta or whole-row arrivals. Linearity of
// the sketches makes the final state independent of update order and equal
// to the dense products computed offline.
//
// Space accounting is in words (one double = one word). The resident count
// is exactly s*d + n*t + w; ingest paths accumulate entry by entry so the
// transient overhead is O(1) for turnstile updates and d words while a row
// is being delivered.

#include "sketchfactor/matrix.hpp"
#include "sketchfactor/sketch.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sketchfactor {

struct TurnstileUpdate {
  int i = 0;
  int j = 0;
  double delta = 0.0;
};

struct SpaceReport {
  long long resident_words = 0;
  long long peak_words = 0;
  long long update_count = 0;
};

// Sketch sizes for the recovery guarantees, natural log convention:
//   k-means: s = ceil(4k/eps), t = ceil(8 ln(nk)/eps^2),
//            w = ceil(4 k^2 ln(n)/eps^3)
//   sparse dictionary (coefficients bounded by dmax): s = ceil(4k/eps),
//            t = ceil(8 r ln(n k m)/eps^2), w = ceil(4 k^2 ln(n m)/eps^3)
//            with m = max(dmax, 2)
struct SketchSizes {
  int s = 0;
  int t = 0;
  int w = 0;
};
SketchSizes sketch_sizes_kmeans(int n, int k, double eps);
SketchSizes sketch_sizes_sdl(int n, int k, int r, int dmax, double eps);

class SketchState {
 public:
  // S: s x n left sketch, T: t x d right sketch, W: w x (n*d) sketch of
  // vec(A) in row-major order. All three default to the sign kind.
  SketchState(int n, int d, SketchSpec s_spec, SketchSpec t_spec,
              SketchSpec w_spec);

  static SketchState for_kmeans(int n, int d, int k, double eps,
                                std::uint64_t seed);
  static SketchState for_sdl(int n, int d, int k, int r, int dmax, double eps,
                             std::uint64_t seed);

  // A_ij += delta. A zero delta still counts as an update.
  void ingest(const TurnstileUpdate& u);

  // Row arrival: row i set to the given vector. A row index seen before is
  // rejected, arrivals are single-pass.
  void ingest_row(int i, const Vector& row);

  SpaceReport space_report() const;

  int n() const { return n_; }
  int d() const { return d_; }
  const SketchSpec& s_spec() const { return s_spec_; }
  const SketchSpec& t_spec() const { return t_spec_; }
  const SketchSpec& w_spec() const { return w_spec_; }
  const Matrix& sa() const { return sa_; }
  const Matrix& at() const { return at_; }
  const Vector& wvec() const { return wvec_; }

 private:
  int n_ = 0;
  int d_ = 0;
  SketchSpec s_spec_, t_spec_, w_spec_;
  Matrix sa_;    // s x d
  Matrix at_;    // n x t
  Vector wvec_;  // w
  std::vector<bool> row_seen_;
  long long update_count_ = 0;
  long long transient_peak_ = 0;
};

// Stream file formats.
//   turnstile: header "turnstile n d", then lines "i j delta"
//   rows:      header "rows n d", then n lines of d decimals
struct TurnstileFile {
  int n = 0;
  int d = 0;
  std::vector<TurnstileUpdate> updates;
};

TurnstileFile read_turnstile_file(const std::string& path);
void write_turnstile_file(const std::string& path, int n, int d,
                          const std::vector<TurnstileUpdate>& updates);

struct RowStreamFile {
  int n = 0;
  int d = 0;
  Matrix rows;
};

RowStreamFile read_row_stream_file(const std::string& path);
void write_row_stream_file(const std::string& path, const Matrix& rows);

}  // namespace sketchfactor

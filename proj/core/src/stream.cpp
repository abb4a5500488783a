#include "sketchfactor/stream.hpp"

#include "sketchfactor/rng.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sketchfactor {

namespace {

void check_update_range(int i, int j, int n, int d) {
  if (i < 0 || i >= n || j < 0 || j >= d)
    throw std::out_of_range("stream update index out of range");
}

// dest += delta * column `col` of the sketch matrix, accumulated entry by
// entry so no column buffer is materialized.
template <typename Dest>
void accumulate_column(Dest&& dest, const SketchSpec& spec, int col,
                       double delta) {
  if (spec.kind == SketchKind::CountSketch) {
    dest(count_sketch_bucket(spec, col)) +=
        delta * spec.scale * count_sketch_sign(spec, col);
    return;
  }
  for (int r = 0; r < spec.rows; ++r)
    dest(r) += delta * sketch_entry(spec, r, col);
}

}  // namespace

SketchSizes sketch_sizes_kmeans(int n, int k, double eps) {
  if (n < 1 || k < 1 || eps <= 0.0)
    throw std::invalid_argument("sketch sizes: need n >= 1, k >= 1, eps > 0");
  SketchSizes z;
  z.s = static_cast<int>(std::ceil(4.0 * k / eps));
  z.t = static_cast<int>(std::ceil(8.0 * std::log(double(n) * k) / (eps * eps)));
  z.w = static_cast<int>(
      std::ceil(4.0 * k * k * std::log(double(n)) / (eps * eps * eps)));
  z.t = std::max(z.t, 1);
  z.w = std::max(z.w, 1);
  return z;
}

SketchSizes sketch_sizes_sdl(int n, int k, int r, int dmax, double eps) {
  if (n < 1 || k < 1 || r < 1 || eps <= 0.0)
    throw std::invalid_argument("sketch sizes: bad parameters");
  const double m = std::max(dmax, 2);
  SketchSizes z;
  z.s = static_cast<int>(std::ceil(4.0 * k / eps));
  z.t = static_cast<int>(
      std::ceil(8.0 * r * std::log(double(n) * k * m) / (eps * eps)));
  z.w = static_cast<int>(
      std::ceil(4.0 * k * k * std::log(double(n) * m) / (eps * eps * eps)));
  return z;
}

SketchState::SketchState(int n, int d, SketchSpec s_spec, SketchSpec t_spec,
                         SketchSpec w_spec)
    : n_(n),
      d_(d),
      s_spec_(s_spec),
      t_spec_(t_spec),
      w_spec_(w_spec),
      row_seen_(static_cast<std::size_t>(n), false) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("sketch state: need n >= 1 and d >= 1");
  if (static_cast<long long>(n) * d >
      static_cast<long long>(std::numeric_limits<int>::max()))
    throw std::invalid_argument("sketch state: n*d overflows the index type");
  if (s_spec_.cols != n)
    throw std::invalid_argument("sketch state: S must have n columns");
  if (t_spec_.cols != d)
    throw std::invalid_argument("sketch state: T must have d columns");
  if (w_spec_.cols != n * d)
    throw std::invalid_argument("sketch state: W must have n*d columns");
  sa_ = Matrix::Zero(s_spec_.rows, d);
  at_ = Matrix::Zero(n, t_spec_.rows);
  wvec_ = Vector::Zero(w_spec_.rows);
}

SketchState SketchState::for_kmeans(int n, int d, int k, double eps,
                                    std::uint64_t seed) {
  const SketchSizes z = sketch_sizes_kmeans(n, k, eps);
  return SketchState(n, d, sign_sketch(z.s, n, hash2(seed, 0x51)),
                     sign_sketch(z.t, d, hash2(seed, 0x52)),
                     sign_sketch(z.w, n * d, hash2(seed, 0x53)));
}

SketchState SketchState::for_sdl(int n, int d, int k, int r, int dmax,
                                 double eps, std::uint64_t seed) {
  const SketchSizes z = sketch_sizes_sdl(n, k, r, dmax, eps);
  return SketchState(n, d, sign_sketch(z.s, n, hash2(seed, 0x51)),
                     sign_sketch(z.t, d, hash2(seed, 0x52)),
                     sign_sketch(z.w, n * d, hash2(seed, 0x53)));
}

void SketchState::ingest(const TurnstileUpdate& u) {
  check_update_range(u.i, u.j, n_, d_);
  if (!std::isfinite(u.delta))
    throw std::invalid_argument("turnstile update: non-finite delta");
  ++update_count_;
  if (u.delta == 0.0) return;
  accumulate_column([this, &u](int r) -> double& { return sa_(r, u.j); },
                    s_spec_, u.i, u.delta);
  accumulate_column([this, &u](int r) -> double& { return at_(u.i, r); },
                    t_spec_, u.j, u.delta);
  accumulate_column([this](int r) -> double& { return wvec_(r); }, w_spec_,
                    u.i * d_ + u.j, u.delta);
}

void SketchState::ingest_row(int i, const Vector& row) {
  if (i < 0 || i >= n_) throw std::out_of_range("row index out of range");
  if (row.size() != d_)
    throw std::invalid_argument("row arrival: wrong dimension");
  if (row_seen_[static_cast<std::size_t>(i)])
    throw std::invalid_argument("row arrival: row index seen before");
  if (!row.allFinite())
    throw std::invalid_argument("row arrival: non-finite entry");
  row_seen_[static_cast<std::size_t>(i)] = true;
  transient_peak_ = std::max(transient_peak_, static_cast<long long>(d_));
  ++update_count_;
  for (int j = 0; j < d_; ++j) {
    const double v = row(j);
    if (v == 0.0) continue;
    accumulate_column([this, i, j](int r) -> double& { return sa_(r, j); },
                      s_spec_, i, v);
    accumulate_column([this, i](int r) -> double& { return at_(i, r); },
                      t_spec_, j, v);
    accumulate_column([this](int r) -> double& { return wvec_(r); }, w_spec_,
                      i * d_ + j, v);
  }
}

SpaceReport SketchState::space_report() const {
  SpaceReport rep;
  rep.resident_words = static_cast<long long>(s_spec_.rows) * d_ +
                       static_cast<long long>(n_) * t_spec_.rows +
                       w_spec_.rows;
  rep.peak_words = rep.resident_words + transient_peak_;
  rep.update_count = update_count_;
  return rep;
}

TurnstileFile read_turnstile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stream file: " + path);
  std::string tag;
  TurnstileFile f;
  if (!(in >> tag >> f.n >> f.d) || tag != "turnstile")
    throw std::runtime_error("stream header: expected 'turnstile n d'");
  if (f.n < 1 || f.d < 1)
    throw std::runtime_error("stream header: n and d must be >= 1");
  TurnstileUpdate u;
  while (in >> u.i >> u.j >> u.delta) {
    check_update_range(u.i, u.j, f.n, f.d);
    f.updates.push_back(u);
  }
  if (!in.eof() && in.fail()) {
    in.clear();
    std::string rest;
    std::getline(in, rest);
    throw std::runtime_error("stream body: malformed update line near '" + rest + "'");
  }
  return f;
}

void write_turnstile_file(const std::string& path, int n, int d,
                          const std::vector<TurnstileUpdate>& updates) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write stream file: " + path);
  out << "turnstile " << n << " " << d << "\n";
  char buf[32];
  for (const TurnstileUpdate& u : updates) {
    std::snprintf(buf, sizeof buf, "%.17g", u.delta);
    out << u.i << " " << u.j << " " << buf << "\n";
  }
}

RowStreamFile read_row_stream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stream file: " + path);
  std::string tag;
  RowStreamFile f;
  if (!(in >> tag >> f.n >> f.d) || tag != "rows")
    throw std::runtime_error("stream header: expected 'rows n d'");
  if (f.n < 1 || f.d < 1)
    throw std::runtime_error("stream header: n and d must be >= 1");
  f.rows = Matrix(f.n, f.d);
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.d; ++j)
      if (!(in >> f.rows(i, j)))
        throw std::runtime_error("stream body: fewer rows than declared");
  return f;
}

void write_row_stream_file(const std::string& path, const Matrix& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write stream file: " + path);
  out << "rows " << rows.rows() << " " << rows.cols() << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", rows(i, j));
      out << buf << (j + 1 < rows.cols() ? " " : "");
    }
    out << "\n";
  }
}

}  // namespace sketchfactor

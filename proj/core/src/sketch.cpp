#include "sketchfactor/sketch.hpp"

#include "sketchfactor/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sketchfactor {

namespace {

// Key-domain tags so the per-kind streams never collide.
constexpr std::uint64_t kTagCountBucket = 0x431c5371u;
constexpr std::uint64_t kTagCountSign = 0x8f2d1be7u;
constexpr std::uint64_t kTagSign = 0x5bd1e995u;
constexpr std::uint64_t kTagGauss = 0x27d4eb2fu;

void check_spec(const SketchSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1)
    throw std::invalid_argument("sketch spec needs rows >= 1 and cols >= 1");
  if (spec.kind == SketchKind::ComposedGaussianCountSketch && spec.inner < 1)
    throw std::invalid_argument("composed sketch spec needs inner >= 1");
}

void check_col(const SketchSpec& spec, int col) {
  if (col < 0 || col >= spec.cols)
    throw std::out_of_range("sketch column index out of range");
}

int default_inner(int rows) { return std::max(16, 4 * rows * rows); }

double gauss_at(const SketchSpec& spec, int row, int col) {
  return spec.scale * u64_to_gaussian(hash4(spec.seed, kTagGauss,
                                            static_cast<std::uint64_t>(col),
                                            static_cast<std::uint64_t>(row)));
}

}  // namespace

SketchSpec count_sketch(int rows, int cols, std::uint64_t seed) {
  SketchSpec s{SketchKind::CountSketch, rows, cols, seed, 1.0, 0};
  check_spec(s);
  return s;
}

SketchSpec sign_sketch(int rows, int cols, std::uint64_t seed) {
  SketchSpec s{SketchKind::Sign, rows, cols, seed,
               1.0 / std::sqrt(static_cast<double>(rows)), 0};
  check_spec(s);
  return s;
}

SketchSpec gaussian_sketch(int rows, int cols, std::uint64_t seed) {
  SketchSpec s{SketchKind::Gaussian, rows, cols, seed,
               1.0 / std::sqrt(static_cast<double>(rows)), 0};
  check_spec(s);
  return s;
}

SketchSpec composed_sketch(int rows, int cols, std::uint64_t seed, int inner) {
  SketchSpec s{SketchKind::ComposedGaussianCountSketch, rows, cols, seed,
               1.0 / std::sqrt(static_cast<double>(rows)),
               inner > 0 ? inner : default_inner(rows)};
  check_spec(s);
  return s;
}

int count_sketch_bucket(const SketchSpec& spec, int col) {
  check_col(spec, col);
  const int buckets = spec.kind == SketchKind::ComposedGaussianCountSketch
                          ? spec.inner
                          : spec.rows;
  return static_cast<int>(hash3(spec.seed, kTagCountBucket,
                                static_cast<std::uint64_t>(col)) %
                          static_cast<std::uint64_t>(buckets));
}

double count_sketch_sign(const SketchSpec& spec, int col) {
  check_col(spec, col);
  return (hash3(spec.seed, kTagCountSign, static_cast<std::uint64_t>(col)) & 1u)
             ? 1.0
             : -1.0;
}

double sketch_entry(const SketchSpec& spec, int row, int col) {
  check_spec(spec);
  check_col(spec, col);
  if (row < 0 || row >= spec.rows)
    throw std::out_of_range("sketch row index out of range");
  switch (spec.kind) {
    case SketchKind::CountSketch:
      return row == count_sketch_bucket(spec, col)
                 ? spec.scale * count_sketch_sign(spec, col)
                 : 0.0;
    case SketchKind::Sign:
      return spec.scale *
             ((hash4(spec.seed, kTagSign, static_cast<std::uint64_t>(col),
                     static_cast<std::uint64_t>(row)) &
               1u)
                  ? 1.0
                  : -1.0);
    case SketchKind::Gaussian:
      return gauss_at(spec, row, col);
    case SketchKind::ComposedGaussianCountSketch: {
      const int bucket = count_sketch_bucket(spec, col);
      return count_sketch_sign(spec, col) * gauss_at(spec, row, bucket);
    }
  }
  throw std::logic_error("unreachable sketch kind");
}

Vector sketch_column(const SketchSpec& spec, int col) {
  check_spec(spec);
  check_col(spec, col);
  Vector v = Vector::Zero(spec.rows);
  switch (spec.kind) {
    case SketchKind::CountSketch:
      v(count_sketch_bucket(spec, col)) = spec.scale * count_sketch_sign(spec, col);
      break;
    case SketchKind::ComposedGaussianCountSketch: {
      const int bucket = count_sketch_bucket(spec, col);
      const double sign = count_sketch_sign(spec, col);
      for (int r = 0; r < spec.rows; ++r) v(r) = sign * gauss_at(spec, r, bucket);
      break;
    }
    default:
      for (int r = 0; r < spec.rows; ++r) v(r) = sketch_entry(spec, r, col);
  }
  return v;
}

Matrix sketch_dense(const SketchSpec& spec) {
  check_spec(spec);
  Matrix m(spec.rows, spec.cols);
  for (int c = 0; c < spec.cols; ++c) m.col(c) = sketch_column(spec, c);
  return m;
}

Matrix apply_left(const SketchSpec& spec, const Matrix& a) {
  check_spec(spec);
  if (spec.cols != a.rows())
    throw std::invalid_argument("apply_left: spec.cols must equal a.rows()");
  Matrix out = Matrix::Zero(spec.rows, a.cols());
  if (spec.kind == SketchKind::CountSketch) {
    for (int j = 0; j < spec.cols; ++j)
      out.row(count_sketch_bucket(spec, j)) +=
          spec.scale * count_sketch_sign(spec, j) * a.row(j);
    return out;
  }
  for (int j = 0; j < spec.cols; ++j)
    out += sketch_column(spec, j) * a.row(j);
  return out;
}

Matrix apply_right(const Matrix& a, const SketchSpec& spec) {
  check_spec(spec);
  if (spec.cols != a.cols())
    throw std::invalid_argument("apply_right: spec.cols must equal a.cols()");
  Matrix out = Matrix::Zero(a.rows(), spec.rows);
  for (int j = 0; j < spec.cols; ++j)
    out += a.col(j) * sketch_column(spec, j).transpose();
  return out;
}

double embedding_distortion(const SketchSpec& spec,
                            const std::vector<Vector>& vectors) {
  check_spec(spec);
  if (vectors.empty())
    throw std::invalid_argument("embedding_distortion: empty vector set");
  double worst = 0.0;
  for (const Vector& v : vectors) {
    if (v.size() != spec.cols)
      throw std::invalid_argument("embedding_distortion: dimension mismatch");
    const double norm2 = v.squaredNorm();
    if (norm2 == 0.0)
      throw std::invalid_argument("embedding_distortion: zero vector");
    Vector sv = Vector::Zero(spec.rows);
    for (int j = 0; j < spec.cols; ++j)
      if (v(j) != 0.0) sv += v(j) * sketch_column(spec, j);
    worst = std::max(worst, std::abs(sv.squaredNorm() - norm2) / norm2);
  }
  return worst;
}

std::string format_sketch_spec(const SketchSpec& spec) {
  const char* name = nullptr;
  switch (spec.kind) {
    case SketchKind::CountSketch: name = "countsketch"; break;
    case SketchKind::Sign: name = "sign"; break;
    case SketchKind::Gaussian: name = "gaussian"; break;
    case SketchKind::ComposedGaussianCountSketch: name = "composed"; break;
  }
  std::ostringstream out;
  out << name << " " << spec.rows << " " << spec.cols << " " << spec.seed;
  return out.str();
}

SketchSpec parse_sketch_spec(const std::string& line) {
  std::istringstream in(line);
  std::string name;
  long long rows = 0, cols = 0;
  std::uint64_t seed = 0;
  if (!(in >> name >> rows >> cols >> seed))
    throw std::runtime_error("sketch spec line: expected 'kind rows cols seed'");
  const int r = static_cast<int>(rows);
  const int c = static_cast<int>(cols);
  if (name == "countsketch") return count_sketch(r, c, seed);
  if (name == "sign") return sign_sketch(r, c, seed);
  if (name == "gaussian") return gaussian_sketch(r, c, seed);
  if (name == "composed") return composed_sketch(r, c, seed);
  throw std::runtime_error("sketch spec line: unknown kind '" + name + "'");
}

}  // namespace sketchfactor

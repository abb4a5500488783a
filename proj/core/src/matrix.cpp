#include "sketchfactor/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace sketchfactor {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool is_integer(double v) { return v == std::floor(v); }

// Next subset of {0..k-1} of size r in lexicographic order; returns false
// after the last one.
bool next_combination(std::vector<int>& c, int k) {
  const int r = static_cast<int>(c.size());
  for (int i = r - 1; i >= 0; --i) {
    if (c[i] < k - (r - i)) {
      ++c[i];
      for (int j = i + 1; j < r; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

Constraint kmeans_constraint() { return {ConstraintKind::KMeansAssignment, 1, 1}; }

Constraint sparse_constraint(int r) {
  require(r >= 1, "sparse constraint needs r >= 1");
  return {ConstraintKind::SparseCode, r, 1};
}

Constraint discrete_constraint(int r, int dmax) {
  require(r >= 1, "discrete constraint needs r >= 1");
  require(dmax >= 1, "discrete constraint needs dmax >= 1");
  return {ConstraintKind::DiscreteSparseCode, r, dmax};
}

bool satisfies(const Matrix& x, const Constraint& c) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int nonzeros = 0;
    int ones = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      if (v == 0.0) continue;
      ++nonzeros;
      if (v == 1.0) ++ones;
      if (c.kind == ConstraintKind::DiscreteSparseCode &&
          (!is_integer(v) || std::abs(v) > c.dmax))
        return false;
    }
    switch (c.kind) {
      case ConstraintKind::KMeansAssignment:
        if (nonzeros != 1 || ones != 1) return false;
        break;
      case ConstraintKind::SparseCode:
      case ConstraintKind::DiscreteSparseCode:
        if (nonzeros > c.r) return false;
        break;
    }
  }
  return true;
}

double frob_cost(const DesignMatrix& a, const Matrix& x, const Matrix& d) {
  require(x.rows() == a.rows(), "frob_cost: X row count != A row count");
  require(x.cols() == d.rows(), "frob_cost: X column count != D row count");
  require(d.cols() == a.cols(), "frob_cost: D column count != A column count");
  return (x * d - a).squaredNorm();
}

FactorPair make_factor_pair(const DesignMatrix& a, const Matrix& x,
                            const Matrix& d, const Constraint& c) {
  require(a.allFinite() && x.allFinite() && d.allFinite(),
          "make_factor_pair: non-finite entries");
  require(satisfies(x, c), "make_factor_pair: X violates the constraint");
  FactorPair fp;
  fp.x = x;
  fp.d = d;
  fp.constraint = c;
  fp.cost = frob_cost(a, x, d);
  return fp;
}

Matrix pinv(const Matrix& m) {
  require(m.allFinite(), "pinv: non-finite entries");
  if (m.rows() == 0 || m.cols() == 0) return Matrix::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? kSingularCutoff * sv(0) : 0.0;
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix least_squares(const Matrix& m, const Matrix& b) {
  require(m.allFinite() && b.allFinite(), "least_squares: non-finite entries");
  require(m.rows() == b.rows(), "least_squares: row counts differ");
  return pinv(m) * b;
}

double discrete_candidates_per_row(int k, int r, int dmax) {
  double combos = 1.0;
  for (int i = 0; i < r; ++i) combos = combos * (k - i) / (i + 1);
  return combos * std::pow(2.0 * dmax + 1.0, r);
}

RowFit fit_row(const Vector& row, const Matrix& dict, const Constraint& c) {
  const int k = static_cast<int>(dict.rows());
  require(k >= 1, "fit_row: empty dictionary");
  require(row.size() == dict.cols(), "fit_row: dimension mismatch");
  RowFit best;
  best.cost = row.squaredNorm();
  best.code = Vector::Zero(k);

  if (c.kind == ConstraintKind::KMeansAssignment) {
    int arg = 0;
    double min_cost = (row.transpose() - dict.row(0)).squaredNorm();
    for (int j = 1; j < k; ++j) {
      const double cost = (row.transpose() - dict.row(j)).squaredNorm();
      if (cost < min_cost) {
        min_cost = cost;
        arg = j;
      }
    }
    best.cost = min_cost;
    best.code(arg) = 1.0;
    return best;
  }

  // The zero code is feasible for both sparse kinds, so it seeds `best` and
  // strict comparisons keep the earliest enumerated candidate on ties.
  const int r = std::min(c.r, k);
  std::vector<int> support(r);
  for (int i = 0; i < r; ++i) support[i] = i;
  bool more = r > 0;
  while (more) {
    if (c.kind == ConstraintKind::SparseCode) {
      Matrix basis(dict.cols(), r);
      for (int i = 0; i < r; ++i) basis.col(i) = dict.row(support[i]).transpose();
      const Matrix coef = least_squares(basis, row);
      const double cost = (basis * coef - row).squaredNorm();
      if (cost < best.cost) {
        best.cost = cost;
        best.code = Vector::Zero(k);
        for (int i = 0; i < r; ++i) best.code(support[i]) = coef(i, 0);
      }
    } else {
      const int radix = 2 * c.dmax + 1;
      long long tuples = 1;
      for (int i = 0; i < r; ++i) tuples *= radix;
      for (long long code_id = 0; code_id < tuples; ++code_id) {
        long long rem = code_id;
        Vector coef(r);
        for (int i = 0; i < r; ++i) {
          coef(i) = static_cast<double>(rem % radix - c.dmax);
          rem /= radix;
        }
        Vector fitted = Vector::Zero(row.size());
        for (int i = 0; i < r; ++i)
          fitted += coef(i) * dict.row(support[i]).transpose();
        const double cost = (fitted - row).squaredNorm();
        if (cost < best.cost) {
          best.cost = cost;
          best.code = Vector::Zero(k);
          for (int i = 0; i < r; ++i) best.code(support[i]) = coef(i);
        }
      }
    }
    more = next_combination(support, k);
  }
  return best;
}

DesignMatrix parse_design_matrix(std::istream& in) {
  long long n = 0, d = 0;
  if (!(in >> n >> d)) throw std::runtime_error("matrix header: expected 'n d'");
  if (n < 1 || d < 1) throw std::runtime_error("matrix header: n and d must be >= 1");
  DesignMatrix a(n, d);
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < d; ++j)
      if (!(in >> a(i, j)))
        throw std::runtime_error("matrix body: fewer entries than n*d");
  if (!a.allFinite()) throw std::runtime_error("matrix body: non-finite entry");
  return a;
}

void write_design_matrix(std::ostream& out, const DesignMatrix& a) {
  out << a.rows() << " " << a.cols() << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
      out << buf << (j + 1 < a.cols() ? " " : "");
    }
    out << "\n";
  }
}

DesignMatrix load_design_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  return parse_design_matrix(in);
}

void save_design_matrix(const std::string& path, const DesignMatrix& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix file: " + path);
  write_design_matrix(out, a);
}

}  // namespace sketchfactor

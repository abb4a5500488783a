#pragma once

// Dense numerics layer shared by every other module: the design matrix
// convention (n rows of d-dimensional points, row-major so vec(A) is the
// contiguous data), factorization costs, constraint checks, and the
// SVD-backed least squares / pseudoinverse pair. Least squares and pinv
// share one singular value cutoff so their rank decisions always agree.

#include <Eigen/Dense>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace sketchfactor {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// The n x d input. Rows are data points.
using DesignMatrix = Matrix;

// Relative cutoff under which a singular value is treated as zero.
inline constexpr double kSingularCutoff = 1e-9;

// Feasible sets for the left factor X.
enum class ConstraintKind {
  KMeansAssignment,   // each row of X is one-hot
  SparseCode,         // each row of X has at most r nonzeros
  DiscreteSparseCode  // additionally each nonzero is an integer in [-dmax, dmax]
};

struct Constraint {
  ConstraintKind kind = ConstraintKind::KMeansAssignment;
  int r = 1;     // row sparsity bound, used by the sparse kinds
  int dmax = 1;  // coefficient magnitude bound, used by the discrete kind
};

Constraint kmeans_constraint();
Constraint sparse_constraint(int r);
Constraint discrete_constraint(int r, int dmax);

// Whether every row of x lies in the constraint's feasible set.
bool satisfies(const Matrix& x, const Constraint& c);

// A factorization A ~ X D together with the constraint X lives in and the
// squared Frobenius residual against the matrix it was built from.
struct FactorPair {
  Matrix x;  // n x k
  Matrix d;  // k x d
  Constraint constraint;
  double cost = 0.0;
};

// Validates shapes, finiteness and the constraint, then recomputes the cost
// from scratch.
FactorPair make_factor_pair(const DesignMatrix& a, const Matrix& x,
                            const Matrix& d, const Constraint& c);

// ||X D - A||_F^2 with shape checking.
double frob_cost(const DesignMatrix& a, const Matrix& x, const Matrix& d);

// Moore-Penrose pseudoinverse. Singular values at or below
// kSingularCutoff * sigma_max are dropped.
Matrix pinv(const Matrix& m);

// argmin_Z ||M Z - B||_F of minimum Frobenius norm, i.e. pinv(M) * B.
// Throws on non-finite input or mismatched row counts.
Matrix least_squares(const Matrix& m, const Matrix& b);

// Best fit of a single row against a dictionary under a constraint:
// the optimal feasible code and its squared residual. For the discrete kind
// all supports and integer coefficient tuples are enumerated.
struct RowFit {
  double cost = 0.0;
  Vector code;  // length k
};
RowFit fit_row(const Vector& row, const Matrix& dict, const Constraint& c);

// Number of (support, coefficient) candidates fit_row enumerates per row
// under a discrete constraint; callers check it against their budget.
double discrete_candidates_per_row(int k, int r, int dmax);

// Text format: a "n d" header line followed by n rows of d decimal entries.
DesignMatrix load_design_matrix(const std::string& path);
void save_design_matrix(const std::string& path, const DesignMatrix& a);
DesignMatrix parse_design_matrix(std::istream& in);
void write_design_matrix(std::ostream& out, const DesignMatrix& a);

}  // namespace sketchfactor

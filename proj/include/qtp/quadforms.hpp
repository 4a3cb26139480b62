#pragma once

// Quadratic functions x -> x'Ax + b'x + c and the dense linear algebra the
// analyzer needs on them (Loewner order test, pseudoinverse, unconstrained
// maximization of a Lagrangian).

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace qtp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class QuadraticForm {
public:
  QuadraticForm() = default;
  /// Zero form on R^dim.
  explicit QuadraticForm(int dim);
  /// A is symmetrized as (A + A')/2.
  QuadraticForm(Matrix a, Vector b, double c = 0.0);

  static QuadraticForm linear(Vector b, double c = 0.0);
  static QuadraticForm constant(int dim, double c);

  int dim() const { return static_cast<int>(b_.size()); }
  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  double c() const { return c_; }

  double evaluate(const Vector& x) const;
  bool is_linear() const;

  QuadraticForm operator+(const QuadraticForm& o) const;
  QuadraticForm operator-(const QuadraticForm& o) const;
  QuadraticForm operator-() const;
  QuadraticForm operator*(double s) const;
  friend QuadraticForm operator*(double s, const QuadraticForm& q) { return q * s; }

  bool operator==(const QuadraticForm&) const = default;

private:
  Matrix a_;
  Vector b_;
  double c_ = 0.0;
};

/// x -> Mx + m, from R^in to R^out.
class AffineMap {
public:
  AffineMap() = default;
  AffineMap(Matrix m, Vector offset);
  static AffineMap identity(int dim);

  int in_dim() const { return static_cast<int>(m_.cols()); }
  int out_dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  const Vector& offset() const { return offset_; }

  Vector apply(const Vector& x) const { return m_ * x + offset_; }

private:
  Matrix m_;
  Vector offset_;
};

/// Componentwise quadratic map x -> (f_1(x), ..., f_out(x)).
class QuadraticMap {
public:
  QuadraticMap() = default;
  explicit QuadraticMap(std::vector<QuadraticForm> rows);

  int in_dim() const;
  int out_dim() const { return static_cast<int>(rows_.size()); }
  const std::vector<QuadraticForm>& rows() const { return rows_; }

  Vector apply(const Vector& x) const;

private:
  std::vector<QuadraticForm> rows_;
};

/// p o T for affine T. Throws dimension_error.
QuadraticForm compose_affine(const QuadraticForm& p, const AffineMap& t);

/// p o T for quadratic T; p must be linear (else nonlinear_composition_error).
QuadraticForm compose_quadratic(const QuadraticForm& p, const QuadraticMap& t);

/// The (d+1)x(d+1) matrix [[c, b'/2], [b/2, A]].
Matrix shor_matrix(const QuadraticForm& g);

/// (d+1)x(d+1) matrix with y at (0,0) and zeros elsewhere.
Matrix n_matrix(double y, int size);

/// Default PSD tolerance 1e-8 * (1 + ||S||_F).
double default_psd_tolerance(const Matrix& s);

/// max eigenvalue(S) <= tol. Throws numerical_error if the decomposition fails.
bool is_negative_semidefinite(const Matrix& s, double tol);
bool is_negative_semidefinite(const Matrix& s);

double max_eigenvalue(const Matrix& s);

/// Moore-Penrose inverse of a symmetric matrix by eigenvalue truncation:
/// eigenvalues with |l| <= rank_tol * max|l| are treated as zero.
Matrix pseudoinverse(const Matrix& s, double rank_tol = 1e-10);

struct WeightedConstraint {
  const QuadraticForm* form;
  double multiplier;
};

struct PolicyValueOptions {
  double psd_rel_tol = 1e-8;
  double image_tol = 1e-7;
  double rank_tol = 1e-10;
};

/// sup_x objective(x) - sum_k mult_k * g_k(x), or +inf when unbounded.
double policy_value(const QuadraticForm& objective,
                    std::span<const WeightedConstraint> constraints,
                    const PolicyValueOptions& opts = {});

/// Closed-form maximization of x'Ax + b'x + c: +inf unless A <= 0 and b in Im(A).
double maximize_quadratic(const Matrix& a, const Vector& b, double c,
                          const PolicyValueOptions& opts = {});

} // namespace qtp

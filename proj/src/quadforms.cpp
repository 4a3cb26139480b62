#include "qtp/quadforms.hpp"

#include "qtp/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace qtp {

namespace {

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

} // namespace

QuadraticForm::QuadraticForm(int dim)
    : a_(Matrix::Zero(dim, dim)), b_(Vector::Zero(dim)), c_(0.0) {}

QuadraticForm::QuadraticForm(Matrix a, Vector b, double c) : b_(std::move(b)), c_(c) {
  if (a.rows() != a.cols() || a.rows() != b_.size())
    throw dimension_error("quadratic form: A is " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " but b has " +
                          std::to_string(b_.size()) + " entries");
  a_ = symmetrize(a);
}

QuadraticForm QuadraticForm::linear(Vector b, double c) {
  const auto d = b.size();
  return QuadraticForm(Matrix::Zero(d, d), std::move(b), c);
}

QuadraticForm QuadraticForm::constant(int dim, double c) {
  return QuadraticForm(Matrix::Zero(dim, dim), Vector::Zero(dim), c);
}

double QuadraticForm::evaluate(const Vector& x) const {
  return x.dot(a_ * x) + b_.dot(x) + c_;
}

bool QuadraticForm::is_linear() const { return (a_.array() == 0.0).all(); }

QuadraticForm QuadraticForm::operator+(const QuadraticForm& o) const {
  if (o.dim() != dim()) throw dimension_error("adding forms of different dimensions");
  return QuadraticForm(a_ + o.a_, b_ + o.b_, c_ + o.c_);
}

QuadraticForm QuadraticForm::operator-(const QuadraticForm& o) const { return *this + (-o); }

QuadraticForm QuadraticForm::operator-() const { return (*this) * -1.0; }

QuadraticForm QuadraticForm::operator*(double s) const {
  return QuadraticForm(a_ * s, b_ * s, c_ * s);
}

AffineMap::AffineMap(Matrix m, Vector offset) : m_(std::move(m)), offset_(std::move(offset)) {
  if (m_.rows() != offset_.size())
    throw dimension_error("affine map: offset size differs from row count");
}

AffineMap AffineMap::identity(int dim) {
  return AffineMap(Matrix::Identity(dim, dim), Vector::Zero(dim));
}

QuadraticMap::QuadraticMap(std::vector<QuadraticForm> rows) : rows_(std::move(rows)) {
  for (const auto& r : rows_)
    if (r.dim() != rows_.front().dim())
      throw dimension_error("quadratic map rows have different input dimensions");
}

int QuadraticMap::in_dim() const { return rows_.empty() ? 0 : rows_.front().dim(); }

Vector QuadraticMap::apply(const Vector& x) const {
  Vector y(out_dim());
  for (int k = 0; k < out_dim(); ++k) y[k] = rows_[k].evaluate(x);
  return y;
}

QuadraticForm compose_affine(const QuadraticForm& p, const AffineMap& t) {
  if (p.dim() != t.out_dim())
    throw dimension_error("compose_affine: form has dimension " + std::to_string(p.dim()) +
                          ", map outputs " + std::to_string(t.out_dim()));
  const Matrix& m = t.matrix();
  const Vector& off = t.offset();
  Matrix a = m.transpose() * p.a() * m;
  Vector b = m.transpose() * (2.0 * p.a() * off + p.b());
  double c = off.dot(p.a() * off) + p.b().dot(off) + p.c();
  return QuadraticForm(std::move(a), std::move(b), c);
}

QuadraticForm compose_quadratic(const QuadraticForm& p, const QuadraticMap& t) {
  if (!p.is_linear())
    throw nonlinear_composition_error(
        "compose_quadratic: only linear forms compose with a quadratic map");
  if (p.dim() != t.out_dim())
    throw dimension_error("compose_quadratic: form has dimension " + std::to_string(p.dim()) +
                          ", map outputs " + std::to_string(t.out_dim()));
  QuadraticForm out = QuadraticForm::constant(t.in_dim(), p.c());
  for (int k = 0; k < t.out_dim(); ++k)
    if (p.b()[k] != 0.0) out = out + t.rows()[k] * p.b()[k];
  return out;
}

Matrix shor_matrix(const QuadraticForm& g) {
  const int d = g.dim();
  Matrix m(d + 1, d + 1);
  m(0, 0) = g.c();
  m.block(0, 1, 1, d) = 0.5 * g.b().transpose();
  m.block(1, 0, d, 1) = 0.5 * g.b();
  m.block(1, 1, d, d) = g.a();
  return m;
}

Matrix n_matrix(double y, int size) {
  Matrix m = Matrix::Zero(size, size);
  m(0, 0) = y;
  return m;
}

double default_psd_tolerance(const Matrix& s) { return 1e-8 * (1.0 + s.norm()); }

double max_eigenvalue(const Matrix& s) {
  if (s.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("symmetric eigendecomposition failed");
  return es.eigenvalues().maxCoeff();
}

bool is_negative_semidefinite(const Matrix& s, double tol) {
  if (s.size() == 0) return true;
  return max_eigenvalue(s) <= tol;
}

bool is_negative_semidefinite(const Matrix& s) {
  return is_negative_semidefinite(s, default_psd_tolerance(s));
}

Matrix pseudoinverse(const Matrix& s, double rank_tol) {
  const auto n = s.rows();
  if (n == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
  if (es.info() != Eigen::Success) throw numerical_error("symmetric eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  const double cutoff = rank_tol * ev.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(ev[i]) > cutoff && ev[i] != 0.0) inv[i] = 1.0 / ev[i];
  const Matrix& u = es.eigenvectors();
  return u * inv.asDiagonal() * u.transpose();
}

double maximize_quadratic(const Matrix& a, const Vector& b, double c,
                          const PolicyValueOptions& opts) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!is_negative_semidefinite(a, opts.psd_rel_tol * (1.0 + a.norm()))) return inf;
  const Matrix pinv = pseudoinverse(a, opts.rank_tol);
  const Vector residual = a * (pinv * b) - b;
  if (residual.norm() > opts.image_tol * (1.0 + b.norm())) return inf;
  return -0.25 * b.dot(pinv * b) + c;
}

double policy_value(const QuadraticForm& objective,
                    std::span<const WeightedConstraint> constraints,
                    const PolicyValueOptions& opts) {
  Matrix a = objective.a();
  Vector b = objective.b();
  double c = objective.c();
  for (const auto& [form, mult] : constraints) {
    if (mult == 0.0) continue;
    if (form->dim() != objective.dim())
      throw dimension_error("policy_value: constraint dimension mismatch");
    a -= mult * form->a();
    b -= mult * form->b();
    c -= mult * form->c();
  }
  return maximize_quadratic(a, b, c, opts);
}

} // namespace qtp

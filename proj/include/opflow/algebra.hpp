#pragma once

// Finite-dimensional C*-algebras A = M_{n_1}(C) (+) ... (+) M_{n_m}(C).
//
// Elements are stored as a list of dense complex blocks. Everything here is a
// pure function over immutable values.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opflow/error.hpp"

namespace opflow {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr cplx I{0.0, 1.0};

namespace tol {
inline constexpr double herm = 1e-10;  // relative
inline constexpr double eig = 1e-9;    // relative
inline constexpr double pos = 1e-10;   // times ||T||
}  // namespace tol

class BlockShape {
 public:
  BlockShape() = default;

  explicit BlockShape(std::vector<Index> dims) : dims_(std::move(dims))
  {
    if (dims_.empty()) {
      throw Error(ErrorCode::ShapeMismatch, "block shape needs at least one block");
    }
    for (Index n : dims_) {
      if (n < 1) {
        throw Error(ErrorCode::ShapeMismatch, "block dimensions must be positive");
      }
    }
  }

  BlockShape(std::initializer_list<Index> dims) : BlockShape(std::vector<Index>(dims)) {}

  const std::vector<Index>& dims() const noexcept { return dims_; }
  std::size_t blocks() const noexcept { return dims_.size(); }
  Index dim(std::size_t k) const { return dims_.at(k); }

  /// Complex dimension of the algebra, sum of n_k^2.
  Index algebra_dim() const noexcept
  {
    return std::accumulate(dims_.begin(), dims_.end(), Index{0},
                           [](Index acc, Index n) { return acc + n * n; });
  }

  std::string str() const
  {
    std::string s = "[";
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      s += (k ? "," : "") + std::to_string(dims_[k]);
    }
    return s + "]";
  }

  friend bool operator==(const BlockShape&, const BlockShape&) = default;

 private:
  std::vector<Index> dims_;
};

class Element {
 public:
  Element() = default;

  Element(BlockShape shape, std::vector<Matrix> blocks)
      : shape_(std::move(shape)), blocks_(std::move(blocks))
  {
    if (blocks_.size() != shape_.blocks()) {
      throw Error(ErrorCode::ShapeMismatch, "block count does not match shape " + shape_.str());
    }
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const Index n = shape_.dim(k);
      if (blocks_[k].rows() != n || blocks_[k].cols() != n) {
        throw Error(ErrorCode::ShapeMismatch, "block " + std::to_string(k) + " is not " +
                                                  std::to_string(n) + "x" + std::to_string(n));
      }
    }
  }

  /// Single-block element.
  explicit Element(const Matrix& m) : Element(BlockShape{m.rows()}, std::vector<Matrix>{m}) {}

  static Element zero(const BlockShape& shape)
  {
    std::vector<Matrix> b;
    for (Index n : shape.dims()) b.push_back(Matrix::Zero(n, n));
    return {shape, std::move(b)};
  }

  static Element identity(const BlockShape& shape)
  {
    std::vector<Matrix> b;
    for (Index n : shape.dims()) b.push_back(Matrix::Identity(n, n));
    return {shape, std::move(b)};
  }

  /// Matrix unit e_{ij} in block k.
  static Element unit(const BlockShape& shape, std::size_t k, Index i, Index j)
  {
    Element e = zero(shape);
    e.blocks_.at(k)(i, j) = 1.0;
    return e;
  }

  const BlockShape& shape() const noexcept { return shape_; }
  const std::vector<Matrix>& blocks() const noexcept { return blocks_; }
  const Matrix& block(std::size_t k) const { return blocks_.at(k); }

  /// Blockwise transform producing an element of the same shape.
  template <typename F>
  Element map(F&& f) const
  {
    std::vector<Matrix> out;
    out.reserve(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) out.push_back(f(blocks_[k], k));
    return {shape_, std::move(out)};
  }

  template <typename F>
  Element zip(const Element& other, F&& f) const
  {
    require_same_shape(other);
    std::vector<Matrix> out;
    out.reserve(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) out.push_back(f(blocks_[k], other.blocks_[k]));
    return {shape_, std::move(out)};
  }

  void require_same_shape(const Element& other) const
  {
    if (shape_ != other.shape_) {
      throw Error(ErrorCode::ShapeMismatch, shape_.str() + " vs " + other.shape_.str());
    }
  }

  bool is_zero() const
  {
    return std::all_of(blocks_.begin(), blocks_.end(), [](const Matrix& m) { return m.isZero(0.0); });
  }

  friend Element operator+(const Element& a, const Element& b)
  {
    return a.zip(b, [](const Matrix& x, const Matrix& y) -> Matrix { return x + y; });
  }
  friend Element operator-(const Element& a, const Element& b)
  {
    return a.zip(b, [](const Matrix& x, const Matrix& y) -> Matrix { return x - y; });
  }
  friend Element operator-(const Element& a)
  {
    return a.map([](const Matrix& x, std::size_t) -> Matrix { return -x; });
  }
  friend Element operator*(cplx s, const Element& a)
  {
    return a.map([s](const Matrix& x, std::size_t) -> Matrix { return s * x; });
  }
  friend Element operator*(const Element& a, cplx s) { return s * a; }
  friend Element operator*(const Element& a, const Element& b)
  {
    return a.zip(b, [](const Matrix& x, const Matrix& y) -> Matrix { return x * y; });
  }

  friend bool operator==(const Element& a, const Element& b)
  {
    if (a.shape_ != b.shape_) return false;
    for (std::size_t k = 0; k < a.blocks_.size(); ++k) {
      if (a.blocks_[k] != b.blocks_[k]) return false;
    }
    return true;
  }

 private:
  BlockShape shape_;
  std::vector<Matrix> blocks_;
};

inline Element star(const Element& x)
{
  return x.map([](const Matrix& m, std::size_t) -> Matrix { return m.adjoint(); });
}

inline Element mul(const Element& x, const Element& y) { return x * y; }

inline double op_norm(const Matrix& m)
{
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Operator norm: largest singular value over all blocks.
inline double op_norm(const Element& x)
{
  double n = 0.0;
  for (const Matrix& b : x.blocks()) n = std::max(n, op_norm(b));
  return n;
}

/// Hilbert-Schmidt norm over all blocks.
inline double hs_norm(const Element& x)
{
  double s = 0.0;
  for (const Matrix& b : x.blocks()) s += b.squaredNorm();
  return std::sqrt(s);
}

inline cplx trace(const Element& x)
{
  cplx s = 0.0;
  for (const Matrix& b : x.blocks()) s += b.trace();
  return s;
}

/// Hermitian element. Construction checks ||x - x*|| <= herm_tol ||x|| and
/// stores the symmetrization (x + x*)/2.
class Hermitian {
 public:
  Hermitian() = default;

  explicit Hermitian(const Element& x) : value_(symmetrize(x))
  {
    const double scale = op_norm(x);
    if (scale > 0.0 && op_norm(x - star(x)) > tol::herm * scale) {
      throw Error(ErrorCode::NotHermitian, "element is not self-adjoint");
    }
  }

  /// Symmetrizes without the tolerance check.
  static Hermitian from_nearly(const Element& x)
  {
    Hermitian h;
    h.value_ = symmetrize(x);
    return h;
  }

  static Hermitian zero(const BlockShape& shape) { return from_nearly(Element::zero(shape)); }

  const Element& value() const noexcept { return value_; }
  const BlockShape& shape() const noexcept { return value_.shape(); }

 private:
  static Element symmetrize(const Element& x)
  {
    return x.map([](const Matrix& m, std::size_t) -> Matrix { return 0.5 * (m + m.adjoint()); });
  }

  Element value_;
};

inline bool is_hermitian(const Element& x, double rel = tol::herm)
{
  return op_norm(x - star(x)) <= rel * op_norm(x);
}

/// Per-block eigendecomposition H = U diag(lambda) U*, eigenvalues ascending.
struct SpectralDecomposition {
  BlockShape shape;
  std::vector<RealVector> eigenvalues;
  std::vector<Matrix> eigenvectors;

  double min_eigenvalue() const
  {
    double m = std::numeric_limits<double>::infinity();
    for (const RealVector& v : eigenvalues) m = std::min(m, v.minCoeff());
    return m;
  }

  double max_abs_eigenvalue() const
  {
    double m = 0.0;
    for (const RealVector& v : eigenvalues) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
  }

  /// U diag(f(lambda)) U* blockwise.
  template <typename F>
  Element apply(F&& f) const
  {
    std::vector<Matrix> out;
    out.reserve(eigenvalues.size());
    for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
      const RealVector& lam = eigenvalues[k];
      Vector d(lam.size());
      for (Index j = 0; j < lam.size(); ++j) d(j) = static_cast<cplx>(f(lam(j)));
      const Matrix& u = eigenvectors[k];
      out.push_back(u * d.asDiagonal() * u.adjoint());
    }
    return {shape, std::move(out)};
  }
};

inline SpectralDecomposition spectral(const Hermitian& h)
{
  SpectralDecomposition sd;
  sd.shape = h.shape();
  for (const Matrix& b : h.value().blocks()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(b);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorCode::EigFailure, "self-adjoint eigensolver did not converge");
    }
    sd.eigenvalues.push_back(es.eigenvalues());
    sd.eigenvectors.push_back(es.eigenvectors());
  }
  return sd;
}

/// f(H) for a scalar function f: R -> C.
template <typename F>
Element herm_calculus(const Hermitian& h, F&& f)
{
  return spectral(h).apply(std::forward<F>(f));
}

/// exp(i s H) for complex s.
inline Element exp_i(const SpectralDecomposition& sd, cplx s)
{
  return sd.apply([s](double lam) { return std::exp(I * s * lam); });
}

inline double positivity_cutoff(const Element& t) { return tol::pos * op_norm(t); }

inline bool is_strictly_positive(const Element& t)
{
  const double n = op_norm(t);
  if (n == 0.0) return false;
  if (op_norm(t - star(t)) > tol::herm * n) return false;
  return spectral(Hermitian::from_nearly(t)).min_eigenvalue() > tol::pos * n;
}

/// Spectral decomposition of a strictly positive element; throws otherwise.
inline SpectralDecomposition positive_spectral(const Element& t)
{
  const double n = op_norm(t);
  if (n == 0.0 || op_norm(t - star(t)) > tol::herm * n) {
    throw Error(ErrorCode::NotStrictlyPositive, "element is zero or not self-adjoint");
  }
  SpectralDecomposition sd = spectral(Hermitian::from_nearly(t));
  if (sd.min_eigenvalue() <= tol::pos * n) {
    throw Error(ErrorCode::NotStrictlyPositive,
                "minimum eigenvalue " + std::to_string(sd.min_eigenvalue()) + " below cutoff");
  }
  return sd;
}

/// T^z = exp(z log T) on the spectrum.
inline Element power(const Element& t, cplx z)
{
  return positive_spectral(t).apply([z](double lam) { return std::exp(z * std::log(lam)); });
}

inline Hermitian log_positive(const Element& t)
{
  return Hermitian::from_nearly(positive_spectral(t).apply([](double lam) { return std::log(lam); }));
}

/// Condition number ||T|| ||T^{-1}|| of a strictly positive element.
inline double condition_number(const Element& t)
{
  const SpectralDecomposition sd = positive_spectral(t);
  double hi = 0.0;
  for (const RealVector& v : sd.eigenvalues) hi = std::max(hi, v.maxCoeff());
  return hi / sd.min_eigenvalue();
}

/// Minimal tensor product; A (x) B has blocks M_{n_i m_j} ordered i-major.
inline BlockShape kron_shape(const BlockShape& a, const BlockShape& b)
{
  std::vector<Index> dims;
  for (Index n : a.dims()) {
    for (Index m : b.dims()) dims.push_back(n * m);
  }
  return BlockShape(std::move(dims));
}

inline Matrix kron(const Matrix& a, const Matrix& b)
{
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline Element kron(const Element& x, const Element& y)
{
  std::vector<Matrix> out;
  for (const Matrix& a : x.blocks()) {
    for (const Matrix& b : y.blocks()) out.push_back(kron(a, b));
  }
  return {kron_shape(x.shape(), y.shape()), std::move(out)};
}

}  // namespace opflow

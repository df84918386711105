#pragma once

// Hilbert C*-modules E = A^k with <v, w> = sum_i w_i* v_i (linear in v), and
// adjointable operators L(E) = M_k(A).
//
// A ModuleOperator is stored "flattened": for each block M_n of A it holds the
// (k n) x (k n) matrix whose (i, j) sub-block of size n is the block of S_ij.
// L(E) is then itself a block algebra of shape (k n_1, ..., k n_m), so the
// algebra module supplies adjoints, norms and functional calculus.

#include <algorithm>
#include <span>
#include <vector>

#include "opflow/algebra.hpp"

namespace opflow {

inline BlockShape amplified_shape(const BlockShape& shape, Index k)
{
  std::vector<Index> dims;
  for (Index n : shape.dims()) dims.push_back(k * n);
  return BlockShape(std::move(dims));
}

class ModuleVector {
 public:
  ModuleVector() = default;

  explicit ModuleVector(std::vector<Element> entries) : entries_(std::move(entries))
  {
    if (entries_.empty()) throw Error(ErrorCode::ShapeMismatch, "module vector needs k >= 1");
    for (const Element& e : entries_) e.require_same_shape(entries_.front());
  }

  static ModuleVector zero(const BlockShape& shape, Index k)
  {
    return ModuleVector(std::vector<Element>(static_cast<std::size_t>(k), Element::zero(shape)));
  }

  /// Vector with `value` in slot i and zeros elsewhere.
  static ModuleVector basis(const BlockShape& shape, Index k, Index i, const Element& value)
  {
    std::vector<Element> e(static_cast<std::size_t>(k), Element::zero(shape));
    e.at(static_cast<std::size_t>(i)) = value;
    return ModuleVector(std::move(e));
  }

  Index k() const noexcept { return static_cast<Index>(entries_.size()); }
  const BlockShape& shape() const { return entries_.front().shape(); }
  const std::vector<Element>& entries() const noexcept { return entries_; }
  const Element& operator[](Index i) const { return entries_.at(static_cast<std::size_t>(i)); }

  void require_compatible(const ModuleVector& other) const
  {
    if (k() != other.k()) throw Error(ErrorCode::ShapeMismatch, "module ranks differ");
    entries_.front().require_same_shape(other.entries_.front());
  }

  /// Column-stacked block [v_1; ...; v_k] of size (k n) x n.
  Matrix stacked(std::size_t block) const
  {
    const Index n = shape().dim(block);
    Matrix m(k() * n, n);
    for (Index i = 0; i < k(); ++i) m.middleRows(i * n, n) = (*this)[i].block(block);
    return m;
  }

  static ModuleVector unstack(const BlockShape& shape, Index k, const std::vector<Matrix>& cols)
  {
    std::vector<Element> e;
    for (Index i = 0; i < k; ++i) {
      std::vector<Matrix> blocks;
      for (std::size_t b = 0; b < shape.blocks(); ++b) {
        const Index n = shape.dim(b);
        blocks.push_back(cols[b].middleRows(i * n, n));
      }
      e.emplace_back(shape, std::move(blocks));
    }
    return ModuleVector(std::move(e));
  }

  /// Right module action v . a.
  friend ModuleVector operator*(const ModuleVector& v, const Element& a)
  {
    std::vector<Element> e;
    for (const Element& x : v.entries_) e.push_back(x * a);
    return ModuleVector(std::move(e));
  }

  friend ModuleVector operator+(const ModuleVector& v, const ModuleVector& w)
  {
    v.require_compatible(w);
    std::vector<Element> e;
    for (Index i = 0; i < v.k(); ++i) e.push_back(v[i] + w[i]);
    return ModuleVector(std::move(e));
  }

  friend ModuleVector operator*(cplx s, const ModuleVector& v)
  {
    std::vector<Element> e;
    for (const Element& x : v.entries_) e.push_back(s * x);
    return ModuleVector(std::move(e));
  }

 private:
  std::vector<Element> entries_;
};

/// <v, w> = sum_i w_i* v_i.
inline Element inner(const ModuleVector& v, const ModuleVector& w)
{
  v.require_compatible(w);
  Element acc = Element::zero(v.shape());
  for (Index i = 0; i < v.k(); ++i) acc = acc + star(w[i]) * v[i];
  return acc;
}

/// ||v||_E = ||<v, v>||^{1/2}.
inline double module_norm(const ModuleVector& v) { return std::sqrt(op_norm(inner(v, v))); }

class ModuleOperator {
 public:
  ModuleOperator() = default;

  ModuleOperator(BlockShape base, Index k, Element flat)
      : base_(std::move(base)), k_(k), flat_(std::move(flat))
  {
    if (k_ < 1) throw Error(ErrorCode::ShapeMismatch, "module rank must be >= 1");
    if (flat_.shape() != amplified_shape(base_, k_)) {
      throw Error(ErrorCode::ShapeMismatch, "flattened operator does not match A^" +
                                                std::to_string(k_) + " over " + base_.str());
    }
  }

  /// From a k x k grid of algebra elements, grid[i][j] = S_ij.
  static ModuleOperator from_grid(const std::vector<std::vector<Element>>& grid)
  {
    const Index k = static_cast<Index>(grid.size());
    if (k == 0) throw Error(ErrorCode::ShapeMismatch, "empty operator grid");
    const BlockShape base = grid.front().front().shape();
    std::vector<Matrix> blocks;
    for (std::size_t b = 0; b < base.blocks(); ++b) {
      const Index n = base.dim(b);
      Matrix m(k * n, k * n);
      for (Index i = 0; i < k; ++i) {
        if (static_cast<Index>(grid[i].size()) != k) {
          throw Error(ErrorCode::ShapeMismatch, "operator grid is not square");
        }
        for (Index j = 0; j < k; ++j) {
          grid[i][j].require_same_shape(grid.front().front());
          m.block(i * n, j * n, n, n) = grid[i][j].block(b);
        }
      }
      blocks.push_back(std::move(m));
    }
    return {base, k, Element(amplified_shape(base, k), std::move(blocks))};
  }

  static ModuleOperator identity(const BlockShape& base, Index k)
  {
    return {base, k, Element::identity(amplified_shape(base, k))};
  }

  static ModuleOperator zero(const BlockShape& base, Index k)
  {
    return {base, k, Element::zero(amplified_shape(base, k))};
  }

  /// Diagonal operator diag(a_1, ..., a_k).
  static ModuleOperator diagonal(const std::vector<Element>& diag)
  {
    const std::size_t k = diag.size();
    std::vector<std::vector<Element>> grid(k, std::vector<Element>(k, Element::zero(diag.at(0).shape())));
    for (std::size_t i = 0; i < k; ++i) grid[i][i] = diag[i];
    return from_grid(grid);
  }

  const BlockShape& base() const noexcept { return base_; }
  Index k() const noexcept { return k_; }
  const Element& flat() const noexcept { return flat_; }

  Element entry(Index i, Index j) const
  {
    std::vector<Matrix> blocks;
    for (std::size_t b = 0; b < base_.blocks(); ++b) {
      const Index n = base_.dim(b);
      blocks.push_back(flat_.block(b).block(i * n, j * n, n, n));
    }
    return {base_, std::move(blocks)};
  }

  std::vector<std::vector<Element>> grid() const
  {
    std::vector<std::vector<Element>> g(static_cast<std::size_t>(k_));
    for (Index i = 0; i < k_; ++i) {
      for (Index j = 0; j < k_; ++j) g[i].push_back(entry(i, j));
    }
    return g;
  }

  ModuleVector apply(const ModuleVector& v) const
  {
    if (v.k() != k_ || v.shape() != base_) {
      throw Error(ErrorCode::ShapeMismatch, "operator and vector live on different modules");
    }
    std::vector<Matrix> cols;
    for (std::size_t b = 0; b < base_.blocks(); ++b) cols.push_back(flat_.block(b) * v.stacked(b));
    return ModuleVector::unstack(base_, k_, cols);
  }

  ModuleOperator with_flat(Element flat) const { return {base_, k_, std::move(flat)}; }

  void require_compatible(const ModuleOperator& o) const
  {
    if (k_ != o.k_ || base_ != o.base_) {
      throw Error(ErrorCode::ShapeMismatch, "operators act on different modules");
    }
  }

  friend ModuleOperator operator*(const ModuleOperator& s, const ModuleOperator& t)
  {
    s.require_compatible(t);
    return s.with_flat(s.flat_ * t.flat_);
  }
  friend ModuleOperator operator+(const ModuleOperator& s, const ModuleOperator& t)
  {
    s.require_compatible(t);
    return s.with_flat(s.flat_ + t.flat_);
  }
  friend ModuleOperator operator-(const ModuleOperator& s, const ModuleOperator& t)
  {
    s.require_compatible(t);
    return s.with_flat(s.flat_ - t.flat_);
  }
  friend ModuleOperator operator*(cplx c, const ModuleOperator& s) { return s.with_flat(c * s.flat_); }

 private:
  BlockShape base_;
  Index k_ = 0;
  Element flat_;
};

inline ModuleOperator op_adjoint(const ModuleOperator& s) { return s.with_flat(star(s.flat())); }

inline double op_norm(const ModuleOperator& s) { return op_norm(s.flat()); }

inline bool is_unitary(const ModuleOperator& s, double tolerance = 1e-10)
{
  const Element one = Element::identity(s.flat().shape());
  const Element& u = s.flat();
  return op_norm(star(u) * u - one) <= tolerance && op_norm(u * star(u) - one) <= tolerance;
}

inline bool strictly_positive(const ModuleOperator& s) { return is_strictly_positive(s.flat()); }

inline ModuleOperator op_power(const ModuleOperator& t, cplx z) { return t.with_flat(power(t.flat(), z)); }

inline ModuleOperator op_exp(const ModuleOperator& h)
{
  return h.with_flat(herm_calculus(Hermitian::from_nearly(h.flat()), [](double x) { return std::exp(x); }));
}

inline constexpr double span_tol = 1e-9;

/// Orthonormal (Hilbert-Schmidt) basis of the *-algebra generated by a set of
/// operators on E. Construction requires the span to contain the identity.
class SubalgebraBasis {
 public:
  explicit SubalgebraBasis(std::vector<ModuleOperator> generators) : generators_(std::move(generators))
  {
    if (generators_.empty()) throw Error(ErrorCode::NotNondegenerate, "no generators");
    const ModuleOperator& g0 = generators_.front();
    for (const ModuleOperator& g : generators_) g0.require_compatible(g);
    base_ = g0.base();
    k_ = g0.k();

    std::vector<ModuleOperator> letters;
    for (const ModuleOperator& g : generators_) {
      letters.push_back(g);
      letters.push_back(op_adjoint(g));
    }
    std::size_t next = 0;
    for (const ModuleOperator& l : letters) try_add(l);
    while (next < basis_.size()) {
      const ModuleOperator b = basis_[next++];
      for (const ModuleOperator& l : letters) try_add(l * b);
    }
    if (residual(ModuleOperator::identity(base_, k_)) > span_tol) {
      throw Error(ErrorCode::NotNondegenerate, "generated *-algebra does not contain the identity");
    }
  }

  /// All of L(E), spanned by matrix units.
  static SubalgebraBasis full(const BlockShape& base, Index k)
  {
    const BlockShape amp = amplified_shape(base, k);
    std::vector<ModuleOperator> gens;
    for (std::size_t b = 0; b < amp.blocks(); ++b) {
      for (Index i = 0; i < amp.dim(b); ++i) {
        for (Index j = 0; j < amp.dim(b); ++j) gens.emplace_back(base, k, Element::unit(amp, b, i, j));
      }
    }
    return SubalgebraBasis(std::move(gens));
  }

  const std::vector<ModuleOperator>& generators() const noexcept { return generators_; }
  const std::vector<ModuleOperator>& basis() const noexcept { return basis_; }
  std::size_t dimension() const noexcept { return basis_.size(); }
  const BlockShape& base() const noexcept { return base_; }
  Index k() const noexcept { return k_; }

  /// Orthogonal projection onto the span.
  ModuleOperator project(const ModuleOperator& s) const
  {
    const Vector v = vec(s.flat());
    Vector p = Vector::Zero(v.size());
    for (const Vector& q : vecs_) p += q.dot(v) * q;
    return s.with_flat(unvec(p, s.flat().shape()));
  }

  /// ||s - P s||_HS / ||s||_HS (0 for s = 0).
  double residual(const ModuleOperator& s) const
  {
    const Vector v = vec(s.flat());
    const double n = v.norm();
    if (n == 0.0) return 0.0;
    Vector r = v;
    for (const Vector& q : vecs_) r -= q.dot(r) * q;
    return r.norm() / n;
  }

  bool contains(const ModuleOperator& s, double tolerance = span_tol) const
  {
    return residual(s) <= tolerance;
  }

 private:
  static Vector vec(const Element& x)
  {
    Index total = 0;
    for (const Matrix& b : x.blocks()) total += b.size();
    Vector v(total);
    Index off = 0;
    for (const Matrix& b : x.blocks()) {
      v.segment(off, b.size()) = b.reshaped();
      off += b.size();
    }
    return v;
  }

  static Element unvec(const Vector& v, const BlockShape& shape)
  {
    std::vector<Matrix> blocks;
    Index off = 0;
    for (Index n : shape.dims()) {
      blocks.push_back(v.segment(off, n * n).reshaped(n, n));
      off += n * n;
    }
    return {shape, std::move(blocks)};
  }

  void try_add(const ModuleOperator& s)
  {
    Vector r = vec(s.flat());
    const double n = r.norm();
    if (n == 0.0) return;
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : vecs_) r -= q.dot(r) * q;
    }
    if (r.norm() <= span_tol * n) return;
    r.normalize();
    vecs_.push_back(r);
    basis_.push_back(s.with_flat(unvec(r, s.flat().shape())));
  }

  std::vector<ModuleOperator> generators_;
  std::vector<ModuleOperator> basis_;
  std::vector<Vector> vecs_;
  BlockShape base_;
  Index k_ = 0;
};

/// Whether t -> alpha^{it} b stays in B for every basis element b and sampled t,
/// with the Lipschitz bound ||alpha^{i(t+h)} b - alpha^{it} b|| <= h ||log alpha|| ||b||.
inline bool affiliation_test(const ModuleOperator& alpha, const SubalgebraBasis& b,
                             std::span<const double> t_samples)
{
  const SpectralDecomposition sd = positive_spectral(alpha.flat());
  const double log_norm = std::max(std::abs(std::log(sd.min_eigenvalue())),
                                   [&] {
                                     double hi = 0.0;
                                     for (const RealVector& v : sd.eigenvalues) hi = std::max(hi, v.maxCoeff());
                                     return std::abs(std::log(hi));
                                   }());
  auto unitary = [&](double t) {
    return alpha.with_flat(sd.apply([t](double lam) { return std::exp(I * t * std::log(lam)); }));
  };
  constexpr double h = 1e-3;
  for (double t : t_samples) {
    const ModuleOperator u = unitary(t);
    const ModuleOperator uh = unitary(t + h);
    for (const ModuleOperator& q : b.basis()) {
      const ModuleOperator ub = u * q;
      const double nb = op_norm(q);
      if (op_norm(ub - b.project(ub)) > 1e-8 * nb) return false;
      if (op_norm(uh * q - ub) > h * log_norm * nb * (1.0 + 1e-8) + 1e-12 * nb) return false;
    }
  }
  return true;
}

}  // namespace opflow

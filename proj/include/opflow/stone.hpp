#pragma once

// Stone's theorem on E = A^k: a unitary group u on E is u_t = T^{it} for a
// unique strictly positive T, recovered here from samples of u as
// T = exp(K) with K = log(u_{t0}) / (i t0) (principal logarithm).
//
// Also the localization machinery: for a positive functional omega on A the
// Gram form omega(<v, w>) on E is factored as <Lambda v, Lambda w> in C^d, and
// each S in L(E) induces S_omega on C^d with S_omega Lambda(v) = Lambda(S v).

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "opflow/continuation.hpp"
#include "opflow/hilbmod.hpp"

namespace opflow {

/// t -> u_t; must be safe to call concurrently. Results are never cached.
using SampledUnitaryGroup = std::function<ModuleOperator(double)>;

/// Probe grid {0, +-t0, +-2 t0, +-10 t0}: u_0 = 1, each u_t unitary,
/// u_t u_{-t} = 1 and u_{t0} u_{t0} = u_{2 t0}. Throws NOT_A_GROUP.
inline void validate_group(const SampledUnitaryGroup& u, double t0)
{
  const ModuleOperator u0 = u(0.0);
  const ModuleOperator one = ModuleOperator::identity(u0.base(), u0.k());
  if (op_norm(u0 - one) > 1e-10) throw Error(ErrorCode::NotAGroup, "u_0 is not the identity");
  for (double m : {1.0, 2.0, 10.0}) {
    const ModuleOperator plus = u(m * t0);
    const ModuleOperator minus = u(-m * t0);
    if (!is_unitary(plus, 1e-9) || !is_unitary(minus, 1e-9)) {
      throw Error(ErrorCode::NotAGroup, "u_t is not unitary at t = " + std::to_string(m * t0));
    }
    if (op_norm(plus * minus - one) > 1e-9) {
      throw Error(ErrorCode::NotAGroup, "u_t u_{-t} != 1 at t = " + std::to_string(m * t0));
    }
  }
  const ModuleOperator u1 = u(t0);
  if (op_norm(u1 * u1 - u(2.0 * t0)) > 1e-9) {
    throw Error(ErrorCode::NotAGroup, "u_{t0} u_{t0} != u_{2 t0}");
  }
}

/// Hermitian theta with U = exp(i theta), eigenphases in (-pi, pi].
inline Matrix principal_log_unitary(const Matrix& u)
{
  Eigen::ComplexSchur<Matrix> schur(u);
  if (schur.info() != Eigen::Success) throw Error(ErrorCode::EigFailure, "complex Schur failed");
  const Matrix& q = schur.matrixU();
  const Matrix& t = schur.matrixT();
  Vector phase(t.rows());
  for (Index j = 0; j < t.rows(); ++j) phase(j) = std::arg(t(j, j));
  Matrix theta = q * phase.asDiagonal() * q.adjoint();
  return 0.5 * (theta + theta.adjoint());
}

inline Element principal_log_unitary(const Element& u)
{
  return u.map([](const Matrix& m, std::size_t) -> Matrix { return principal_log_unitary(m); });
}

struct GeneratorRecovery {
  ModuleOperator generator;  // K, Hermitian, u_t = exp(i t K)
  double t0_used = 0.0;
  int halvings = 0;
};

inline constexpr int max_halvings = 8;

/// K = log(u_{t0}) / (i t0), accepted once log(u_{t0}) = 2 log(u_{t0/2}) within 1e-8;
/// t0 is halved otherwise, at most 8 times.
inline GeneratorRecovery recover_generator(const SampledUnitaryGroup& u, double t0)
{
  if (!(t0 > 0.0)) throw Error(ErrorCode::NotAGroup, "t0 must be positive");
  validate_group(u, t0);
  double t = t0;
  for (int halvings = 0; halvings <= max_halvings; ++halvings, t *= 0.5) {
    const ModuleOperator ut = u(t);
    const Element full = principal_log_unitary(ut.flat());
    const Element half = principal_log_unitary(u(0.5 * t).flat());
    if (op_norm(full - 2.0 * half) > 1e-8 * std::max(1.0, op_norm(full))) continue;
    const Hermitian k = Hermitian::from_nearly((1.0 / t) * full);
    const Element check = exp_i(spectral(k), t);
    if (op_norm(ut.flat() - check) > 1e-9) {
      throw Error(ErrorCode::NotAGroup, "exp(i t0 K) does not reproduce u_{t0}");
    }
    return {ut.with_flat(k.value()), t, halvings};
  }
  throw Error(ErrorCode::BranchAmbiguity,
              "logarithm did not stabilize after " + std::to_string(max_halvings) + " halvings");
}

struct StoneResult {
  ModuleOperator t;  // strictly positive, u_t = T^{it}
  ModuleOperator generator;
  double t0_used = 0.0;
  int halvings = 0;
  std::vector<std::pair<double, double>> residual_grid;  // (t, ||u_t - T^{it}||)

  std::vector<double> spectrum() const
  {
    std::vector<double> s;
    for (const RealVector& v : spectral(Hermitian::from_nearly(t.flat())).eigenvalues) {
      s.insert(s.end(), v.begin(), v.end());
    }
    std::sort(s.begin(), s.end());
    return s;
  }
};

/// Dyadic times plus a few incommensurate ones, which expose aliased generators.
inline const std::vector<double>& stone_probe_times()
{
  constexpr double s2 = std::numbers::sqrt2;
  constexpr double pi = std::numbers::pi;
  static const std::vector<double> ts = {-10.0, -5.0, -pi, -2.0, -s2, -1.0, -0.5, -0.1, 0.0,
                                         0.1,   0.5,  1.0, s2,   2.0, pi,  5.0,  10.0};
  return ts;
}

/// T = exp(K) with u_t = T^{it}, verified to 1e-8 on |t| <= 10.
inline StoneResult stone(const SampledUnitaryGroup& u, double t0 = 1.0)
{
  const GeneratorRecovery rec = recover_generator(u, t0);
  const SpectralDecomposition sd = spectral(Hermitian::from_nearly(rec.generator.flat()));
  StoneResult out{rec.generator.with_flat(sd.apply([](double x) { return std::exp(x); })),
                  rec.generator, rec.t0_used, rec.halvings, {}};
  for (double t : stone_probe_times()) {
    const double err = op_norm(u(t).flat() - exp_i(sd, t));
    out.residual_grid.emplace_back(t, err);
    if (err > 1e-8) {
      throw Error(ErrorCode::NotAGroup, "u_t != T^{it} at t = " + std::to_string(t));
    }
  }
  return out;
}

/// u_t = T^{it} for a strictly positive T.
inline SampledUnitaryGroup group_from_positive(const ModuleOperator& t)
{
  const SpectralDecomposition sd = positive_spectral(t.flat());
  return [t, sd](double s) {
    return t.with_flat(sd.apply([s](double lam) { return std::exp(I * s * std::log(lam)); }));
  };
}

/// Smearing quotient Q(z) Q(0)^{-1} with Q(z) = (n / sqrt(pi)) \int exp(-n^2 (t - z)^2) u_t dt,
/// which equals u_z = T^{iz}. frequency_bound sizes the rule (an upper bound on ||log T||).
inline ModuleOperator continue_sampled_group(const SampledUnitaryGroup& u, cplx z, double width,
                                             double frequency_bound)
{
  auto smear = [&](cplx at) {
    const int nodes = admissible_nodes(frequency_bound, width, at);
    const auto rule = gauss_hermite(nodes);
    const double growth = width * width * at.imag() * at.imag();
    ModuleOperator acc;
    for (std::size_t j = 0; j < rule->size(); ++j) {
      if (rule->weights[j] == 0.0) continue;
      const double s = rule->nodes[j];
      const cplx c = rule->weights[j] / std::sqrt(std::numbers::pi) *
                     std::exp(cplx(growth, 2.0 * width * at.imag() * s));
      const ModuleOperator term = c * u(s / width + at.real());
      acc = acc.k() == 0 ? term : acc + term;
    }
    return acc;
  };
  const ModuleOperator qz = smear(z);
  const ModuleOperator q0 = smear(0.0);
  return qz.with_flat(qz.flat().zip(q0.flat(), [](const Matrix& a, const Matrix& b) -> Matrix {
    return b.transpose().partialPivLu().solve(a.transpose()).transpose();
  }));
}

// ---------------------------------------------------------------------------
// Localization

inline constexpr double gns_tol = 1e-10;

/// omega(a) = sum_k trace(rho_k a_k) with rho positive semidefinite.
struct PositiveFunctional {
  Element density;

  /// Normalized so that sum_k trace(rho_k) = 1.
  static PositiveFunctional state(const Element& rho)
  {
    const double tr = trace(rho).real();
    if (!(tr > 0.0)) throw Error(ErrorCode::ZeroFunctional, "density has zero trace");
    return {(1.0 / tr) * rho};
  }

  cplx operator()(const Element& a) const { return trace(density * a); }
};

/// Coordinates of v in C^N, N = k * sum n_b^2: slot-major, then block, then column-major entries.
inline Vector coordinates(const ModuleVector& v)
{
  Index total = 0;
  for (const Element& e : v.entries()) {
    for (const Matrix& b : e.blocks()) total += b.size();
  }
  Vector c(total);
  Index off = 0;
  for (const Element& e : v.entries()) {
    for (const Matrix& b : e.blocks()) {
      c.segment(off, b.size()) = b.reshaped();
      off += b.size();
    }
  }
  return c;
}

/// i-th standard basis vector of E as a complex vector space.
inline ModuleVector standard_basis_vector(const BlockShape& base, Index k, Index index)
{
  const Index per_slot = base.algebra_dim();
  const Index slot = index / per_slot;
  Index rest = index % per_slot;
  for (std::size_t b = 0; b < base.blocks(); ++b) {
    const Index n = base.dim(b);
    if (rest < n * n) {
      return ModuleVector::basis(base, k, slot, Element::unit(base, b, rest % n, rest / n));
    }
    rest -= n * n;
  }
  throw Error(ErrorCode::ShapeMismatch, "basis index out of range");
}

/// Matrix of S acting on coordinates(E).
inline Matrix operator_matrix(const ModuleOperator& s)
{
  const Index n = s.k() * s.base().algebra_dim();
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j) m.col(j) = coordinates(s.apply(standard_basis_vector(s.base(), s.k(), j)));
  return m;
}

class Localization {
 public:
  Localization(PositiveFunctional omega, BlockShape base, Index k, Matrix lambda, Matrix lambda_pinv)
      : omega_(std::move(omega)), base_(std::move(base)), k_(k), lambda_(std::move(lambda)),
        pinv_(std::move(lambda_pinv))
  {
  }

  const PositiveFunctional& omega() const noexcept { return omega_; }
  const BlockShape& base() const noexcept { return base_; }
  Index k() const noexcept { return k_; }
  Index rank() const noexcept { return lambda_.rows(); }
  /// Lambda as a d x N matrix on coordinates.
  const Matrix& lambda() const noexcept { return lambda_; }
  const Matrix& lambda_pinv() const noexcept { return pinv_; }

  Vector operator()(const ModuleVector& v) const { return lambda_ * coordinates(v); }

 private:
  PositiveFunctional omega_;
  BlockShape base_;
  Index k_;
  Matrix lambda_;
  Matrix pinv_;
};

/// Gram form G(v, w) = omega(<v, w>) on the standard basis of E = A^k,
/// factored through its eigenvalues above gns_tol * max eigenvalue.
inline Localization localize(const PositiveFunctional& omega, Index k)
{
  const Element& rho = omega.density;
  const double scale = op_norm(rho);
  if (scale == 0.0) throw Error(ErrorCode::ZeroFunctional, "omega = 0");
  if (spectral(Hermitian::from_nearly(rho)).min_eigenvalue() < -1e-12 * scale ||
      !is_hermitian(rho, 1e-12)) {
    throw Error(ErrorCode::ZeroFunctional, "density is not positive semidefinite");
  }
  const BlockShape& base = rho.shape();
  const Index n = k * base.algebra_dim();
  std::vector<ModuleVector> basis;
  basis.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) basis.push_back(standard_basis_vector(base, k, j));
  // G(m, j) = omega(<e_j, e_m>) so that omega(<v, w>) = c(w)^* G c(v)
  Matrix gram = Matrix::Zero(n, n);
  const Index per_slot = base.algebra_dim();
  for (Index j = 0; j < n; ++j) {
    for (Index m = 0; m < n; ++m) {
      if (j / per_slot != m / per_slot) continue;  // distinct slots are orthogonal
      gram(m, j) = omega(inner(basis[j], basis[m]));
    }
  }
  gram = 0.5 * (gram + gram.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigFailure, "Gram eigensolver failed");
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0)) throw Error(ErrorCode::ZeroFunctional, "Gram form vanishes");
  std::vector<Index> kept;
  for (Index j = 0; j < n; ++j) {
    if (es.eigenvalues()(j) > gns_tol * top) kept.push_back(j);
  }
  const Index d = static_cast<Index>(kept.size());
  Matrix lambda(d, n);
  Matrix pinv(n, d);
  for (Index r = 0; r < d; ++r) {
    const double g = es.eigenvalues()(kept[r]);
    const auto vec = es.eigenvectors().col(kept[r]);
    lambda.row(r) = std::sqrt(g) * vec.adjoint();
    pinv.col(r) = vec / std::sqrt(g);
  }
  return {omega, base, k, std::move(lambda), std::move(pinv)};
}

/// S_omega with S_omega Lambda(v) = Lambda(S v). Throws ILL_DEFINED when S does
/// not preserve the kernel of Lambda.
inline Matrix induce(const Localization& loc, const ModuleOperator& s)
{
  if (s.base() != loc.base() || s.k() != loc.k()) {
    throw Error(ErrorCode::ShapeMismatch, "operator and localization live on different modules");
  }
  const Matrix lm = loc.lambda() * operator_matrix(s);
  const Matrix so = lm * loc.lambda_pinv();
  const double scale = op_norm(s) * op_norm(loc.lambda());
  const double residual = op_norm(Matrix(lm - so * loc.lambda()));
  if (residual > 1e-9 * std::max(scale, 1e-300)) {
    throw Error(ErrorCode::IllDefined, "S does not descend to the localization (residual " +
                                           std::to_string(residual) + ")");
  }
  return so;
}

/// z-th power of a strictly positive matrix.
inline Matrix matrix_power(const Matrix& m, cplx z) { return power(Element(m), z).block(0); }

/// R_omega = S_omega for every supplied state; the family must be faithful
/// (sum of densities positive definite). A positive answer is double-checked
/// against ||R - S|| <= 1e-8.
inline bool separating_check(const ModuleOperator& r, const ModuleOperator& s,
                             std::span<const PositiveFunctional> states)
{
  r.require_compatible(s);
  if (states.empty()) throw Error(ErrorCode::FamilyNotFaithful, "no states supplied");
  Element sum = Element::zero(r.base());
  for (const PositiveFunctional& w : states) sum = sum + w.density;
  if (!is_strictly_positive(sum)) {
    throw Error(ErrorCode::FamilyNotFaithful, "sum of densities is not positive definite");
  }
  const double scale = std::max({1.0, op_norm(r), op_norm(s)});
  for (const PositiveFunctional& w : states) {
    const Localization loc = localize(w, r.k());
    if (op_norm(Matrix(induce(loc, r) - induce(loc, s))) > 1e-9 * scale) return false;
  }
  if (op_norm(r - s) > 1e-8 * scale) {
    throw Error(ErrorCode::IllDefined, "localizations agree on a faithful family but R != S");
  }
  return true;
}

}  // namespace opflow

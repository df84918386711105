#pragma once

// Analytic continuation alpha_z and Gaussian smearing
//
//   a(r, z) = (r / sqrt(pi)) \int exp(-r^2 (t - z)^2) alpha_t(a) dt.
//
// At finite dimension every element is entire for alpha, so alpha_z is
// computed directly as exp(i z H_l) x exp(-i z H_r). Smearing is available
// two ways: Gauss-Hermite quadrature over sampled alpha_t, and the closed form
// in the joint eigenbasis, where entry (j, k) picks up exp(i nu z - nu^2 / (4 r^2))
// with nu = lambda_j - mu_k.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "opflow/flows.hpp"
#include "opflow/quadrature.hpp"

namespace opflow {

/// Horizontal strip between the real axis and Im y = im_z.
struct Strip {
  double im_z = 0.0;

  bool contains(cplx y) const
  {
    const double lo = std::min(0.0, im_z);
    const double hi = std::max(0.0, im_z);
    return y.imag() >= lo && y.imag() <= hi;
  }
};

enum class QuadratureRule { GaussHermite };

struct SmearingPlan {
  double r = 1.0;
  cplx z = 0.0;
  int nodes = 16;
  QuadratureRule rule = QuadratureRule::GaussHermite;
};

inline constexpr double quad_target = 1e-8;
inline constexpr int node_factor = 4;

/// nodes >= 16 + ceil(4 (nu_max / (2 r) + r |Im z|)^2), nu_max = ||H_l|| + ||H_r||.
inline int admissible_nodes(double frequency_bound, double r, cplx z)
{
  const double budget = frequency_bound / (2.0 * r) + r * std::abs(z.imag());
  return 16 + static_cast<int>(std::ceil(node_factor * budget * budget));
}

inline int admissible_nodes(const FlowGenerator& g, double r, cplx z)
{
  return admissible_nodes(g.frequency_bound(), r, z);
}

inline SmearingPlan make_plan(const FlowGenerator& g, double r, cplx z)
{
  return {r, z, admissible_nodes(g, r, z), QuadratureRule::GaussHermite};
}

/// ||a|| exp(r^2 (Im z)^2), the a-priori bound on ||a(r, z)||.
inline double smear_norm_bound(double norm_x, double r, cplx z)
{
  return norm_x * std::exp(r * r * z.imag() * z.imag());
}

inline Element continue_exact(const FlowGenerator& g, cplx z, const Element& x) { return g.apply(z, x); }

namespace detail {

/// Multiplies entry (j, k) of x, written in the eigenbases of H_l and H_r,
/// by f(lambda_j - mu_k).
template <typename F>
Element spectral_multiplier(const FlowGenerator& g, const Element& x, F&& f)
{
  x.require_same_shape(g.left().value());
  const SpectralDecomposition& ls = g.left_spectrum();
  const SpectralDecomposition& rs = g.right_spectrum();
  return x.map([&](const Matrix& block, std::size_t k) -> Matrix {
    const Matrix& ul = ls.eigenvectors[k];
    const Matrix& ur = rs.eigenvectors[k];
    Matrix hat = ul.adjoint() * block * ur;
    for (Index j = 0; j < hat.rows(); ++j) {
      for (Index c = 0; c < hat.cols(); ++c) {
        hat(j, c) *= static_cast<cplx>(f(ls.eigenvalues[k](j) - rs.eigenvalues[k](c)));
      }
    }
    return ul * hat * ur.adjoint();
  });
}

}  // namespace detail

/// alpha_z computed entrywise in the joint eigenbasis.
inline Element continue_spectral(const FlowGenerator& g, cplx z, const Element& x)
{
  return detail::spectral_multiplier(g, x, [z](double nu) { return std::exp(I * nu * z); });
}

/// Closed-form a(r, z). r = +infinity gives alpha_z(x).
inline Element smear_oracle(const FlowGenerator& g, const Element& x, double r, cplx z)
{
  const double inv4r2 = std::isinf(r) ? 0.0 : 1.0 / (4.0 * r * r);
  return detail::spectral_multiplier(
      g, x, [z, inv4r2](double nu) { return std::exp(I * nu * z - nu * nu * inv4r2); });
}

/// Gauss-Hermite approximation of a(r, z) after s = r (t - Re z):
///   a(r, z) = pi^{-1/2} \int exp(-s^2) exp(2 i r Im(z) s + r^2 Im(z)^2) alpha_{s/r + Re z}(x) ds.
inline Element smear_quadrature(const FlowGenerator& g, const Element& x, const SmearingPlan& plan)
{
  x.require_same_shape(g.left().value());
  if (!(plan.r > 0.0)) throw Error(ErrorCode::NodesTooFew, "smearing width r must be positive");
  if (g.frequency_bound() / (2.0 * plan.r) < 1e-12) {
    return continue_exact(g, plan.z, x);
  }
  const int need = admissible_nodes(g, plan.r, plan.z);
  if (plan.nodes < need) {
    throw Error(ErrorCode::NodesTooFew, std::to_string(plan.nodes) + " nodes given, " +
                                            std::to_string(need) + " required");
  }
  const auto rule = gauss_hermite(plan.nodes);
  const double a = plan.z.real();
  const double b = plan.z.imag();
  const double r = plan.r;
  const double growth = r * r * b * b;
  Element acc = Element::zero(x.shape());
  for (std::size_t j = 0; j < rule->size(); ++j) {
    const double s = rule->nodes[j];
    const double w = rule->weights[j];
    if (w == 0.0) continue;
    const cplx c = w / std::sqrt(std::numbers::pi) * std::exp(cplx(growth, 2.0 * r * b * s));
    acc = acc + c * evaluate(g, s / r + a, x);
  }
  return acc;
}

/// Sample points of the strip S(z): a grid with Re in [-2, 2] whose rows
/// include both boundary lines Im = 0 and Im = Im z.
inline std::vector<cplx> strip_samples(cplx z, int samples)
{
  std::vector<cplx> pts;
  if (samples < 1) return pts;
  const int rows = samples == 1 ? 1 : std::max(2, static_cast<int>(std::sqrt(double(samples))));
  const int cols = (samples + rows - 1) / rows;
  for (int k = 0; k < samples; ++k) {
    const int row = k % rows;
    const int col = k / rows;
    const double re = cols == 1 ? 0.0 : -2.0 + 4.0 * col / (cols - 1);
    const double im = rows == 1 ? 0.0 : z.imag() * row / (rows - 1);
    pts.emplace_back(re, im);
  }
  return pts;
}

/// max over sampled y in S(z) of ||alpha_y(x)|| - max{||x||, ||alpha_z(x)||}.
inline double three_lines_check(const FlowGenerator& g, const Element& x, cplx z, int samples)
{
  if (samples < 1) throw Error(ErrorCode::NodesTooFew, "three-lines check needs samples >= 1");
  const double cap = std::max(op_norm(x), op_norm(continue_exact(g, z, x)));
  double worst = -std::numeric_limits<double>::infinity();
  for (cplx y : strip_samples(z, samples)) {
    worst = std::max(worst, op_norm(continue_exact(g, y, x)) - cap);
  }
  return worst;
}

/// One approximant y_n together with alpha_z(y_n).
struct Approximant {
  Element value;
  Element continued;
};

/// x_n = lambda_n y_n with lambda_n = min{||x|| / ||y_n||, ||ax|| / ||alpha_z(y_n)||}.
/// Terms with y_n = 0 or alpha_z(y_n) = 0 are dropped; x = 0 or ax = 0 returns
/// the y_n unchanged.
inline std::vector<Element> core_rescale(const Element& x, const Element& ax,
                                         std::span<const Approximant> approximants)
{
  std::vector<Element> out;
  out.reserve(approximants.size());
  const double nx = op_norm(x);
  const double nax = op_norm(ax);
  if (nx == 0.0 || nax == 0.0) {
    for (const Approximant& a : approximants) out.push_back(a.value);
    return out;
  }
  for (const Approximant& a : approximants) {
    const double ny = op_norm(a.value);
    const double nay = op_norm(a.continued);
    if (ny == 0.0 || nay == 0.0) continue;
    const double lambda = std::min(nx / ny, nax / nay);
    out.push_back(lambda * a.value);
  }
  return out;
}

/// Linear functional theta(a) = sum_k trace(D_k a_k).
struct Functional {
  Element density;

  cplx operator()(const Element& a) const { return trace(density * a); }

  /// Dual of the matrix unit e_{ij} in block k: theta(a) = a_k(i, j).
  static Functional entry(const BlockShape& shape, std::size_t k, Index i, Index j)
  {
    return {Element::unit(shape, k, j, i)};
  }

  static std::vector<Functional> all_entries(const BlockShape& shape)
  {
    std::vector<Functional> out;
    for (std::size_t k = 0; k < shape.blocks(); ++k) {
      for (Index i = 0; i < shape.dim(k); ++i) {
        for (Index j = 0; j < shape.dim(k); ++j) out.push_back(entry(shape, k, i, j));
      }
    }
    return out;
  }
};

/// True iff the functionals have joint kernel {0} on A.
inline bool is_separating(const BlockShape& shape, std::span<const Functional> functionals)
{
  const Index dim = shape.algebra_dim();
  if (static_cast<Index>(functionals.size()) < dim) return false;
  Matrix rows(static_cast<Index>(functionals.size()), dim);
  for (Index f = 0; f < rows.rows(); ++f) {
    const Element& d = functionals[f].density;
    d.require_same_shape(Element::zero(shape));
    Index col = 0;
    for (std::size_t k = 0; k < shape.blocks(); ++k) {
      const Matrix& m = d.block(k);
      for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) rows(f, col++) = m(j, i);
      }
    }
  }
  Eigen::JacobiSVD<Matrix> svd(rows);
  const RealVector& sv = svd.singularValues();
  if (sv.size() < dim || sv(0) == 0.0) return false;
  return sv(dim - 1) > 1e-10 * sv(0);
}

/// Checks theta(alpha_z(v)) = theta(w) for each functional of a separating family.
inline bool weak_continuation_check(const FlowGenerator& g, const Element& v, const Element& w,
                                    cplx z, std::span<const Functional> functionals)
{
  if (!is_separating(g.shape(), functionals)) {
    throw Error(ErrorCode::NotSeparating, "functionals have a nontrivial joint kernel");
  }
  const Element av = continue_exact(g, z, v);
  const double size = std::max(hs_norm(av), hs_norm(w));
  for (const Functional& theta : functionals) {
    const double scale = hs_norm(theta.density) * size;
    if (std::abs(theta(av) - theta(w)) > 1e-9 * scale) return false;
  }
  return true;
}

}  // namespace opflow

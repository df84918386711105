#pragma once

// Test-only oracles. None of these go through the library's spectral code.

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "opflow/algebra.hpp"
#include "opflow/flows.hpp"

namespace opflow::testing {

/// exp(A) by scaling and squaring with a degree-18 Taylor polynomial.
inline Matrix taylor_expm(const Matrix& a)
{
  const double n = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (n > 0.5) squarings = static_cast<int>(std::ceil(std::log2(n / 0.5)));
  const Matrix s = a / std::ldexp(1.0, squarings);
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = term;
  for (int k = 1; k <= 18; ++k) {
    term = (term * s / double(k)).eval();
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = (sum * sum).eval();
  return sum;
}

inline Element taylor_expm(const Element& a)
{
  return a.map([](const Matrix& m, std::size_t) -> Matrix { return taylor_expm(m); });
}

/// alpha_t(x) through Taylor exponentials of i t H.
inline Element taylor_flow(const FlowGenerator& g, cplx t, const Element& x)
{
  return taylor_expm(I * t * g.left().value()) * x * taylor_expm(-I * t * g.right().value());
}

/// Direct trapezoidal evaluation of (r / sqrt(pi)) \int exp(-r^2 (t - z)^2) alpha_t(x) dt
/// with the complex kernel on the real line (no contour shift).
inline Element trapezoid_smear(const FlowGenerator& g, const Element& x, double r, cplx z)
{
  const double omega = g.frequency_bound() + 2.0 * r * r * std::abs(z.imag());
  const double h = 2.0 * std::numbers::pi / (omega + 14.0 * r);
  const double half_width = 6.5 / r;
  const int steps = static_cast<int>(std::ceil(half_width / h));
  Element acc = Element::zero(x.shape());
  for (int j = -steps; j <= steps; ++j) {
    const double t = z.real() + j * h;
    const cplx u = t - z;
    const cplx kernel = std::exp(-r * r * u * u);
    acc = acc + (kernel * h * r / std::sqrt(std::numbers::pi)) * taylor_flow(g, t, x);
  }
  return acc;
}

/// Largest singular value via the eigenvalues of m* m.
inline double gram_norm(const Matrix& m)
{
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.adjoint() * m);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline Element diag_element(std::initializer_list<cplx> d)
{
  Vector v(static_cast<Index>(d.size()));
  Index i = 0;
  for (cplx c : d) v(i++) = c;
  return Element(Matrix(v.asDiagonal()));
}

/// e_{ij} in a single n x n block.
inline Element e(Index n, Index i, Index j) { return Element::unit(BlockShape{n}, 0, i, j); }

}  // namespace opflow::testing

#define EXPECT_ELEMENT_NEAR(a, b, tol) EXPECT_LE(::opflow::op_norm((a) - (b)), (tol))

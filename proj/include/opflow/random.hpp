#pragma once

// Seeded random test data.
//
// Draw k of stream `seed` is splitmix64(seed * 0x9E3779B97F4A7C15 + k), so the
// sequence is a pure function of (seed, counter) and does not depend on any
// standard-library distribution. Gaussians use Box-Muller on two consecutive
// uniforms in (0, 1).

#include <cmath>
#include <cstdint>
#include <numbers>

#include "opflow/algebra.hpp"

namespace opflow {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t x) noexcept
  {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t next_u64() noexcept { return mix(seed_ * 0x9E3779B97F4A7C15ULL + counter_++); }

  /// Uniform in the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double gaussian() noexcept
  {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Standard complex Gaussian, E|w|^2 = 1.
  cplx complex_gaussian() noexcept
  {
    const double re = gaussian();
    const double im = gaussian();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

inline Matrix random_matrix(CounterRng& rng, Index n)
{
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) m(i, j) = rng.complex_gaussian();
  }
  return m;
}

/// Element with i.i.d. standard complex Gaussian entries.
inline Element random_element(CounterRng& rng, const BlockShape& shape)
{
  std::vector<Matrix> b;
  for (Index n : shape.dims()) b.push_back(random_matrix(rng, n));
  return {shape, std::move(b)};
}

/// H = (G + G*)/2 rescaled to operator norm `norm`.
inline Hermitian random_hermitian(CounterRng& rng, const BlockShape& shape, double norm)
{
  const Element g = random_element(rng, shape);
  const Hermitian h = Hermitian::from_nearly(g);
  const double n = op_norm(h.value());
  if (n == 0.0 || norm == 0.0) return Hermitian::zero(shape);
  return Hermitian::from_nearly((norm / n) * h.value());
}

/// Unitary from the eigenvectors of a random Hermitian element.
inline Element random_unitary(CounterRng& rng, const BlockShape& shape)
{
  const SpectralDecomposition sd = spectral(random_hermitian(rng, shape, 1.0));
  return {shape, sd.eigenvectors};
}

/// Strictly positive element with spectrum log-uniform in [scale, scale * condition];
/// the extreme eigenvalues are pinned so the condition number is exact.
inline Element random_strictly_positive(CounterRng& rng, const BlockShape& shape, double condition,
                                        double scale = 1.0)
{
  const Element u = random_unitary(rng, shape);
  const double span = std::log(condition);
  std::vector<Matrix> out;
  Index total = 0;
  for (Index n : shape.dims()) total += n;
  Index seen = 0;
  for (std::size_t k = 0; k < shape.blocks(); ++k) {
    const Index n = shape.dim(k);
    RealVector lam(n);
    for (Index j = 0; j < n; ++j, ++seen) {
      double e = rng.uniform(0.0, span);
      if (seen == 0) e = 0.0;
      if (seen == total - 1 && total > 1) e = span;
      lam(j) = scale * std::exp(e);
    }
    const Matrix& q = u.block(k);
    out.push_back(q * lam.cast<cplx>().asDiagonal() * q.adjoint());
  }
  return Element(shape, std::move(out)).map(
      [](const Matrix& m, std::size_t) -> Matrix { return 0.5 * (m + m.adjoint()); });
}

}  // namespace opflow

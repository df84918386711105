#pragma once

// One-parameter representations alpha_t(x) = exp(i t H_l) x exp(-i t H_r).
//
// With H_l = H_r this is an automorphism group. In general alpha is
// semi-multiplicative with companions alpha^l = Ad exp(i t H_l) and
// alpha^r = Ad exp(i t H_r):
//   alpha^l_t(b) alpha_t(a) = alpha_t(b a),   alpha_t(a) alpha^r_t(b) = alpha_t(a b).

#include <span>

#include "opflow/algebra.hpp"

namespace opflow {

class FlowGenerator {
 public:
  FlowGenerator() = default;

  FlowGenerator(Hermitian left, Hermitian right)
      : left_(std::move(left)), right_(std::move(right))
  {
    if (left_.shape() != right_.shape()) {
      throw Error(ErrorCode::ShapeMismatch,
                  "generator shapes differ: " + left_.shape().str() + " vs " + right_.shape().str());
    }
    left_sd_ = spectral(left_);
    right_sd_ = spectral(right_);
  }

  /// Automorphism group Ad exp(i t H).
  static FlowGenerator inner(const Hermitian& h) { return {h, h}; }

  static FlowGenerator trivial(const BlockShape& shape)
  {
    return {Hermitian::zero(shape), Hermitian::zero(shape)};
  }

  const Hermitian& left() const noexcept { return left_; }
  const Hermitian& right() const noexcept { return right_; }
  const SpectralDecomposition& left_spectrum() const noexcept { return left_sd_; }
  const SpectralDecomposition& right_spectrum() const noexcept { return right_sd_; }
  const BlockShape& shape() const noexcept { return left_.shape(); }

  bool is_automorphism() const { return left_.value() == right_.value(); }

  /// ||H_l|| + ||H_r||, the largest frequency |lambda_j - mu_k| in the flow.
  double frequency_bound() const
  {
    return left_sd_.max_abs_eigenvalue() + right_sd_.max_abs_eigenvalue();
  }

  /// exp(i z H_l) x exp(-i z H_r) for complex z.
  Element apply(cplx z, const Element& x) const
  {
    x.require_same_shape(left_.value());
    if (z == cplx(0.0)) return x;
    return exp_i(left_sd_, z) * x * exp_i(right_sd_, -z);
  }

 private:
  Hermitian left_;
  Hermitian right_;
  SpectralDecomposition left_sd_;
  SpectralDecomposition right_sd_;
};

inline Element evaluate(const FlowGenerator& g, double t, const Element& x) { return g.apply(t, x); }

inline FlowGenerator left_companion(const FlowGenerator& g) { return {g.left(), g.left()}; }
inline FlowGenerator right_companion(const FlowGenerator& g) { return {g.right(), g.right()}; }

/// max over the sample of ||alpha_s(alpha_t(x)) - alpha_{s+t}(x)||.
inline double check_group_law(const FlowGenerator& g, double s, double t,
                              std::span<const Element> sample)
{
  double worst = 0.0;
  for (const Element& x : sample) {
    worst = std::max(worst, op_norm(evaluate(g, s, evaluate(g, t, x)) - evaluate(g, s + t, x)));
  }
  return worst;
}

/// max of ||alpha^l_t(b) alpha_t(a) - alpha_t(b a)|| and ||alpha_t(a) alpha^r_t(b) - alpha_t(a b)||.
inline double semi_multiplicativity_residual(const FlowGenerator& g, double t, const Element& a,
                                             const Element& b)
{
  const Element at = evaluate(g, t, a);
  const double left = op_norm(evaluate(left_companion(g), t, b) * at - evaluate(g, t, b * a));
  const double right = op_norm(at * evaluate(right_companion(g), t, b) - evaluate(g, t, a * b));
  return std::max(left, right);
}

}  // namespace opflow

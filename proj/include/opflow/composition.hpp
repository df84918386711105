#pragma once

// Commuting flows and tensor products of flows.
//
// If alpha and beta commute, gamma_t = alpha_t beta_t has generators
// (H^a_l + H^b_l, H^a_r + H^b_r) and gamma_z = alpha_z beta_z = beta_z alpha_z.
// On A (x) B the product flow has generators H^a (x) 1 + 1 (x) H^b on each side.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "opflow/continuation.hpp"

namespace opflow {

inline constexpr double comm_tol = 1e-10;

/// ||[A/||A||, B/||B||]||, zero when either side vanishes.
inline double normalized_commutator(const Element& a, const Element& b)
{
  const double na = op_norm(a);
  const double nb = op_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return op_norm(a * b - b * a) / (na * nb);
}

class CommutingPair {
 public:
  CommutingPair(FlowGenerator alpha, FlowGenerator beta)
      : alpha_(std::move(alpha)), beta_(std::move(beta))
  {
    if (alpha_.shape() != beta_.shape()) {
      throw Error(ErrorCode::ShapeMismatch, "commuting pair needs flows on one algebra");
    }
    const double left = normalized_commutator(alpha_.left().value(), beta_.left().value());
    const double right = normalized_commutator(alpha_.right().value(), beta_.right().value());
    if (left > comm_tol || right > comm_tol) {
      throw Error(ErrorCode::NotCommuting, "generator commutators " + std::to_string(left) +
                                               ", " + std::to_string(right));
    }
  }

  const FlowGenerator& alpha() const noexcept { return alpha_; }
  const FlowGenerator& beta() const noexcept { return beta_; }

 private:
  FlowGenerator alpha_;
  FlowGenerator beta_;
};

inline FlowGenerator product_flow(const CommutingPair& p)
{
  return {Hermitian::from_nearly(p.alpha().left().value() + p.beta().left().value()),
          Hermitian::from_nearly(p.alpha().right().value() + p.beta().right().value())};
}

/// max{||gamma_z(x) - alpha_z(beta_z(x))||, ||gamma_z(x) - beta_z(alpha_z(x))||}.
inline double gamma_continuation_check(const CommutingPair& p, cplx z, const Element& x)
{
  const Element gz = continue_exact(product_flow(p), z, x);
  const Element ab = continue_exact(p.alpha(), z, continue_exact(p.beta(), z, x));
  const Element ba = continue_exact(p.beta(), z, continue_exact(p.alpha(), z, x));
  return std::max(op_norm(gz - ab), op_norm(gz - ba));
}

/// Node count for the two-variable rule: the larger one-variable requirement.
inline int double_smear_nodes(const CommutingPair& p, double n, cplx z)
{
  return std::max(admissible_nodes(p.alpha(), n, z), admissible_nodes(p.beta(), n, z));
}

/// (n^2 / pi) \int\int exp(-n^2 ((s - z)^2 + (t - z)^2)) alpha_s(beta_t(x)) ds dt
/// by a tensorized Gauss-Hermite rule. nodes = 0 picks the admissible count.
inline Element double_smear(const CommutingPair& p, const Element& x, double n, cplx z, int nodes = 0)
{
  x.require_same_shape(p.alpha().left().value());
  if (!(n > 0.0)) throw Error(ErrorCode::NodesTooFew, "smearing width must be positive");
  const int need = double_smear_nodes(p, n, z);
  if (nodes == 0) nodes = need;
  if (nodes < need) {
    throw Error(ErrorCode::NodesTooFew,
                std::to_string(nodes) + " nodes given, " + std::to_string(need) + " required");
  }
  const auto rule = gauss_hermite(nodes);
  const double a = z.real();
  const double b = z.imag();
  const double growth = n * n * b * b;
  std::vector<cplx> coef(rule->size());
  for (std::size_t j = 0; j < rule->size(); ++j) {
    coef[j] = rule->weights[j] / std::sqrt(std::numbers::pi) *
              std::exp(cplx(growth, 2.0 * n * b * rule->nodes[j]));
  }
  Element acc = Element::zero(x.shape());
  for (std::size_t i = 0; i < rule->size(); ++i) {
    if (rule->weights[i] == 0.0) continue;
    const double s = rule->nodes[i] / n + a;
    for (std::size_t j = 0; j < rule->size(); ++j) {
      if (rule->weights[j] == 0.0) continue;
      const double t = rule->nodes[j] / n + a;
      acc = acc + (coef[i] * coef[j]) * evaluate(p.alpha(), s, evaluate(p.beta(), t, x));
    }
  }
  return acc;
}

class TensorFlow {
 public:
  TensorFlow(FlowGenerator alpha, FlowGenerator beta)
      : alpha_(std::move(alpha)), beta_(std::move(beta)),
        product_(lift(alpha_.left(), beta_.left()), lift(alpha_.right(), beta_.right()))
  {
  }

  const FlowGenerator& alpha() const noexcept { return alpha_; }
  const FlowGenerator& beta() const noexcept { return beta_; }
  /// The flow alpha (x) beta on the Kronecker algebra.
  const FlowGenerator& product() const noexcept { return product_; }

 private:
  static Hermitian lift(const Hermitian& ha, const Hermitian& hb)
  {
    const Element one_a = Element::identity(ha.shape());
    const Element one_b = Element::identity(hb.shape());
    return Hermitian::from_nearly(kron(ha.value(), one_b) + kron(one_a, hb.value()));
  }

  FlowGenerator alpha_;
  FlowGenerator beta_;
  FlowGenerator product_;
};

inline TensorFlow tensor_flow(const FlowGenerator& alpha, const FlowGenerator& beta)
{
  return {alpha, beta};
}

/// ||(alpha (x) beta)_z(x (x) y) - alpha_z(x) (x) beta_z(y)||.
inline double tensor_continuation_check(const TensorFlow& tf, cplx z, const Element& x,
                                        const Element& y)
{
  const Element lhs = continue_exact(tf.product(), z, kron(x, y));
  const Element rhs = kron(continue_exact(tf.alpha(), z, x), continue_exact(tf.beta(), z, y));
  return op_norm(lhs - rhs);
}

/// | ||(alpha_t (x) beta_t)(w)|| - ||w|| |, the isometry defect on the tensor algebra.
inline double tensor_isometry_defect(const TensorFlow& tf, double t, const Element& w)
{
  return std::abs(op_norm(evaluate(tf.product(), t, w)) - op_norm(w));
}

}  // namespace opflow

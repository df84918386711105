#pragma once

// Flows implemented by strictly positive module operators:
//   alpha_t(x) = S^{it} x T^{-it}  on a *-subalgebra B of L(E).
// All operators are bounded here, so every x is a middle multiplier of (S, T)
// and S . x . T is the plain product.

#include <span>
#include <vector>

#include "opflow/continuation.hpp"
#include "opflow/hilbmod.hpp"
#include "opflow/stone.hpp"

namespace opflow {

inline constexpr double max_condition = 1e6;

class ImplementedFlow {
 public:
  ImplementedFlow(ModuleOperator s, ModuleOperator t, SubalgebraBasis b)
      : s_(std::move(s)), t_(std::move(t)), b_(std::move(b))
  {
    s_.require_compatible(t_);
    if (s_.base() != b_.base() || s_.k() != b_.k()) {
      throw Error(ErrorCode::ShapeMismatch, "carrier algebra lives on a different module");
    }
    for (const ModuleOperator* op : {&s_, &t_}) {
      const double c = condition_number(op->flat());
      if (c > max_condition) {
        throw Error(ErrorCode::IllConditioned, "condition number " + std::to_string(c) + " > 1e6");
      }
    }
    flow_ = FlowGenerator(log_positive(s_.flat()), log_positive(t_.flat()));
    for (double t : {-1.0, -0.5, 0.5, 1.0}) {
      for (const ModuleOperator& q : b_.basis()) {
        if (b_.residual(evaluate_unchecked(t, q)) > 1e-8) {
          throw Error(ErrorCode::InvarianceViolation,
                      "S^{it} b T^{-it} leaves B at t = " + std::to_string(t));
        }
      }
    }
  }

  const ModuleOperator& s() const noexcept { return s_; }
  const ModuleOperator& t() const noexcept { return t_; }
  const SubalgebraBasis& carrier() const noexcept { return b_; }
  /// The same flow as generators (log S, log T) on the algebra L(E).
  const FlowGenerator& flow() const noexcept { return flow_; }

  ModuleOperator evaluate_unchecked(double t, const ModuleOperator& x) const
  {
    return x.with_flat(evaluate(flow_, t, x.flat()));
  }

  void require_member(const ModuleOperator& x) const
  {
    if (!b_.contains(x)) throw Error(ErrorCode::NotInAlgebra, "x is not in the carrier algebra");
  }

 private:
  ModuleOperator s_;
  ModuleOperator t_;
  SubalgebraBasis b_;
  FlowGenerator flow_;
};

/// S^{it} x T^{-it}, via the complex powers of S and T.
inline ModuleOperator implemented_evaluate(const ImplementedFlow& f, double t, const ModuleOperator& x)
{
  f.require_member(x);
  const ModuleOperator out = op_power(f.s(), I * t) * x * op_power(f.t(), -I * t);
  if (f.carrier().residual(out) > 1e-8) {
    throw Error(ErrorCode::InvarianceViolation, "alpha_t(x) left the carrier algebra");
  }
  return out;
}

/// Left companion Ad S^{it}.
inline ModuleOperator implemented_left_companion(const ImplementedFlow& f, double t,
                                                 const ModuleOperator& x)
{
  return op_power(f.s(), I * t) * x * op_power(f.s(), -I * t);
}

inline ModuleOperator middle_multiplier(const ModuleOperator& s, const ModuleOperator& x,
                                        const ModuleOperator& t)
{
  return s * x * t;
}

/// ||alpha_z(x) - S^{iz} x T^{-iz}|| with alpha_z(x) computed entrywise in the
/// eigenbases of log S and log T.
inline double implemented_continuation_check(const ImplementedFlow& f, cplx z, const ModuleOperator& x)
{
  f.require_member(x);
  const Element spectral_route = continue_spectral(f.flow(), z, x.flat());
  const ModuleOperator closed = middle_multiplier(op_power(f.s(), I * z), x, op_power(f.t(), -I * z));
  return op_norm(spectral_route - closed.flat());
}

/// ||S_omega x_omega T_omega - (S x T)_omega||.
inline double localized_middle_check(const Localization& loc, const ModuleOperator& s,
                                     const ModuleOperator& x, const ModuleOperator& t)
{
  const Matrix lhs = induce(loc, s) * induce(loc, x) * induce(loc, t);
  const Matrix rhs = induce(loc, middle_multiplier(s, x, t));
  return op_norm(Matrix(lhs - rhs));
}

/// omega_{v,w}(y) = omega(<y v, w>) as a functional on L(E): density V rho W^* per block.
inline Functional vector_functional(const PositiveFunctional& omega, const ModuleVector& v,
                                    const ModuleVector& w)
{
  v.require_compatible(w);
  const BlockShape& base = v.shape();
  std::vector<Matrix> blocks;
  for (std::size_t b = 0; b < base.blocks(); ++b) {
    blocks.push_back(v.stacked(b) * omega.density.block(b) * w.stacked(b).adjoint());
  }
  return {Element(amplified_shape(base, v.k()), std::move(blocks))};
}

/// { omega_{v,w} } over the given states and all pairs of the given vectors.
inline std::vector<Functional> vector_functional_family(std::span<const PositiveFunctional> states,
                                                        std::span<const ModuleVector> vectors)
{
  std::vector<Functional> out;
  for (const PositiveFunctional& omega : states) {
    for (const ModuleVector& v : vectors) {
      for (const ModuleVector& w : vectors) out.push_back(vector_functional(omega, v, w));
    }
  }
  return out;
}

}  // namespace opflow

#include <cmath>

#include <gtest/gtest.h>

#include "opflow/hilbmod.hpp"
#include "opflow/random.hpp"
#include "opflow/serialize.hpp"
#include "support.hpp"

using namespace opflow;
using opflow::testing::diag_element;

namespace {

const BlockShape kBase{2, 3};
constexpr Index kRank = 3;

ModuleVector random_vector(CounterRng& rng, const BlockShape& shape, Index k)
{
  std::vector<Element> e;
  for (Index i = 0; i < k; ++i) e.push_back(random_element(rng, shape));
  return ModuleVector(std::move(e));
}

ModuleOperator random_operator(CounterRng& rng, const BlockShape& shape, Index k)
{
  return {shape, k, random_element(rng, amplified_shape(shape, k))};
}

ModuleOperator random_positive(CounterRng& rng, const BlockShape& shape, Index k, double condition)
{
  return {shape, k, random_strictly_positive(rng, amplified_shape(shape, k), condition)};
}

double min_eigenvalue(const Element& x)
{
  double lo = std::numeric_limits<double>::infinity();
  for (const Matrix& b : x.blocks()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (b + b.adjoint()));
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return lo;
}

TEST(Inner, UnitVector)
{
  const ModuleVector v = ModuleVector::basis(kBase, kRank, 0, Element::identity(kBase));
  EXPECT_EQ(inner(v, v), Element::identity(kBase));
}

TEST(Inner, SingleSlotIsXStarX)
{
  CounterRng rng(1);
  const Element x = random_element(rng, kBase);
  const ModuleVector v({x});
  EXPECT_ELEMENT_NEAR(inner(v, v), star(x) * x, 1e-14 * op_norm(x) * op_norm(x));
  EXPECT_GE(min_eigenvalue(inner(v, v)), -1e-12 * op_norm(x) * op_norm(x));
}

TEST(Inner, Axioms)
{
  CounterRng rng(2);
  for (int i = 0; i < 20; ++i) {
    const ModuleVector v = random_vector(rng, kBase, kRank);
    const ModuleVector w = random_vector(rng, kBase, kRank);
    const Element a = random_element(rng, kBase);
    const double scale = module_norm(v) * module_norm(w);
    EXPECT_ELEMENT_NEAR(inner(v * a, w), inner(v, w) * a, 1e-12 * scale * op_norm(a));
    EXPECT_ELEMENT_NEAR(star(inner(v, w)), inner(w, v), 1e-12 * scale);
    EXPECT_LE(op_norm(inner(v, w)), scale + 1e-10);
  }
}

TEST(Inner, Positivity)
{
  CounterRng rng(3);
  for (int i = 0; i < 100; ++i) {
    const ModuleVector v = random_vector(rng, kBase, kRank);
    const double n2 = module_norm(v) * module_norm(v);
    EXPECT_GE(min_eigenvalue(inner(v, v)), -1e-12 * n2);
  }
  EXPECT_EQ(module_norm(ModuleVector::zero(kBase, kRank)), 0.0);
}

TEST(Inner, ShapeMismatch)
{
  const ModuleVector v = ModuleVector::zero(kBase, 2);
  const ModuleVector w = ModuleVector::zero(kBase, 3);
  EXPECT_THROW((void)inner(v, w), Error);
  EXPECT_THROW((void)inner(v, ModuleVector::zero(BlockShape{2}, 2)), Error);
}

TEST(ModuleOp, GridRoundTripAndApply)
{
  CounterRng rng(4);
  std::vector<std::vector<Element>> grid(kRank);
  for (auto& row : grid) {
    for (Index j = 0; j < kRank; ++j) row.push_back(random_element(rng, kBase));
  }
  const ModuleOperator s = ModuleOperator::from_grid(grid);
  const ModuleVector v = random_vector(rng, kBase, kRank);
  const ModuleVector sv = s.apply(v);
  for (Index i = 0; i < kRank; ++i) {
    Element expect = Element::zero(kBase);
    for (Index j = 0; j < kRank; ++j) {
      EXPECT_EQ(s.entry(i, j), grid[i][j]);
      expect = expect + grid[i][j] * v[j];
    }
    EXPECT_ELEMENT_NEAR(sv[i], expect, 1e-12 * op_norm(expect));
  }
}

TEST(ModuleOp, AdjointAndModuleLinearity)
{
  CounterRng rng(5);
  for (int i = 0; i < 20; ++i) {
    const ModuleOperator s = random_operator(rng, kBase, kRank);
    const ModuleOperator t = random_operator(rng, kBase, kRank);
    const ModuleVector v = random_vector(rng, kBase, kRank);
    const ModuleVector w = random_vector(rng, kBase, kRank);
    const Element a = random_element(rng, kBase);
    const double scale = op_norm(s) * module_norm(v) * module_norm(w);
    EXPECT_ELEMENT_NEAR(inner(s.apply(v), w), inner(v, op_adjoint(s).apply(w)), 1e-10 * scale);
    EXPECT_EQ(op_adjoint(op_adjoint(s)).flat(), s.flat());
    EXPECT_ELEMENT_NEAR(op_adjoint(s * t).flat(), (op_adjoint(t) * op_adjoint(s)).flat(),
                        1e-12 * op_norm(s) * op_norm(t));
    EXPECT_ELEMENT_NEAR(s.apply(v * a)[0], s.apply(v)[0] * a, 1e-12 * scale / module_norm(w) * op_norm(a));
    for (Index p = 0; p < kRank; ++p) {
      for (Index q = 0; q < kRank; ++q) EXPECT_EQ(op_adjoint(s).entry(p, q), star(s.entry(q, p)));
    }
  }
}

TEST(ModuleOp, NormMatchesPowerIteration)
{
  CounterRng rng(6);
  for (int i = 0; i < 5; ++i) {
    const ModuleOperator s = random_operator(rng, kBase, kRank);
    ModuleVector v = random_vector(rng, kBase, kRank);
    const ModuleOperator sts = op_adjoint(s) * s;
    double estimate = 0.0;
    for (int it = 0; it < 2000; ++it) {
      v = (1.0 / module_norm(v)) * v;
      estimate = module_norm(s.apply(v));
      v = sts.apply(v);
    }
    EXPECT_NEAR(estimate, op_norm(s), 1e-9 * op_norm(s));
  }
}

TEST(Positivity, Examples)
{
  const ModuleOperator one = ModuleOperator::identity(kBase, kRank);
  EXPECT_TRUE(is_unitary(one));
  EXPECT_TRUE(strictly_positive(one));
  const ModuleOperator d = ModuleOperator::diagonal({Element::identity(kBase), Element::zero(kBase)});
  EXPECT_FALSE(strictly_positive(d));
  EXPECT_FALSE(is_unitary(d));
  // still positive: <d v, v> >= 0
  CounterRng rng(7);
  const ModuleVector v = random_vector(rng, kBase, 2);
  EXPECT_GE(min_eigenvalue(inner(d.apply(v), v)), -1e-12);
}

TEST(Positivity, ImaginaryPowersAreUnitary)
{
  CounterRng rng(8);
  for (int i = 0; i < 10; ++i) {
    const ModuleOperator t = random_positive(rng, kBase, kRank, 1e3);
    const double s = rng.uniform(-5, 5);
    EXPECT_TRUE(is_unitary(op_power(t, I * s)));
  }
}

TEST(Power, Examples)
{
  const ModuleOperator t = ModuleOperator::diagonal({diag_element({4.0, 9.0})});
  EXPECT_ELEMENT_NEAR(op_power(t, 0.5).flat(), diag_element({2.0, 3.0}), 1e-14);
  CounterRng rng(9);
  const ModuleOperator p = random_positive(rng, kBase, kRank, 100.0);
  EXPECT_ELEMENT_NEAR(op_power(p, 0.0).flat(), ModuleOperator::identity(kBase, kRank).flat(), 1e-13);
  EXPECT_ELEMENT_NEAR(op_adjoint(op_power(p, I)).flat(), op_power(p, -I).flat(), 1e-10);
  for (int i = 0; i < 10; ++i) {
    const cplx y(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const cplx z(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const ModuleOperator rhs = op_power(p, y + z);
    EXPECT_ELEMENT_NEAR((op_power(p, y) * op_power(p, z)).flat(), rhs.flat(), 1e-10 * op_norm(rhs));
  }
  EXPECT_THROW((void)op_power(ModuleOperator::diagonal({Element::identity(kBase), Element::zero(kBase)}), 0.5),
               Error);
}

TEST(Subalgebra, FullContainsEverything)
{
  const SubalgebraBasis full = SubalgebraBasis::full(kBase, 2);
  EXPECT_EQ(full.dimension(), static_cast<std::size_t>(amplified_shape(kBase, 2).algebra_dim()));
  CounterRng rng(10);
  EXPECT_TRUE(full.contains(random_operator(rng, kBase, 2)));
}

TEST(Subalgebra, DiagonalIsClosed)
{
  CounterRng rng(11);
  const Element a = random_element(rng, kBase);
  const Element b = random_element(rng, kBase);
  const Element z = Element::zero(kBase);
  const SubalgebraBasis diag({ModuleOperator::diagonal({a, z}), ModuleOperator::diagonal({z, b}),
                              ModuleOperator::identity(kBase, 2)});
  EXPECT_EQ(diag.dimension(), static_cast<std::size_t>(2 * kBase.algebra_dim()));
  EXPECT_TRUE(diag.contains(ModuleOperator::diagonal({random_element(rng, kBase), random_element(rng, kBase)})));
  EXPECT_FALSE(diag.contains(ModuleOperator::from_grid({{z, a}, {z, z}})));
}

TEST(Subalgebra, Degenerate)
{
  const Element z = Element::zero(kBase);
  try {
    SubalgebraBasis b({ModuleOperator::diagonal({Element::identity(kBase), z})});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NotNondegenerate);
  }
}

TEST(Affiliation, FullAlgebra)
{
  CounterRng rng(12);
  const SubalgebraBasis full = SubalgebraBasis::full(BlockShape{2}, 2);
  const ModuleOperator alpha = random_positive(rng, BlockShape{2}, 2, 50.0);
  const std::vector<double> ts = {-2.0, 0.5, 3.0};
  EXPECT_TRUE(affiliation_test(alpha, full, ts));
}

TEST(Affiliation, ExponentialInsideSubalgebra)
{
  CounterRng rng(13);
  const Element z = Element::zero(kBase);
  const SubalgebraBasis diag({ModuleOperator::diagonal({random_element(rng, kBase), z}),
                              ModuleOperator::diagonal({z, random_element(rng, kBase)}),
                              ModuleOperator::identity(kBase, 2)});
  const ModuleOperator k = ModuleOperator::diagonal(
      {random_hermitian(rng, kBase, 1.5).value(), random_hermitian(rng, kBase, 1.5).value()});
  ASSERT_TRUE(diag.contains(k));
  // exp(K) by power series stays in the span
  const ModuleOperator alpha = k.with_flat(opflow::testing::taylor_expm(k.flat()));
  EXPECT_TRUE(diag.contains(alpha, 1e-12));
  const std::vector<double> ts = {-1.0, 0.25, 2.0};
  EXPECT_TRUE(affiliation_test(alpha, diag, ts));
  // a positive operator mixing the two slots leaves the subalgebra
  const ModuleOperator mixing = random_positive(rng, kBase, 2, 10.0);
  EXPECT_FALSE(affiliation_test(mixing, diag, ts));
}

TEST(Affiliation, ScalarSubalgebra)
{
  const SubalgebraBasis scalars({ModuleOperator::identity(BlockShape{2}, 1)});
  EXPECT_EQ(scalars.dimension(), 1u);
  const ModuleOperator alpha = ModuleOperator::diagonal({diag_element({1.0, 2.0})});
  const std::vector<double> ts = {1.0};
  EXPECT_FALSE(affiliation_test(alpha, scalars, ts));
  try {
    (void)affiliation_test(ModuleOperator::diagonal({diag_element({1.0, 0.0})}), scalars, ts);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NotStrictlyPositive);
  }
}

TEST(ModuleOpSerialization, RoundTrip)
{
  CounterRng rng(14);
  const ModuleOperator s = random_operator(rng, kBase, 2);
  const ModuleOperator back = module_operator_from_json(json::parse(to_json(s).dump()));
  EXPECT_EQ(back.k(), 2);
  EXPECT_EQ(back.flat(), s.flat());
}

}  // namespace

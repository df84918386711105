#include <cmath>

#include <gtest/gtest.h>

#include "opflow/flows.hpp"
#include "opflow/random.hpp"
#include "opflow/serialize.hpp"
#include "support.hpp"

using namespace opflow;
using opflow::testing::diag_element;
using opflow::testing::e;

namespace {

const BlockShape kShape{3, 2};

FlowGenerator random_flow(CounterRng& rng, const BlockShape& shape, double norm)
{
  return {random_hermitian(rng, shape, norm), random_hermitian(rng, shape, norm)};
}

TEST(Flow, TimeZeroIsIdentity)
{
  CounterRng rng(1);
  const FlowGenerator g = random_flow(rng, kShape, 3.0);
  const Element x = random_element(rng, kShape);
  EXPECT_ELEMENT_NEAR(evaluate(g, 0.0, x), x, 1e-14);
}

TEST(Flow, EntrywisePhase)
{
  const FlowGenerator g = FlowGenerator::inner(Hermitian(diag_element({1.0, 0.0})));
  for (double t : {-2.0, 0.3, 1.0, 7.5}) {
    EXPECT_ELEMENT_NEAR(evaluate(g, t, e(2, 0, 1)), std::exp(I * t) * e(2, 0, 1), 1e-14);
  }
}

TEST(Flow, UnitFixedByAutomorphisms)
{
  CounterRng rng(2);
  const FlowGenerator g = FlowGenerator::inner(random_hermitian(rng, kShape, 2.0));
  const Element one = Element::identity(kShape);
  for (double t : {-3.0, 0.5, 11.0}) EXPECT_ELEMENT_NEAR(evaluate(g, t, one), one, 1e-13);
}

TEST(Flow, ShapeMismatch)
{
  const FlowGenerator g = FlowGenerator::trivial(kShape);
  EXPECT_THROW((void)evaluate(g, 1.0, Element::identity(BlockShape{2})), Error);
  EXPECT_THROW((FlowGenerator{Hermitian::zero(kShape), Hermitian::zero(BlockShape{5})}), Error);
}

TEST(Flow, IsometryAndTaylorOracle)
{
  CounterRng rng(3);
  for (int i = 0; i < 20; ++i) {
    const FlowGenerator g = random_flow(rng, kShape, 4.0);
    const Element x = random_element(rng, kShape);
    const double t = rng.uniform(-100.0, 100.0);
    const Element y = evaluate(g, t, x);
    EXPECT_NEAR(op_norm(y), op_norm(x), 1e-10 * op_norm(x));
    const double small_t = rng.uniform(-3.0, 3.0);
    EXPECT_LE(op_norm(evaluate(g, small_t, x) - opflow::testing::taylor_flow(g, small_t, x)),
              1e-11 * op_norm(x));
  }
}

TEST(Companions, AutomorphismCompanionsEqualFlow)
{
  CounterRng rng(4);
  const FlowGenerator g = FlowGenerator::inner(random_hermitian(rng, kShape, 2.0));
  EXPECT_EQ(left_companion(g).left().value(), g.left().value());
  EXPECT_EQ(right_companion(g).right().value(), g.right().value());
  const Element x = random_element(rng, kShape);
  EXPECT_ELEMENT_NEAR(evaluate(left_companion(g), 0.7, x), evaluate(g, 0.7, x), 0.0);
  EXPECT_ELEMENT_NEAR(evaluate(right_companion(g), 0.7, x), evaluate(g, 0.7, x), 0.0);
}

TEST(Companions, ZeroRightGeneratorGivesTrivialCompanion)
{
  CounterRng rng(5);
  const FlowGenerator g{random_hermitian(rng, kShape, 2.0), Hermitian::zero(kShape)};
  const Element x = random_element(rng, kShape);
  EXPECT_ELEMENT_NEAR(evaluate(right_companion(g), 4.2, x), x, 0.0);
}

TEST(Companions, SemiMultiplicativity)
{
  CounterRng rng(6);
  for (int i = 0; i < 30; ++i) {
    const FlowGenerator g = random_flow(rng, kShape, 4.0);
    const Element a = random_element(rng, kShape);
    const Element b = random_element(rng, kShape);
    const double t = rng.uniform(-10, 10);
    EXPECT_LE(semi_multiplicativity_residual(g, t, a, b), 1e-10 * op_norm(a) * op_norm(b));
    // direct product of Taylor exponentials
    const Element lhs = opflow::testing::taylor_flow(left_companion(g), t, b) * evaluate(g, t, a);
    EXPECT_LE(op_norm(lhs - evaluate(g, t, b * a)), 1e-9 * op_norm(a) * op_norm(b));
  }
}

TEST(Companions, AreMultiplicative)
{
  CounterRng rng(7);
  for (int i = 0; i < 20; ++i) {
    const FlowGenerator g = random_flow(rng, kShape, 4.0);
    const Element x = random_element(rng, kShape);
    const Element y = random_element(rng, kShape);
    const double t = rng.uniform(-10, 10);
    for (const FlowGenerator& c : {left_companion(g), right_companion(g)}) {
      EXPECT_LE(op_norm(evaluate(c, t, x * y) - evaluate(c, t, x) * evaluate(c, t, y)),
                1e-10 * op_norm(x) * op_norm(y));
    }
  }
}

TEST(GroupLaw, Residuals)
{
  CounterRng rng(8);
  const FlowGenerator g = random_flow(rng, kShape, 4.0);
  std::vector<Element> sample;
  double scale = 0.0;
  for (int i = 0; i < 5; ++i) {
    sample.push_back(random_element(rng, kShape));
    scale = std::max(scale, op_norm(sample.back()));
  }
  EXPECT_EQ(check_group_law(g, 0.0, 0.0, sample), 0.0);
  EXPECT_LE(check_group_law(g, 1.0, -1.0, sample), 1e-11 * scale * 10);
  EXPECT_LE(check_group_law(g, 0.37, 2.5, sample), 1e-11 * scale * 10);
  // alpha_1(alpha_{-1}(x)) = x
  for (const Element& x : sample) {
    EXPECT_LE(op_norm(evaluate(g, 1.0, evaluate(g, -1.0, x)) - x), 1e-11 * 10 * op_norm(x));
  }
}

TEST(GroupLaw, CommutingDiagonalDataIsExactToRounding)
{
  const FlowGenerator g{Hermitian(diag_element({1.0, -0.5, 2.0})), Hermitian(diag_element({0.25, 0.0, 1.5}))};
  std::vector<Element> sample;
  CounterRng rng(9);
  sample.push_back(random_element(rng, BlockShape{3}));
  EXPECT_LE(check_group_law(g, 1.3, 2.9, sample), 1e-11 * op_norm(sample[0]) * 10);
}

TEST(Lipschitz, BoundFromGenerator)
{
  CounterRng rng(10);
  for (int i = 0; i < 20; ++i) {
    const FlowGenerator g = random_flow(rng, kShape, 3.0);
    const Element x = random_element(rng, kShape);
    const double t = rng.uniform(-1, 1);
    const double bound = std::abs(t) * (op_norm(g.left().value()) + op_norm(g.right().value())) * op_norm(x);
    EXPECT_LE(op_norm(evaluate(g, t, x) - x), bound * (1 + 1e-8));
  }
}

TEST(FlowSerialization, KindTag)
{
  CounterRng rng(11);
  const FlowGenerator aut = FlowGenerator::inner(random_hermitian(rng, kShape, 1.0));
  const FlowGenerator two = random_flow(rng, kShape, 1.0);
  EXPECT_EQ(to_json(aut)["kind"], "automorphism");
  EXPECT_EQ(to_json(two)["kind"], "two-sided");
  const FlowGenerator back = flow_from_json(json::parse(to_json(two).dump()));
  EXPECT_EQ(back.left().value(), two.left().value());
  EXPECT_EQ(back.right().value(), two.right().value());
}

}  // namespace

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "opflow/algebra.hpp"
#include "opflow/random.hpp"
#include "opflow/serialize.hpp"
#include "support.hpp"

using namespace opflow;
using opflow::testing::diag_element;
using opflow::testing::e;

namespace {

const BlockShape kMixed{3, 1, 4};

TEST(AlgebraStar, MatrixUnitTransposes)
{
  EXPECT_EQ(star(e(2, 0, 1)), e(2, 1, 0));
  EXPECT_EQ(star(Element::identity(kMixed)), Element::identity(kMixed));
}

TEST(AlgebraStar, InvolutionIsExact)
{
  CounterRng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Element x = random_element(rng, kMixed);
    EXPECT_EQ(star(star(x)), x);
    EXPECT_NEAR(op_norm(star(x)), op_norm(x), 1e-12 * op_norm(x));
  }
}

TEST(AlgebraMul, MatrixUnits)
{
  EXPECT_EQ(mul(e(2, 0, 1), e(2, 1, 0)), e(2, 0, 0));
  EXPECT_EQ(mul(Element::identity(kMixed), Element::identity(kMixed)), Element::identity(kMixed));
}

TEST(AlgebraMul, ShapeMismatchThrows)
{
  try {
    (void)mul(Element::identity(BlockShape{2}), Element::identity(BlockShape{3}));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(AlgebraMul, Submultiplicative)
{
  CounterRng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Element x = random_element(rng, kMixed);
    const Element y = random_element(rng, kMixed);
    double nxy = 0, nx = 0, ny = 0;
    for (std::size_t k = 0; k < kMixed.blocks(); ++k) {
      nxy = std::max(nxy, opflow::testing::gram_norm((x * y).block(k)));
      nx = std::max(nx, opflow::testing::gram_norm(x.block(k)));
      ny = std::max(ny, opflow::testing::gram_norm(y.block(k)));
    }
    EXPECT_LE(nxy, nx * ny * (1 + 1e-12));
  }
}

TEST(AlgebraNorm, Examples)
{
  EXPECT_EQ(op_norm(Element::zero(kMixed)), 0.0);
  EXPECT_NEAR(op_norm(diag_element({3.0, -4.0})), 4.0, 1e-14);
  Matrix b(2, 2);
  b << 0, 5, 0, 0;
  const Element two_blocks(BlockShape{1, 2}, {Matrix::Constant(1, 1, 2.0), b});
  EXPECT_NEAR(op_norm(two_blocks), 5.0, 1e-14);
}

TEST(AlgebraNorm, CStarIdentity)
{
  CounterRng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Element x = random_element(rng, kMixed);
    const double n = op_norm(x);
    EXPECT_LE(std::abs(op_norm(star(x) * x) - n * n), 1e-10 * n * n);
  }
}

TEST(HermCalculus, IdentityFunction)
{
  CounterRng rng(4);
  const Hermitian h = random_hermitian(rng, kMixed, 3.0);
  EXPECT_ELEMENT_NEAR(herm_calculus(h, [](double x) { return x; }), h.value(), tol::eig * 3.0);
}

TEST(HermCalculus, DiagonalExp)
{
  const Hermitian h(diag_element({0.0, std::numbers::ln2}));
  EXPECT_ELEMENT_NEAR(herm_calculus(h, [](double x) { return std::exp(x); }), diag_element({1.0, 2.0}),
                      1e-14);
}

TEST(HermCalculus, ExpMatchesScalingAndSquaring)
{
  CounterRng rng(5);
  for (int i = 0; i < 10; ++i) {
    const Hermitian h = random_hermitian(rng, kMixed, 2.5);
    const Element fast = herm_calculus(h, [](double x) { return std::exp(x); });
    const Element oracle = opflow::testing::taylor_expm(h.value());
    EXPECT_LE(op_norm(fast - oracle), 1e-10 * op_norm(oracle));
  }
}

TEST(HermCalculus, SymmetrizesNearHermitianInput)
{
  Matrix m(2, 2);
  m << 1.0, cplx(0.5, 1e-14), cplx(0.5, 0.0), 2.0;
  EXPECT_NO_THROW(Hermitian{Element(m)});
  Matrix bad(2, 2);
  bad << 1.0, 1.0, 0.0, 2.0;
  EXPECT_THROW(Hermitian{Element(bad)}, Error);
}

TEST(HermCalculus, PolynomialHomomorphism)
{
  CounterRng rng(6);
  for (int i = 0; i < 10; ++i) {
    const Hermitian h = random_hermitian(rng, kMixed, 2.0);
    auto f = [](double x) { return cplx(x * x - 1.0, 0.5 * x); };
    auto g = [](double x) { return cplx(2.0 * x * x * x + x, -1.0); };
    const Element fg = herm_calculus(h, [&](double x) { return f(x) * g(x); });
    const Element prod = herm_calculus(h, f) * herm_calculus(h, g);
    EXPECT_LE(op_norm(fg - prod), 1e-10 * std::max(1.0, op_norm(fg)));
  }
}

TEST(HermCalculus, ExpOfItHIsUnitary)
{
  CounterRng rng(7);
  for (int i = 0; i < 20; ++i) {
    const Hermitian h = random_hermitian(rng, kMixed, 10.0);
    const Element u = exp_i(spectral(h), 1.0);
    EXPECT_LE(op_norm(star(u) * u - Element::identity(kMixed)), 1e-10);
  }
}

TEST(Spectral, ReconstructionAndOrdering)
{
  CounterRng rng(8);
  const Hermitian h = random_hermitian(rng, kMixed, 5.0);
  const SpectralDecomposition sd = spectral(h);
  for (std::size_t k = 0; k < sd.eigenvalues.size(); ++k) {
    const RealVector& lam = sd.eigenvalues[k];
    for (Index j = 1; j < lam.size(); ++j) EXPECT_LE(lam(j - 1), lam(j));
    const Matrix& u = sd.eigenvectors[k];
    EXPECT_LE((u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm(), tol::eig);
  }
  EXPECT_ELEMENT_NEAR(sd.apply([](double x) { return x; }), h.value(), tol::eig * 5.0);
}

TEST(Power, Examples)
{
  EXPECT_ELEMENT_NEAR(power(Element::identity(kMixed), cplx(0.3, -1.7)), Element::identity(kMixed), 1e-14);
  EXPECT_ELEMENT_NEAR(power(diag_element({4.0, 9.0}), 0.5), diag_element({2.0, 3.0}), 1e-14);
  // entrywise exp(z ln lambda) with z = i pi
  const Element t = diag_element({std::numbers::e, 1.0});
  EXPECT_ELEMENT_NEAR(power(t, I * std::numbers::pi), diag_element({-1.0, 1.0}), 1e-14);
}

TEST(Power, RejectsSingular)
{
  try {
    (void)power(diag_element({1.0, 0.0}), 0.5);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NotStrictlyPositive);
  }
}

TEST(Power, GroupLaw)
{
  CounterRng rng(9);
  for (int i = 0; i < 20; ++i) {
    const Element t = random_strictly_positive(rng, kMixed, 1e3);
    const cplx y(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const cplx z(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Element lhs = power(t, y) * power(t, z);
    const Element rhs = power(t, y + z);
    EXPECT_LE(op_norm(lhs - rhs), 1e-10 * op_norm(rhs));
  }
  const Element t = random_strictly_positive(rng, kMixed, 10.0);
  EXPECT_ELEMENT_NEAR(power(t, 0.0), Element::identity(kMixed), 1e-13);
  EXPECT_ELEMENT_NEAR(power(t, 1.0), t, 1e-12);
}

TEST(StrictPositivity, Examples)
{
  EXPECT_TRUE(is_strictly_positive(Element::identity(kMixed)));
  EXPECT_FALSE(is_strictly_positive(diag_element({1.0, 0.0})));
  // characteristic polynomial (2 - x)^2 - 1 has roots 1 and 3
  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  EXPECT_TRUE(is_strictly_positive(Element(m)));
  EXPECT_FALSE(is_strictly_positive(diag_element({1.0, -1.0})));
  Matrix nh(2, 2);
  nh << 2, 1, 0, 2;
  EXPECT_FALSE(is_strictly_positive(Element(nh)));
}

TEST(RandomData, ConditionNumberIsExact)
{
  CounterRng rng(10);
  const Element t = random_strictly_positive(rng, kMixed, 1e4);
  EXPECT_NEAR(condition_number(t), 1e4, 1e-6 * 1e4);
}

TEST(RandomData, SeedDeterminesStream)
{
  CounterRng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const double x = a.gaussian();
    EXPECT_EQ(x, b.gaussian());
    EXPECT_NE(x, c.gaussian());
  }
}

TEST(Serialization, RoundTripIsBitExact)
{
  CounterRng rng(11);
  for (int i = 0; i < 10; ++i) {
    const Element x = (1.0 / 3.0) * random_element(rng, kMixed);
    const std::string text = to_json(x).dump();
    EXPECT_EQ(element_from_json(json::parse(text)), x);
  }
}

TEST(Serialization, RowMajorLayout)
{
  const json j = to_json(e(2, 0, 1));
  EXPECT_EQ(j.dump(), R"({"blocks":[[[0.0,0.0],[1.0,0.0],[0.0,0.0],[0.0,0.0]]]})");
  EXPECT_THROW(element_from_json(json::parse(R"({"blocks":[[[1,0],[2,0],[3,0]]]})")), Error);
  EXPECT_THROW(element_from_json(json::parse(R"({"block":[]})")), Error);
}

TEST(Kron, NormIsMultiplicative)
{
  CounterRng rng(12);
  for (int i = 0; i < 10; ++i) {
    const Element x = random_element(rng, BlockShape{2, 3});
    const Element y = random_element(rng, BlockShape{3});
    EXPECT_NEAR(op_norm(kron(x, y)), op_norm(x) * op_norm(y), 1e-12 * op_norm(x) * op_norm(y));
  }
}

}  // namespace

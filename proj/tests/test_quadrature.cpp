#include <cmath>

#include <gtest/gtest.h>

#include "hzfem/quadrature.hpp"

using namespace hzfem;

namespace
{

// Integral over the unit right tet (|K| = 1/6) of a barycentric monomial.
double integrate_unit_tet(const QuadratureRule& rule, const std::vector<int>& a)
{
    return apply_rule_to_monomial(rule, a) / 6.0;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

} // namespace

TEST(Quadrature, CentroidRule)
{
    const QuadratureRule rule = simplex_rule(3, 1);
    ASSERT_EQ(rule.size(), 1u);
    for (double l : rule.points[0])
        EXPECT_NEAR(l, 0.25, 1e-15);
    EXPECT_NEAR(integrate_unit_tet(rule, {1, 0, 0, 0}), (1.0 / 6.0) / 4.0, 1e-16);
}

TEST(Quadrature, SecondMoments)
{
    const QuadratureRule rule = simplex_rule(3, 2);
    EXPECT_NEAR(apply_rule_to_monomial(rule, {2, 0, 0, 0}), 1.0 / 10.0, 1e-15);
    EXPECT_NEAR(apply_rule_to_monomial(rule, {1, 1, 0, 0}), 1.0 / 20.0, 1e-15);
}

TEST(Quadrature, CentroidRuleIsNotQuadraticExact)
{
    const QuadratureRule rule = simplex_rule(3, 1);
    EXPECT_NEAR(apply_rule_to_monomial(rule, {1, 1, 0, 0}), 1.0 / 16.0, 1e-15);
    EXPECT_GT(verify_rule(rule, 2), 0.1);
}

TEST(Quadrature, DegreeEightFactorialOracle)
{
    const QuadratureRule rule = simplex_rule(3, 8);
    const double expected = 6.0 * factorial(2) * factorial(3) * factorial(3) / factorial(11);
    EXPECT_NEAR(apply_rule_to_monomial(rule, {2, 3, 3, 0}) / expected, 1.0, 1e-13);
}

TEST(Quadrature, WeightsSumToOne)
{
    for (int dim : {2, 3})
        for (int d = 0; d <= kMaxQuadratureDegree; ++d) {
            const QuadratureRule rule = simplex_rule(dim, d);
            double s = 0.0;
            for (double w : rule.weights) {
                EXPECT_GT(w, 0.0);
                s += w;
            }
            EXPECT_NEAR(s, 1.0, 1e-14);
            for (const auto& p : rule.points) {
                ASSERT_EQ(p.size(), static_cast<std::size_t>(dim + 1));
                for (double l : p)
                    EXPECT_GE(l, 0.0);
            }
        }
}

class QuadratureExactness : public ::testing::TestWithParam<int>
{
};

TEST_P(QuadratureExactness, AllMonomialsUpToDegree)
{
    const int d = GetParam();
    EXPECT_LE(verify_rule(simplex_rule(3, d)), 1e-13) << "tetrahedron degree " << d;
    EXPECT_LE(verify_rule(simplex_rule(2, d)), 1e-13) << "triangle degree " << d;
}

INSTANTIATE_TEST_SUITE_P(Degrees, QuadratureExactness, ::testing::Range(0, kMaxQuadratureDegree + 1));

TEST(Quadrature, MonomialMeanFormula)
{
    EXPECT_DOUBLE_EQ(simplex_monomial_mean({0, 0, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(simplex_monomial_mean({1, 0, 0, 0}), 0.25);
    EXPECT_DOUBLE_EQ(simplex_monomial_mean({1, 1, 0}), 1.0 / 12.0);
    EXPECT_EQ(barycentric_exponents(3, 2).size(), 15u);
}

TEST(Quadrature, RejectsUnsupportedRequests)
{
    EXPECT_THROW(simplex_rule(3, kMaxQuadratureDegree + 1), CapabilityError);
    EXPECT_THROW(simplex_rule(1, 4), CapabilityError);
    EXPECT_THROW(simplex_rule(3, -1), CapabilityError);
}

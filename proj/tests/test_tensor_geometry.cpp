#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hzfem/lagrange.hpp"
#include "hzfem/quadrature.hpp"
#include "hzfem/tensor_geometry.hpp"

using namespace hzfem;

namespace
{

TetFrame unit_tet() { return tet_frame({Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(0, 0, 1)}); }

SymTensor sym(double a11, double a22, double a33, double a12, double a13, double a23)
{
    return SymTensor(a11, a22, a33, a12, a13, a23);
}

void expect_tensor_near(const SymTensor& a, const SymTensor& b, double tol)
{
    for (int i = 0; i < 6; ++i)
        EXPECT_NEAR(a[i], b[i], tol) << "component " << i;
}

TetFrame random_tet(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        std::array<Point3, 4> x;
        for (auto& p : x)
            p = Point3(u(rng), u(rng), u(rng));
        if (signed_volume(x) < 0.0)
            std::swap(x[2], x[3]);
        if (signed_volume(x) > 0.05)
            return tet_frame(x);
    }
}

} // namespace

TEST(SymTensor, FrobeniusCountsOffDiagonalTwice)
{
    const SymTensor a = sym(1, 2, 3, 4, 5, 6);
    Eigen::Matrix3d m;
    m << 1, 4, 5, 4, 2, 6, 5, 6, 3;
    EXPECT_DOUBLE_EQ(frobenius(a, a), m.squaredNorm());
    expect_tensor_near(SymTensor::from_matrix(m), a, 0.0);
    EXPECT_DOUBLE_EQ(a(0, 2), 5.0);
    EXPECT_DOUBLE_EQ(a(2, 1), 6.0);
    EXPECT_DOUBLE_EQ(a.trace(), 6.0);
}

TEST(SymTensor, OuterProductsAndMatrixVector)
{
    const Point3 t(1, -1, 0);
    expect_tensor_near(SymTensor::outer(t), sym(1, 1, 0, -1, 0, 0), 0.0);
    expect_tensor_near(SymTensor::sym_outer(Point3::UnitZ(), Point3::UnitX()), sym(0, 0, 0, 0, 1, 0), 0.0);
    const Point3 v = sym(1, 2, 3, 4, 5, 6) * Point3(1, 0, 0);
    EXPECT_EQ(v, Point3(1, 4, 5));
}

TEST(TetFrame, UnitRightTet)
{
    const TetFrame f = unit_tet();
    EXPECT_NEAR(f.volume, 1.0 / 6.0, 1e-16);
    EXPECT_EQ(f.normals[1], Point3::UnitX());
    EXPECT_EQ(f.normals[2], Point3::UnitY());
    EXPECT_EQ(f.normals[3], Point3::UnitZ());
    EXPECT_EQ(f.normals[0], Point3(-1, -1, -1));
}

TEST(TetFrame, NormalsInvertEdgeMatrix)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const TetFrame f = random_tet(rng);
        for (int i = 1; i <= 3; ++i)
            for (int j = 1; j <= 3; ++j) {
                const Point3 t0j = f.vertices[static_cast<std::size_t>(j)] - f.vertices[0];
                EXPECT_NEAR(f.normals[static_cast<std::size_t>(i)].dot(t0j), i == j ? 1.0 : 0.0, 1e-12);
            }
    }
}

TEST(TetFrame, RejectsDegenerateAndInverted)
{
    EXPECT_THROW(tet_frame({Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(1, 1, 0)}), GeometryError);
    EXPECT_THROW(tet_frame({Point3(0, 0, 0), Point3(0, 1, 0), Point3(1, 0, 0), Point3(0, 0, 1)}), GeometryError);
}

TEST(TangentTensors, UnitRightTetExamples)
{
    const TangentSet ts = tangent_tensors(unit_tet());
    expect_tensor_near(ts.T[0], sym(1, 0, 0, 0, 0, 0), 0.0);       // T_01
    expect_tensor_near(ts.T[3], sym(1, 1, 0, -1, 0, 0), 0.0);      // T_12
    std::mt19937_64 rng(3);
    const TangentSet r = tangent_tensors(random_tet(rng));
    for (int e = 0; e < 6; ++e)
        EXPECT_NEAR(r.T[static_cast<std::size_t>(e)].trace(), r.t[static_cast<std::size_t>(e)].squaredNorm(), 1e-14);
}

TEST(DualBasis, UnitRightTetExamples)
{
    const DualSet d = dual_basis(tangent_tensors(unit_tet()));
    expect_tensor_near(d.M[0], sym(1, 0, 0, 0.5, 0.5, 0), 1e-14);   // M_01
    expect_tensor_near(d.M[3], sym(0, 0, 0, -0.5, 0, 0), 1e-14);    // M_12
}

TEST(DualBasis, DualityOnRandomTets)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const TangentSet ts = tangent_tensors(random_tet(rng));
        const DualSet d = dual_basis(ts);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                EXPECT_NEAR(frobenius(d.M[i], ts.T[j]), i == j ? 1.0 : 0.0, 1e-11);
    }
}

TEST(SkewEdgeVectors, UnitRightTet)
{
    const TetFrame f = unit_tet();
    const auto s = skew_edge_vectors(f);
    EXPECT_NEAR(s[0].dot(f.edge_vector(0)), 0.0, 1e-15);   // t01
    EXPECT_NEAR(s[0].dot(f.edge_vector(4)), 0.0, 1e-15);   // t23
    EXPECT_NEAR(s[0].dot(f.edge_vector(1)), -1.0, 1e-15);  // t02
    EXPECT_NEAR(s[1].dot(f.edge_vector(0)), -1.0, 1e-15);
    EXPECT_NEAR(s[2].dot(f.edge_vector(0)), -1.0, 1e-15);
}

TEST(SkewEdgeVectors, RelationsOnRandomTets)
{
    // n_i^T T_e n_i vanishes for the three edges on face i; s_m^T T_e s_m
    // vanishes on the two skew edges it is orthogonal to.
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const TetFrame f = random_tet(rng);
        const TangentSet ts = tangent_tensors(f);
        const auto s = skew_edge_vectors(f);
        const std::array<std::array<int, 2>, 3> pairs{{{0, 4}, {1, 5}, {2, 3}}};
        for (std::size_t m = 0; m < 3; ++m)
            for (int e : pairs[m])
                EXPECT_NEAR(s[m].dot(ts.T[static_cast<std::size_t>(e)] * s[m]), 0.0, 1e-12);
        for (int i = 0; i < 4; ++i)
            for (int e = 0; e < 6; ++e) {
                const auto& ab = kLocalEdges[static_cast<std::size_t>(e)];
                if (ab[0] == i || ab[1] == i)
                    continue;
                const Point3& n = f.normals[static_cast<std::size_t>(i)];
                EXPECT_NEAR(n.dot(ts.T[static_cast<std::size_t>(e)] * n), 0.0, 1e-11);
            }
    }
}

TEST(RigidMotions, ZeroStrainAndFullRank)
{
    for (int i = 0; i < RigidMotionBasis::size; ++i)
        EXPECT_EQ(RigidMotionBasis::symmetric_gradient(i).max_abs(), 0.0);
    EXPECT_EQ(RigidMotionBasis::value(3, Point3(1, 2, 3)), Point3(-2, 1, 0));

    const TetFrame f = unit_tet();
    const QuadratureRule rule = simplex_rule(3, 2);
    Eigen::Matrix<double, 6, 6> gram = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Point3 x = f.point({rule.points[q][0], rule.points[q][1], rule.points[q][2], rule.points[q][3]});
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b)
                gram(a, b) += rule.weights[q] * f.volume * RigidMotionBasis::value(a, x).dot(RigidMotionBasis::value(b, x));
    }
    Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(gram);
    EXPECT_GT(svd.singularValues()(5), 1e-6);
}

TEST(Bubble, MidpointValueAndIntegral)
{
    const TetFrame f = unit_tet();
    const auto one = [](const Point3&) { return 1.0; };
    const Point3 mid = 0.5 * (f.vertices[0] + f.vertices[1]);
    const SymTensor b = bubble_value(f, 0, 1, one, mid);
    expect_tensor_near(b, 0.25 * tangent_tensors(f).T[0], 1e-15);

    const QuadratureRule rule = simplex_rule(3, 2);
    double integral = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
        integral += rule.weights[q] * f.volume * rule.points[q][0] * rule.points[q][1];
    EXPECT_NEAR(integral, 1.0 / 120.0, 1e-16);
    EXPECT_THROW(bubble_value(f, 1, 1, one, mid), std::invalid_argument);
}

TEST(Bubble, ZeroNormalFluxOnAllFaces)
{
    std::mt19937_64 rng(21);
    const QuadratureRule face_rule = simplex_rule(2, 6);
    const auto p = [](const Point3& x) { return 1.0 + x[0] - 2.0 * x[1] * x[2]; };
    for (int trial = 0; trial < 20; ++trial) {
        const TetFrame f = random_tet(rng);
        for (int face = 0; face < 4; ++face) {
            const Point3 n = f.normals[static_cast<std::size_t>(face)].normalized();
            const auto& fv = kLocalFaces[static_cast<std::size_t>(face)];
            for (const auto& q : face_rule.points) {
                Point3 x = Point3::Zero();
                for (std::size_t v = 0; v < 3; ++v)
                    x += q[v] * f.vertices[static_cast<std::size_t>(fv[v])];
                for (const auto& ab : kLocalEdges)
                    EXPECT_LT((bubble_value(f, ab[0], ab[1], p, x) * n).norm(), 1e-13 * 16.0);
            }
        }
    }
}

TEST(Lagrange, DimensionsAndKroneckerProperty)
{
    EXPECT_EQ(dim_p(3), 20);
    EXPECT_EQ(dim_p(4), 35);
    const int k = 4;
    const LagrangeNodeSet nodes = lagrange_nodes(k);
    ASSERT_EQ(static_cast<int>(nodes.size()), dim_p(k));
    const LagrangeBasis basis(k);
    std::vector<double> phi;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        std::array<double, 4> l{};
        for (std::size_t i = 0; i < 4; ++i)
            l[i] = nodes.index[a][i] / static_cast<double>(k);
        basis.evaluate(l, phi);
        for (std::size_t b = 0; b < nodes.size(); ++b)
            EXPECT_NEAR(phi[b], a == b ? 1.0 : 0.0, 1e-13);
    }
}

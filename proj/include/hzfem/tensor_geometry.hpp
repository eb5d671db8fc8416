#pragma once

#include <array>
#include <cmath>
#include <string>

#include "hzfem/errors.hpp"
#include "hzfem/mesh.hpp"
#include "hzfem/sym_tensor.hpp"

namespace hzfem
{

/// Affine frame of a tetrahedron x0..x3.
///
/// The rows of the inverse edge matrix are the barycentric gradients n1, n2, n3
/// (scaled inward face normals); n0 = -(n1 + n2 + n3).
struct TetFrame
{
    std::array<Point3, 4> vertices{};
    Eigen::Matrix3d edge_matrix = Eigen::Matrix3d::Zero();  // columns x1-x0, x2-x0, x3-x0
    std::array<Point3, 4> normals{};                          // grad lambda_i
    double volume = 0.0;

    /// Characteristic length: mean edge length.
    double scale() const
    {
        double s = 0.0;
        for (const auto& e : kLocalEdges)
            s += (vertices[static_cast<std::size_t>(e[1])] - vertices[static_cast<std::size_t>(e[0])]).norm();
        return s / 6.0;
    }

    Point3 edge_vector(int e) const
    {
        const auto& ab = kLocalEdges[static_cast<std::size_t>(e)];
        return vertices[static_cast<std::size_t>(ab[1])] - vertices[static_cast<std::size_t>(ab[0])];
    }

    std::array<double, 4> barycentric(const Point3& x) const
    {
        std::array<double, 4> l{};
        const Point3 d = x - vertices[0];
        l[1] = normals[1].dot(d);
        l[2] = normals[2].dot(d);
        l[3] = normals[3].dot(d);
        l[0] = 1.0 - l[1] - l[2] - l[3];
        return l;
    }

    Point3 point(const std::array<double, 4>& lambda) const
    {
        Point3 x = Point3::Zero();
        for (std::size_t i = 0; i < 4; ++i)
            x += lambda[i] * vertices[i];
        return x;
    }
};

inline TetFrame tet_frame(const std::array<Point3, 4>& x)
{
    TetFrame f;
    f.vertices = x;
    for (int j = 0; j < 3; ++j)
        f.edge_matrix.col(j) = x[static_cast<std::size_t>(j + 1)] - x[0];
    const double det = f.edge_matrix.determinant();
    const double s = f.scale();
    if (std::abs(det) < 1e-14 * s * s * s)
        throw GeometryError("degenerate tetrahedron (|det| = " + std::to_string(std::abs(det)) + ")");
    if (det < 0.0)
        throw GeometryError("negatively oriented tetrahedron");
    const Eigen::Matrix3d inv = f.edge_matrix.inverse();
    for (int i = 0; i < 3; ++i)
        f.normals[static_cast<std::size_t>(i + 1)] = inv.row(i).transpose();
    f.normals[0] = -(f.normals[1] + f.normals[2] + f.normals[3]);
    f.volume = det / 6.0;
    return f;
}

inline TetFrame tet_frame(const Mesh& mesh, Index t) { return tet_frame(mesh.tet_points(t)); }

/// Edge tangents t_ij = x_j - x_i and tensors T_ij = t_ij t_ij^T in (01,02,03,12,23,13) order.
struct TangentSet
{
    std::array<Point3, 6> t{};
    std::array<SymTensor, 6> T{};
};

inline TangentSet tangent_tensors(const TetFrame& frame)
{
    TangentSet s;
    for (int e = 0; e < 6; ++e) {
        s.t[static_cast<std::size_t>(e)] = frame.edge_vector(e);
        s.T[static_cast<std::size_t>(e)] = SymTensor::outer(s.t[static_cast<std::size_t>(e)]);
    }
    return s;
}

/// M_ij with M_ij : T_i'j' = delta.
struct DualSet
{
    std::array<SymTensor, 6> M{};
};

inline DualSet dual_basis(const TangentSet& tangents)
{
    const Eigen::Matrix<double, 6, 6> gram = frobenius_gram(tangents.T);
    Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(gram);
    const auto& sv = svd.singularValues();
    if (sv(5) <= 0.0 || sv(0) / sv(5) > 1e12)
        throw GeometryError("tangent-tensor Gram matrix is near singular");
    return DualSet{dual_tensors(tangents.T)};
}

/// Vectors orthogonal to the three pairs of skew edges (01,23), (02,13), (03,12),
/// scaled by 6|K| and signed so that s_i . t_01 = -1 for i = 2, 3 and s_1 . t_02 = -1.
inline std::array<Point3, 3> skew_edge_vectors(const TetFrame& frame)
{
    const double six_vol = 6.0 * frame.volume;
    const Point3 t01 = frame.edge_vector(0), t02 = frame.edge_vector(1), t03 = frame.edge_vector(2);
    const Point3 t12 = frame.edge_vector(3), t23 = frame.edge_vector(4), t13 = frame.edge_vector(5);
    return {t01.cross(t23) / six_vol, t13.cross(t02) / six_vol, t03.cross(t12) / six_vol};
}

/// Infinitesimal rigid motions: three translations, then rotations
/// (-y, x, 0), (-z, 0, x), (0, -z, y).
struct RigidMotionBasis
{
    static constexpr int size = 6;

    static Point3 value(int i, const Point3& x)
    {
        switch (i) {
        case 0: return {1.0, 0.0, 0.0};
        case 1: return {0.0, 1.0, 0.0};
        case 2: return {0.0, 0.0, 1.0};
        case 3: return {-x[1], x[0], 0.0};
        case 4: return {-x[2], 0.0, x[0]};
        case 5: return {0.0, -x[2], x[1]};
        default: throw std::out_of_range("rigid motion index");
        }
    }

    /// Constant gradient matrix (d v_r / d x_c).
    static Eigen::Matrix3d gradient(int i)
    {
        Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
        switch (i) {
        case 3: g(0, 1) = -1.0; g(1, 0) = 1.0; break;
        case 4: g(0, 2) = -1.0; g(2, 0) = 1.0; break;
        case 5: g(1, 2) = -1.0; g(2, 1) = 1.0; break;
        default: break;
        }
        return g;
    }

    static SymTensor symmetric_gradient(int i) { return SymTensor::from_matrix(gradient(i)); }
};

inline RigidMotionBasis rigid_motion_basis() { return {}; }

/// lambda_a lambda_b p(x) T_ab at x, for an edge (a, b) of the tetrahedron.
template <class ScalarFn>
SymTensor bubble_value(const TetFrame& frame, int a, int b, const ScalarFn& p, const Point3& x)
{
    if (a < 0 || b < 0 || a > 3 || b > 3 || a == b)
        throw std::invalid_argument("invalid edge pair for bubble");
    const auto lambda = frame.barycentric(x);
    const Point3 t = frame.vertices[static_cast<std::size_t>(b)] - frame.vertices[static_cast<std::size_t>(a)];
    return lambda[static_cast<std::size_t>(a)] * lambda[static_cast<std::size_t>(b)] * p(x) * SymTensor::outer(t);
}

} // namespace hzfem

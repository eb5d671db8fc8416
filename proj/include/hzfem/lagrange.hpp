#pragma once

#include <array>
#include <vector>

#include "hzfem/quadrature.hpp"
#include "hzfem/tensor_geometry.hpp"

namespace hzfem
{

enum class Carrier { vertex, edge, face, cell };

inline int dim_p(int degree)
{
    if (degree < 0)
        return 0;
    return (degree + 1) * (degree + 2) * (degree + 3) / 6;
}

/// Equispaced Lagrange nodes of degree k on a tetrahedron, as barycentric
/// multi-indices (i0, i1, i2, i3) with i0 + i1 + i2 + i3 = k.
struct LagrangeNodeSet
{
    int degree = 0;
    std::vector<std::array<int, 4>> index;

    static Carrier classify(const std::array<int, 4>& a)
    {
        int nz = 0;
        for (int v : a)
            nz += v > 0;
        switch (nz) {
        case 1: return Carrier::vertex;
        case 2: return Carrier::edge;
        case 3: return Carrier::face;
        default: return Carrier::cell;
        }
    }

    std::size_t size() const { return index.size(); }
};

inline LagrangeNodeSet lagrange_nodes(int k)
{
    LagrangeNodeSet s;
    s.degree = k;
    for (const auto& a : barycentric_exponents(3, k)) {
        if (a[0] + a[1] + a[2] + a[3] != k)
            continue;
        s.index.push_back({a[0], a[1], a[2], a[3]});
    }
    return s;
}

/// Values and barycentric partial derivatives of all Lagrange basis functions of
/// degree k at one barycentric point. phi_a = prod_i prod_{j<a_i} (k l_i - j)/(j+1).
class LagrangeBasis
{
public:
    explicit LagrangeBasis(int k) : nodes_(lagrange_nodes(k)) {}

    const LagrangeNodeSet& nodes() const { return nodes_; }
    int degree() const { return nodes_.degree; }
    std::size_t size() const { return nodes_.size(); }

    void evaluate(const std::array<double, 4>& lambda, std::vector<double>& values) const
    {
        const int k = nodes_.degree;
        // Univariate factors P_m(l) for m = 0..k, per barycentric coordinate.
        std::array<std::vector<double>, 4> p;
        for (std::size_t i = 0; i < 4; ++i)
            univariate(k, lambda[i], p[i], nullptr);
        values.resize(size());
        for (std::size_t n = 0; n < size(); ++n) {
            const auto& a = nodes_.index[n];
            values[n] = p[0][static_cast<std::size_t>(a[0])] * p[1][static_cast<std::size_t>(a[1])]
                      * p[2][static_cast<std::size_t>(a[2])] * p[3][static_cast<std::size_t>(a[3])];
        }
    }

    /// Values and physical gradients (using barycentric gradients `grads`).
    void evaluate(const std::array<double, 4>& lambda, const std::array<Point3, 4>& grads,
                  std::vector<double>& values, std::vector<Point3>& gradients) const
    {
        const int k = nodes_.degree;
        std::array<std::vector<double>, 4> p, dp;
        for (std::size_t i = 0; i < 4; ++i)
            univariate(k, lambda[i], p[i], &dp[i]);
        values.resize(size());
        gradients.resize(size());
        for (std::size_t n = 0; n < size(); ++n) {
            const auto& a = nodes_.index[n];
            std::array<double, 4> f{}, df{};
            for (std::size_t i = 0; i < 4; ++i) {
                f[i] = p[i][static_cast<std::size_t>(a[i])];
                df[i] = dp[i][static_cast<std::size_t>(a[i])];
            }
            values[n] = f[0] * f[1] * f[2] * f[3];
            Point3 g = Point3::Zero();
            g += df[0] * f[1] * f[2] * f[3] * grads[0];
            g += f[0] * df[1] * f[2] * f[3] * grads[1];
            g += f[0] * f[1] * df[2] * f[3] * grads[2];
            g += f[0] * f[1] * f[2] * df[3] * grads[3];
            gradients[n] = g;
        }
    }

private:
    static void univariate(int k, double l, std::vector<double>& p, std::vector<double>* dp)
    {
        p.assign(static_cast<std::size_t>(k + 1), 1.0);
        if (dp)
            dp->assign(static_cast<std::size_t>(k + 1), 0.0);
        for (int m = 1; m <= k; ++m) {
            const double factor = (k * l - (m - 1)) / m;
            p[static_cast<std::size_t>(m)] = p[static_cast<std::size_t>(m - 1)] * factor;
            if (dp)
                (*dp)[static_cast<std::size_t>(m)] = (*dp)[static_cast<std::size_t>(m - 1)] * factor
                                                   + p[static_cast<std::size_t>(m - 1)] * k / m;
        }
    }

    LagrangeNodeSet nodes_;
};

} // namespace hzfem

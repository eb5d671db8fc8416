#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace hzfem
{

using Point3 = Eigen::Vector3d;

/// Symmetric 3x3 tensor stored as (s11, s22, s33, s12, s13, s23).
class SymTensor
{
public:
    constexpr SymTensor() = default;

    constexpr SymTensor(double s11, double s22, double s33, double s12, double s13, double s23)
        : c_{s11, s22, s33, s12, s13, s23}
    {}

    static SymTensor from_matrix(const Eigen::Matrix3d& m)
    {
        // Off-diagonals are averaged so an almost-symmetric input lands on S.
        return {m(0, 0), m(1, 1), m(2, 2),
                0.5 * (m(0, 1) + m(1, 0)),
                0.5 * (m(0, 2) + m(2, 0)),
                0.5 * (m(1, 2) + m(2, 1))};
    }

    /// t t^T
    static SymTensor outer(const Point3& t)
    {
        return {t[0] * t[0], t[1] * t[1], t[2] * t[2], t[0] * t[1], t[0] * t[2], t[1] * t[2]};
    }

    /// a b^T + b a^T
    static SymTensor sym_outer(const Point3& a, const Point3& b)
    {
        return {2.0 * a[0] * b[0], 2.0 * a[1] * b[1], 2.0 * a[2] * b[2],
                a[0] * b[1] + a[1] * b[0],
                a[0] * b[2] + a[2] * b[0],
                a[1] * b[2] + a[2] * b[1]};
    }

    static constexpr SymTensor identity() { return {1.0, 1.0, 1.0, 0.0, 0.0, 0.0}; }

    /// Canonical basis: e1e1, e2e2, e3e3, e1e2+e2e1, e1e3+e3e1, e2e3+e3e2.
    /// Coefficients of a tensor in this basis are exactly its six stored components.
    static constexpr SymTensor canonical(int i)
    {
        SymTensor s;
        s.c_[static_cast<std::size_t>(i)] = 1.0;
        return s;
    }

    constexpr double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    constexpr double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

    double operator()(int i, int j) const
    {
        if (i == j)
            return c_[static_cast<std::size_t>(i)];
        const int lo = i < j ? i : j;
        const int hi = i < j ? j : i;
        if (lo == 0)
            return hi == 1 ? c_[3] : c_[4];
        return c_[5];
    }

    Eigen::Matrix3d matrix() const
    {
        Eigen::Matrix3d m;
        m << c_[0], c_[3], c_[4],
             c_[3], c_[1], c_[5],
             c_[4], c_[5], c_[2];
        return m;
    }

    double trace() const { return c_[0] + c_[1] + c_[2]; }

    Point3 operator*(const Point3& v) const
    {
        return {c_[0] * v[0] + c_[3] * v[1] + c_[4] * v[2],
                c_[3] * v[0] + c_[1] * v[1] + c_[5] * v[2],
                c_[4] * v[0] + c_[5] * v[1] + c_[2] * v[2]};
    }

    SymTensor& operator+=(const SymTensor& o)
    {
        for (std::size_t i = 0; i < 6; ++i)
            c_[i] += o.c_[i];
        return *this;
    }
    SymTensor& operator-=(const SymTensor& o)
    {
        for (std::size_t i = 0; i < 6; ++i)
            c_[i] -= o.c_[i];
        return *this;
    }
    SymTensor& operator*=(double a)
    {
        for (auto& x : c_)
            x *= a;
        return *this;
    }

    friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
    friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
    friend SymTensor operator*(double s, SymTensor a) { return a *= s; }
    friend SymTensor operator*(SymTensor a, double s) { return a *= s; }

    /// Frobenius double contraction A:B.
    friend double frobenius(const SymTensor& a, const SymTensor& b)
    {
        return a.c_[0] * b.c_[0] + a.c_[1] * b.c_[1] + a.c_[2] * b.c_[2]
             + 2.0 * (a.c_[3] * b.c_[3] + a.c_[4] * b.c_[4] + a.c_[5] * b.c_[5]);
    }

    double norm() const { return std::sqrt(frobenius(*this, *this)); }

    double max_abs() const
    {
        double m = 0.0;
        for (double x : c_)
            m = std::max(m, std::abs(x));
        return m;
    }

    const std::array<double, 6>& components() const { return c_; }

private:
    std::array<double, 6> c_{};
};

/// Gram matrix of six tensors under the Frobenius pairing.
inline Eigen::Matrix<double, 6, 6> frobenius_gram(const std::array<SymTensor, 6>& t)
{
    Eigen::Matrix<double, 6, 6> g;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            g(i, j) = frobenius(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(j)]);
    return g;
}

/// Tensors D_i with D_i : T_j = delta_ij for a basis T of S.
/// With P the component matrix of T and W = diag(1,1,1,2,2,2) the pairing
/// weights, D = W^-1 P^-T; this avoids squaring the condition number through
/// the Gram matrix.
inline std::array<SymTensor, 6> dual_tensors(const std::array<SymTensor, 6>& basis)
{
    Eigen::Matrix<double, 6, 6> P;
    for (int j = 0; j < 6; ++j)
        for (int c = 0; c < 6; ++c)
            P(c, j) = basis[static_cast<std::size_t>(j)][c];
    const Eigen::Matrix<double, 6, 6> X = P.transpose().fullPivLu().solve(Eigen::Matrix<double, 6, 6>::Identity());
    std::array<SymTensor, 6> dual;
    for (std::size_t i = 0; i < 6; ++i)
        for (int c = 0; c < 6; ++c)
            dual[i][c] = X(c, static_cast<int>(i)) * (c < 3 ? 1.0 : 0.5);
    return dual;
}

} // namespace hzfem

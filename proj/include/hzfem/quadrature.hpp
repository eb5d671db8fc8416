#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hzfem/errors.hpp"

namespace hzfem
{

inline constexpr int kMaxQuadratureDegree = 14;

/// Rule on the reference simplex in barycentric coordinates.
/// Weights are fractions of the simplex measure and sum to 1.
struct QuadratureRule
{
    int dimension = 3;
    int exactness_degree = 0;
    std::vector<std::vector<double>> points;  // dimension + 1 barycentric coordinates each
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
};

namespace detail
{

/// Gauss-Jacobi nodes/weights on [0, 1] for the weight (1 - t)^alpha, via Golub-Welsch.
inline void gauss_jacobi01(int n, double alpha, std::vector<double>& nodes, std::vector<double>& weights)
{
    // Recurrence for P^(alpha, 0) on [-1, 1].
    const double beta = 0.0;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double s = 2.0 * i + alpha + beta;
        const double a = (i == 0) ? (beta - alpha) / (alpha + beta + 2.0)
                                  : (beta * beta - alpha * alpha) / (s * (s + 2.0));
        J(i, i) = a;
        if (i + 1 < n) {
            const double m = i + 1.0;
            const double t = 2.0 * m + alpha + beta;
            const double b2 = 4.0 * m * (m + alpha) * (m + beta) * (m + alpha + beta) / (t * t * (t + 1.0) * (t - 1.0));
            J(i, i + 1) = J(i + 1, i) = std::sqrt(b2);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes.resize(static_cast<std::size_t>(n));
    weights.resize(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 + es.eigenvalues()(i));
        const double v0 = es.eigenvectors()(0, i);
        weights[static_cast<std::size_t>(i)] = v0 * v0;
        total += v0 * v0;
    }
    for (auto& w : weights)
        w /= total;
}

inline double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

} // namespace detail

/// Conical-product (collapsed Gauss-Jacobi) rule exact for total degree <= degree.
inline QuadratureRule simplex_rule(int dimension, int degree)
{
    if (dimension != 2 && dimension != 3)
        throw CapabilityError("quadrature dimension must be 2 or 3");
    if (degree < 0 || degree > kMaxQuadratureDegree)
        throw CapabilityError("quadrature degree " + std::to_string(degree) + " outside [0, "
                              + std::to_string(kMaxQuadratureDegree) + "]");

    const int n = std::max(1, (degree + 2) / 2);
    QuadratureRule rule;
    rule.dimension = dimension;
    rule.exactness_degree = degree;

    std::vector<double> xa, wa, xb, wb, xc, wc;
    if (dimension == 2) {
        detail::gauss_jacobi01(n, 1.0, xa, wa);
        detail::gauss_jacobi01(n, 0.0, xb, wb);
        for (std::size_t i = 0; i < xa.size(); ++i)
            for (std::size_t j = 0; j < xb.size(); ++j) {
                const double l1 = xa[i];
                const double l2 = xb[j] * (1.0 - xa[i]);
                rule.points.push_back({1.0 - l1 - l2, l1, l2});
                rule.weights.push_back(wa[i] * wb[j]);
            }
    } else {
        detail::gauss_jacobi01(n, 2.0, xa, wa);
        detail::gauss_jacobi01(n, 1.0, xb, wb);
        detail::gauss_jacobi01(n, 0.0, xc, wc);
        for (std::size_t i = 0; i < xa.size(); ++i)
            for (std::size_t j = 0; j < xb.size(); ++j)
                for (std::size_t l = 0; l < xc.size(); ++l) {
                    const double l1 = xa[i];
                    const double l2 = xb[j] * (1.0 - xa[i]);
                    const double l3 = xc[l] * (1.0 - xa[i]) * (1.0 - xb[j]);
                    rule.points.push_back({std::max(0.0, 1.0 - l1 - l2 - l3), l1, l2, l3});
                    rule.weights.push_back(wa[i] * wb[j] * wc[l]);
                }
    }
    return rule;
}

/// Mean of prod lambda_i^a_i over the reference simplex (integral over measure):
/// d! prod a_i! / (sum a_i + d)!.
inline double simplex_monomial_mean(const std::vector<int>& exponents)
{
    const int d = static_cast<int>(exponents.size()) - 1;
    int total = 0;
    double num = detail::factorial(d);
    for (int a : exponents) {
        num *= detail::factorial(a);
        total += a;
    }
    return num / detail::factorial(total + d);
}

/// Enumerate all barycentric exponent vectors of length (dimension + 1) with total degree <= max_degree.
inline std::vector<std::vector<int>> barycentric_exponents(int dimension, int max_degree)
{
    std::vector<std::vector<int>> out;
    std::vector<int> a(static_cast<std::size_t>(dimension + 1), 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int remaining) {
        if (pos == a.size()) {
            out.push_back(a);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            a[pos] = v;
            rec(pos + 1, remaining - v);
        }
        a[pos] = 0;
    };
    rec(0, max_degree);
    return out;
}

inline double apply_rule_to_monomial(const QuadratureRule& rule, const std::vector<int>& exponents)
{
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        double v = rule.weights[q];
        for (std::size_t i = 0; i < exponents.size(); ++i)
            v *= std::pow(rule.points[q][i], exponents[i]);
        s += v;
    }
    return s;
}

/// Largest relative error over all barycentric monomials of degree <= check_degree
/// (defaults to the rule's stated exactness).
inline double verify_rule(const QuadratureRule& rule, int check_degree = -1)
{
    const int deg = check_degree < 0 ? rule.exactness_degree : check_degree;
    double worst = 0.0;
    for (const auto& a : barycentric_exponents(rule.dimension, deg)) {
        const double exact = simplex_monomial_mean(a);
        worst = std::max(worst, std::abs(apply_rule_to_monomial(rule, a) - exact) / exact);
    }
    return worst;
}

} // namespace hzfem

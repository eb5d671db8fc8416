#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hzfem/errors.hpp"
#include "hzfem/spaces.hpp"

namespace hzfem
{

/// Isotropic compliance A s = (s - lambda/(2 mu + 3 lambda) tr(s) I) / (2 mu).
class ComplianceTensor
{
public:
    ComplianceTensor(double mu, double lambda) : mu_(mu), lambda_(lambda)
    {
        if (!(mu > 0.0))
            throw ConfigError("Lame constant mu must be positive");
        if (!(2.0 * mu + 3.0 * lambda > 0.0))
            throw ConfigError("compliance requires 2 mu + 3 lambda > 0");
    }

    double mu() const { return mu_; }
    double lambda() const { return lambda_; }

    SymTensor apply(const SymTensor& s) const
    {
        const double a = lambda_ / (2.0 * mu_ + 3.0 * lambda_);
        return (1.0 / (2.0 * mu_)) * (s - (a * s.trace()) * SymTensor::identity());
    }

    /// Inverse map: sigma = 2 mu eps + lambda tr(eps) I.
    SymTensor stiffness(const SymTensor& eps) const
    {
        return 2.0 * mu_ * eps + (lambda_ * eps.trace()) * SymTensor::identity();
    }

private:
    double mu_;
    double lambda_;
};

inline SymTensor apply_compliance(const ComplianceTensor& A, const SymTensor& s) { return A.apply(s); }

/// u = (2^4, 2^5, 2^6) x(1-x) y(1-y) z(1-z) on the unit cube, with its
/// strain, stress and load f = div sigma in closed form.
class ManufacturedSolution
{
public:
    explicit ManufacturedSolution(const ComplianceTensor& A) : A_(A) {}

    static constexpr std::array<double, 3> amplitude{16.0, 32.0, 64.0};

    static double bubble(const Point3& x)
    {
        return x[0] * (1 - x[0]) * x[1] * (1 - x[1]) * x[2] * (1 - x[2]);
    }

    static Point3 bubble_gradient(const Point3& x)
    {
        const double px = x[0] * (1 - x[0]), py = x[1] * (1 - x[1]), pz = x[2] * (1 - x[2]);
        return {(1 - 2 * x[0]) * py * pz, px * (1 - 2 * x[1]) * pz, px * py * (1 - 2 * x[2])};
    }

    static Eigen::Matrix3d bubble_hessian(const Point3& x)
    {
        const std::array<double, 3> p{x[0] * (1 - x[0]), x[1] * (1 - x[1]), x[2] * (1 - x[2])};
        const std::array<double, 3> dp{1 - 2 * x[0], 1 - 2 * x[1], 1 - 2 * x[2]};
        Eigen::Matrix3d h;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                double v = 1.0;
                for (std::size_t l = 0; l < 3; ++l) {
                    if (i == j && l == i)
                        v *= -2.0;
                    else if (l == i || l == j)
                        v *= dp[l];
                    else
                        v *= p[l];
                }
                h(static_cast<int>(i), static_cast<int>(j)) = v;
            }
        return h;
    }

    Point3 displacement(const Point3& x) const
    {
        const double g = bubble(x);
        return {amplitude[0] * g, amplitude[1] * g, amplitude[2] * g};
    }

    SymTensor strain(const Point3& x) const
    {
        const Point3 dg = bubble_gradient(x);
        Eigen::Matrix3d grad;
        for (int i = 0; i < 3; ++i)
            grad.row(i) = amplitude[static_cast<std::size_t>(i)] * dg.transpose();
        return SymTensor::from_matrix(grad);
    }

    SymTensor stress(const Point3& x) const { return A_.stiffness(strain(x)); }

    /// f = div sigma = mu c_i lap(g) + (mu + lambda) (H c)_i.
    Point3 load(const Point3& x) const
    {
        const Eigen::Matrix3d h = bubble_hessian(x);
        const Point3 c(amplitude[0], amplitude[1], amplitude[2]);
        return A_.mu() * h.trace() * c + (A_.mu() + A_.lambda()) * (h * c);
    }

    const ComplianceTensor& compliance() const { return A_; }

private:
    ComplianceTensor A_;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Blocks of [[M, B^T], [B, 0]] [sigma; u] = [0; F].
struct SaddleSystem
{
    SparseMatrix M;   // n_sigma x n_sigma, (A sigma, tau)
    SparseMatrix B;   // n_u x n_sigma, (div tau, v)
    Eigen::VectorXd F;
    SparseMatrix Mu;       // displacement L2 mass, block diagonal per tet
    SparseMatrix Mu_inv;   // its exact inverse
    Index n_sigma = 0;
    Index n_u = 0;

    Index size() const { return n_sigma + n_u; }

    SparseMatrix full_matrix() const
    {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(M.nonZeros() + 2 * B.nonZeros()));
        for (int c = 0; c < M.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(M, c); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int c = 0; c < B.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(B, c); it; ++it) {
                const auto r = static_cast<int>(n_sigma + it.row());
                trip.emplace_back(r, static_cast<int>(it.col()), it.value());
                trip.emplace_back(static_cast<int>(it.col()), r, it.value());
            }
        SparseMatrix K(static_cast<int>(size()), static_cast<int>(size()));
        K.setFromTriplets(trip.begin(), trip.end());
        return K;
    }

    Eigen::VectorXd rhs() const
    {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(size());
        b.tail(n_u) = F;
        return b;
    }
};

/// Default quadrature exactness for a stress degree k.
inline int default_quadrature_degree(int k) { return std::min(kMaxQuadratureDegree, 2 * k + 2); }

inline void require_quadrature(int k, int quad_degree)
{
    if (quad_degree < 2 * k)
        throw ConfigError("quadrature degree " + std::to_string(quad_degree)
                          + " cannot integrate the degree-" + std::to_string(2 * k) + " stress mass exactly");
}

struct ElementMatrices
{
    Eigen::MatrixXd M;   // local stress x local stress
    Eigen::MatrixXd B;   // local displacement x local stress
    Eigen::VectorXd F;   // local displacement
    Eigen::MatrixXd Mu;  // scalar P_{k-1} mass (same for each component)
};

/// Local blocks of one tetrahedron. Local displacement rows are ordered
/// (component, scalar) to match DisplacementDofMap::dof.
template <class LoadFn>
ElementMatrices element_matrices(const Mesh& mesh, const StressDofMap& smap, const DisplacementDofMap& umap,
                                 Index t, const QuadratureRule& rule, const ComplianceTensor& A, const LoadFn& f)
{
    const int k = smap.degree;
    require_quadrature(k, rule.exactness_degree);
    const TetFrame frame = tet_frame(mesh, t);
    const LagrangeBasis sbasis(k), ubasis(k - 1);
    const ElementTables tab = tabulate(frame, k, rule, sbasis, ubasis);

    const auto ns = static_cast<int>(sbasis.size());
    const int nu = umap.scalar_size;
    Eigen::MatrixXd scalar_mass = Eigen::MatrixXd::Zero(ns, ns);
    std::array<Eigen::MatrixXd, 3> grad_moment;   // [d](r, s) = int psi_r d_d phi_s
    for (auto& g : grad_moment)
        g = Eigen::MatrixXd::Zero(nu, ns);
    Eigen::MatrixXd load = Eigen::MatrixXd::Zero(nu, 3);
    Eigen::MatrixXd disp_mass = Eigen::MatrixXd::Zero(nu, nu);

    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double w = tab.weights[q];
        const auto& phi = tab.stress_phi[q];
        const auto& grad = tab.stress_grad[q];
        const auto& psi = tab.disp_phi[q];
        for (int a = 0; a < ns; ++a) {
            const double wa = w * phi[static_cast<std::size_t>(a)];
            for (int b = a; b < ns; ++b)
                scalar_mass(a, b) += wa * phi[static_cast<std::size_t>(b)];
        }
        for (int r = 0; r < nu; ++r) {
            const double wr = w * psi[static_cast<std::size_t>(r)];
            for (int s = 0; s < nu; ++s)
                disp_mass(r, s) += wr * psi[static_cast<std::size_t>(s)];
            for (int s = 0; s < ns; ++s)
                for (int d = 0; d < 3; ++d)
                    grad_moment[static_cast<std::size_t>(d)](r, s) += wr * grad[static_cast<std::size_t>(s)][d];
        }
        const Point3 fx = f(frame.point(tab.lambda[q]));
        for (int r = 0; r < nu; ++r)
            for (int c = 0; c < 3; ++c)
                load(r, c) += w * psi[static_cast<std::size_t>(r)] * fx[c];
    }
    scalar_mass.triangularView<Eigen::StrictlyLower>() = scalar_mass.transpose();

    const auto& dofs = smap.local[static_cast<std::size_t>(t)];
    const auto nd = static_cast<int>(dofs.size());
    std::vector<SymTensor> a_tensor(dofs.size());
    for (std::size_t i = 0; i < dofs.size(); ++i)
        a_tensor[i] = A.apply(dofs[i].tensor);

    ElementMatrices em;
    em.M.resize(nd, nd);
    for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nd; ++j) {
            const auto& di = dofs[static_cast<std::size_t>(i)];
            const auto& dj = dofs[static_cast<std::size_t>(j)];
            em.M(i, j) = scalar_mass(di.scalar, dj.scalar) * frobenius(a_tensor[static_cast<std::size_t>(i)], dj.tensor);
        }
    em.M = 0.5 * (em.M + em.M.transpose()).eval();

    em.B = Eigen::MatrixXd::Zero(3 * nu, nd);
    for (int j = 0; j < nd; ++j) {
        const auto& dj = dofs[static_cast<std::size_t>(j)];
        for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) {
                const double m = dj.tensor(c, d);
                if (m == 0.0)
                    continue;
                em.B.col(j).segment(c * nu, nu) += m * grad_moment[static_cast<std::size_t>(d)].col(dj.scalar);
            }
    }

    em.Mu = 0.5 * (disp_mass + disp_mass.transpose());
    em.F.resize(3 * nu);
    for (int c = 0; c < 3; ++c)
        em.F.segment(c * nu, nu) = load.col(c);
    return em;
}

/// Global saddle-point blocks, scattered in ascending element order.
template <class LoadFn>
SaddleSystem assemble(const Mesh& mesh, const StressDofMap& smap, const DisplacementDofMap& umap,
                      const ComplianceTensor& A, const LoadFn& f, int quad_degree = -1)
{
    const int qd = quad_degree < 0 ? default_quadrature_degree(smap.degree) : quad_degree;
    require_quadrature(smap.degree, qd);
    const QuadratureRule rule = simplex_rule(3, qd);

    SaddleSystem sys;
    sys.n_sigma = smap.num_dofs;
    sys.n_u = umap.num_dofs;
    sys.F = Eigen::VectorXd::Zero(sys.n_u);

    std::vector<Eigen::Triplet<double>> mt, bt, ut, uit;
    const std::size_t nd = smap.local.empty() ? 0 : smap.local.front().size();
    mt.reserve(mesh.tets.size() * nd * nd);
    bt.reserve(mesh.tets.size() * nd * static_cast<std::size_t>(umap.block_size()));

    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) {
        const ElementMatrices em = element_matrices(mesh, smap, umap, t, rule, A, f);
        const auto& dofs = smap.local[static_cast<std::size_t>(t)];
        for (int i = 0; i < em.M.rows(); ++i)
            for (int j = 0; j < em.M.cols(); ++j)
                if (em.M(i, j) != 0.0)
                    mt.emplace_back(static_cast<int>(dofs[static_cast<std::size_t>(i)].global),
                                    static_cast<int>(dofs[static_cast<std::size_t>(j)].global), em.M(i, j));
        const Index off = umap.offset(t);
        for (int r = 0; r < em.B.rows(); ++r) {
            for (int j = 0; j < em.B.cols(); ++j)
                if (em.B(r, j) != 0.0)
                    bt.emplace_back(static_cast<int>(off + r), static_cast<int>(dofs[static_cast<std::size_t>(j)].global),
                                    em.B(r, j));
            sys.F[off + r] += em.F[r];
        }
        const Eigen::MatrixXd mu_inv = em.Mu.inverse();
        const auto nu = static_cast<int>(em.Mu.rows());
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < nu; ++r)
                for (int s = 0; s < nu; ++s) {
                    const auto gr = static_cast<int>(off + c * nu + r), gs = static_cast<int>(off + c * nu + s);
                    ut.emplace_back(gr, gs, em.Mu(r, s));
                    uit.emplace_back(gr, gs, mu_inv(r, s));
                }
    }
    sys.M.resize(static_cast<int>(sys.n_sigma), static_cast<int>(sys.n_sigma));
    sys.M.setFromTriplets(mt.begin(), mt.end());
    sys.B.resize(static_cast<int>(sys.n_u), static_cast<int>(sys.n_sigma));
    sys.B.setFromTriplets(bt.begin(), bt.end());
    sys.Mu.resize(static_cast<int>(sys.n_u), static_cast<int>(sys.n_u));
    sys.Mu.setFromTriplets(ut.begin(), ut.end());
    sys.Mu_inv.resize(static_cast<int>(sys.n_u), static_cast<int>(sys.n_u));
    sys.Mu_inv.setFromTriplets(uit.begin(), uit.end());
    return sys;
}

// ---------------------------------------------------------------------------
// Error norms.

struct ErrorNorms
{
    double stress_l2 = 0.0;
    double displacement_l2 = 0.0;
    double divergence_l2 = 0.0;

    double stress_hdiv() const { return std::sqrt(stress_l2 * stress_l2 + divergence_l2 * divergence_l2); }
};

namespace detail
{

/// Accumulate squared norms of (reference - discrete) over all elements.
/// `reference` supplies (sigma, div sigma, u) at a physical point for tet t, or zero.
template <class Reference>
ErrorNorms integrate_errors(const Mesh& mesh, const StressDofMap& smap, const DisplacementDofMap& umap,
                            const Eigen::VectorXd& sigma, const Eigen::VectorXd& u, const Reference& reference,
                            int quad_degree)
{
    const QuadratureRule rule = simplex_rule(3, quad_degree);
    const LagrangeBasis sbasis(smap.degree), ubasis(smap.degree - 1);
    double es = 0.0, eu = 0.0, ed = 0.0;
    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) {
        const TetFrame frame = tet_frame(mesh, t);
        const ElementTables tab = tabulate(frame, smap.degree, rule, sbasis, ubasis);
        const auto& dofs = smap.local[static_cast<std::size_t>(t)];
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point3 x = frame.point(tab.lambda[q]);
            const auto [rs, rd, ru] = reference(t, q, x);
            const SymTensor ds = rs - stress_value(dofs, tab.stress_phi[q], sigma);
            const Point3 dd = rd - stress_divergence(dofs, tab.stress_grad[q], sigma);
            const Point3 du = ru - displacement_value(umap, t, tab.disp_phi[q], u);
            es += tab.weights[q] * frobenius(ds, ds);
            ed += tab.weights[q] * dd.squaredNorm();
            eu += tab.weights[q] * du.squaredNorm();
        }
    }
    return {std::sqrt(es), std::sqrt(eu), std::sqrt(ed)};
}

} // namespace detail

/// Discrete-vs-discrete norms: || sigma_ref - sigma_h ||, || u_ref - u_h ||, || div(sigma_ref - sigma_h) ||.
inline ErrorNorms error_norms_vs_interpolant(const Mesh& mesh, const StressDofMap& smap, const DisplacementDofMap& umap,
                                             const Eigen::VectorXd& sigma_h, const Eigen::VectorXd& u_h,
                                             const Eigen::VectorXd& sigma_ref, const Eigen::VectorXd& u_ref,
                                             int quad_degree = -1)
{
    const int qd = quad_degree < 0 ? default_quadrature_degree(smap.degree) : quad_degree;
    const Eigen::VectorXd ds = sigma_ref - sigma_h;
    const Eigen::VectorXd du = u_ref - u_h;
    const auto zero = [](Index, std::size_t, const Point3&) {
        return std::tuple<SymTensor, Point3, Point3>{SymTensor{}, Point3::Zero(), Point3::Zero()};
    };
    ErrorNorms e = detail::integrate_errors(mesh, smap, umap, ds, du, zero, qd);
    return e;
}

/// Norms against the closed-form solution (div sigma compared with the load f).
inline ErrorNorms error_norms_vs_exact(const Mesh& mesh, const StressDofMap& smap, const DisplacementDofMap& umap,
                                       const Eigen::VectorXd& sigma_h, const Eigen::VectorXd& u_h,
                                       const ManufacturedSolution& exact, int quad_degree = -1)
{
    const int qd = quad_degree < 0 ? default_quadrature_degree(smap.degree) : quad_degree;
    const auto ref = [&exact](Index, std::size_t, const Point3& x) {
        return std::tuple<SymTensor, Point3, Point3>{exact.stress(x), exact.load(x), exact.displacement(x)};
    };
    // integrate_errors subtracts the discrete field from the reference
    return detail::integrate_errors(mesh, smap, umap, sigma_h, u_h, ref, qd);
}

} // namespace hzfem

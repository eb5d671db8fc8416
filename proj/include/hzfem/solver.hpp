#pragma once

#include <chrono>
#include <cmath>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "hzfem/assembly.hpp"
#include "hzfem/errors.hpp"

namespace hzfem
{

/// direct: Cholesky of the augmented stress block plus Uzawa refinement.
/// lu: pivoted sparse LU of the full indefinite matrix.
/// minres: block-preconditioned MINRES.
enum class SolveMethod { direct, lu, minres };

inline const char* to_string(SolveMethod m)
{
    switch (m) {
    case SolveMethod::direct: return "direct";
    case SolveMethod::lu: return "lu";
    case SolveMethod::minres: return "minres";
    }
    return "?";
}

struct SolveReport
{
    Eigen::VectorXd solution;
    double relative_residual = 0.0;
    SolveMethod method = SolveMethod::direct;
    Index unknowns = 0;
    Index nonzeros = 0;
    int iterations = 0;            // MINRES iterations or refinement steps
    double seconds = 0.0;
};

inline constexpr double kDefaultSolveTolerance = 1e-10;

namespace detail
{

inline double relative_residual(const SparseMatrix& K, const Eigen::VectorXd& x, const Eigen::VectorXd& b)
{
    const double nb = b.norm();
    const double nr = (b - K * x).norm();
    return nb > 0.0 ? nr / nb : nr;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/// Supernodal sparse LU with partial pivoting (COLAMD ordering) on the full
/// indefinite matrix, with up to three steps of iterative refinement.
inline SolveReport solve_lu(const SparseMatrix& K, const Eigen::VectorXd& b, double tol = kDefaultSolveTolerance)
{
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.method = SolveMethod::lu;
    rep.unknowns = K.rows();
    rep.nonzeros = K.nonZeros();

    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success)
        throw SolveError("sparse LU factorization failed (singular system, n = " + std::to_string(K.rows())
                         + "): " + lu.lastErrorMessage());
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite())
        throw SolveError("sparse LU solve produced no finite solution");
    double res = detail::relative_residual(K, x, b);
    int steps = 0;
    while (res > tol && steps < 3) {
        const Eigen::VectorXd r = b - K * x;
        x += lu.solve(r);
        res = detail::relative_residual(K, x, b);
        ++steps;
    }
    rep.solution = std::move(x);
    rep.relative_residual = res;
    rep.iterations = steps;
    rep.seconds = detail::seconds_since(t0);
    if (!(res <= tol))
        throw SolveError("direct solve residual " + std::to_string(res) + " above tolerance "
                         + std::to_string(tol));
    return rep;
}

/// Augmented-Lagrangian direct solver for [[H, B^T], [B, 0]] with H SPD on ker B.
/// With W = Mu^-1 and r > 0 the system
///   (H + r B^T W B) sigma + B^T u = g + r B^T W F,   B sigma = F
/// has the same solution; the SPD block is factored once by sparse Cholesky
/// (AMD ordering) and each solve recovers the multiplier by Uzawa steps
///   u <- u + r W (B sigma - F),
/// which contract by roughly 1 / (1 + r beta^2) per step.
class AugmentedSaddleSolver
{
public:
    AugmentedSaddleSolver(const SparseMatrix& H, const SparseMatrix& B, const SparseMatrix& Mu_inv,
                          double penalty = 1e4)
        : H_(H), B_(B), Bt_(B.transpose()), W_(Mu_inv)
    {
        const SparseMatrix G = Bt_ * W_ * B_;
        const double gscale = G.diagonal().maxCoeff();
        if (!(gscale > 0.0))
            throw SolveError("divergence block is empty");
        r_ = penalty * H_.diagonal().maxCoeff() / gscale;
        const SparseMatrix Hr = H_ + r_ * G;
        nonzeros_ = Hr.nonZeros();
        chol_.compute(Hr);
        if (chol_.info() != Eigen::Success)
            throw SolveError("augmented stress block is not positive definite");
    }

    double penalty() const { return r_; }
    Index nonzeros() const { return nonzeros_; }

    /// Solve H sigma + B^T u = g, B sigma = F.  Returns the relative residual.
    double solve(const Eigen::VectorXd& g, const Eigen::VectorXd& F, Eigen::VectorXd& sigma, Eigen::VectorXd& u,
                 double tol, int max_steps, int* steps = nullptr) const
    {
        const double nb0 = std::sqrt(g.squaredNorm() + F.squaredNorm());
        const double nb = nb0 > 0.0 ? nb0 : 1.0;
        sigma = Eigen::VectorXd::Zero(H_.rows());
        u = Eigen::VectorXd::Zero(B_.rows());
        Eigen::VectorXd r_top = g;
        Eigen::VectorXd r_bottom = F;
        double res = nb0 / nb;
        int step = 0;
        // Each step applies one augmented Uzawa sweep to the current residual.
        while (res > tol && step < max_steps) {
            ++step;
            const Eigen::VectorXd rhs = r_top + r_ * (Bt_ * (W_ * r_bottom));
            const Eigen::VectorXd d_sigma = chol_.solve(rhs);
            const Eigen::VectorXd d_u = r_ * (W_ * (B_ * d_sigma - r_bottom));
            sigma += d_sigma;
            u += d_u;
            r_top = g - (H_ * sigma + Bt_ * u);
            r_bottom = F - B_ * sigma;
            res = std::sqrt(r_top.squaredNorm() + r_bottom.squaredNorm()) / nb;
            if (!std::isfinite(res))
                throw SolveError("augmented solve diverged");
        }
        if (steps)
            *steps = step;
        return res;
    }

private:
    const SparseMatrix& H_;
    const SparseMatrix& B_;
    SparseMatrix Bt_;
    const SparseMatrix& W_;
    double r_ = 0.0;
    Index nonzeros_ = 0;
    Eigen::SimplicialLLT<SparseMatrix> chol_;
};

/// Default direct path: augmented Cholesky plus Uzawa refinement.
inline SolveReport solve_augmented(const SaddleSystem& sys, double tol = kDefaultSolveTolerance,
                                   double penalty = 1e4, int max_steps = 60)
{
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.method = SolveMethod::direct;
    rep.unknowns = sys.size();

    const AugmentedSaddleSolver solver(sys.M, sys.B, sys.Mu_inv, penalty);
    rep.nonzeros = solver.nonzeros();
    Eigen::VectorXd sigma, u;
    int steps = 0;
    const double res = solver.solve(Eigen::VectorXd::Zero(sys.n_sigma), sys.F, sigma, u, tol, max_steps, &steps);

    rep.solution.resize(sys.size());
    rep.solution << sigma, u;
    rep.relative_residual = res;
    rep.iterations = steps;
    rep.seconds = detail::seconds_since(t0);
    if (!(res <= tol))
        throw SolveError("augmented solve residual " + std::to_string(res) + " above tolerance "
                         + std::to_string(tol) + " after " + std::to_string(steps) + " Uzawa steps");
    return rep;
}

/// Block-diagonal preconditioner diag(M, B diag(M)^-1 B^T), both blocks SPD.
class SaddlePreconditioner
{
public:
    explicit SaddlePreconditioner(const SaddleSystem& sys) : n_sigma_(sys.n_sigma)
    {
        stress_.compute(sys.M);
        if (stress_.info() != Eigen::Success)
            throw SolveError("stress mass block is not positive definite");
        const Eigen::VectorXd inv_diag = sys.M.diagonal().cwiseInverse();
        const SparseMatrix schur = sys.B * inv_diag.asDiagonal() * SparseMatrix(sys.B.transpose());
        schur_.compute(schur);
        if (schur_.info() != Eigen::Success)
            throw SolveError("approximate Schur complement is singular (rank-deficient divergence block)");
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& r) const
    {
        Eigen::VectorXd z(r.size());
        z.head(n_sigma_) = stress_.solve(r.head(n_sigma_));
        z.tail(r.size() - n_sigma_) = schur_.solve(r.tail(r.size() - n_sigma_));
        return z;
    }

private:
    Index n_sigma_;
    Eigen::SimplicialLLT<SparseMatrix> stress_;
    Eigen::SimplicialLLT<SparseMatrix> schur_;
};

/// Preconditioned MINRES (Paige-Saunders recurrences) for a symmetric K.
template <class Precond>
SolveReport solve_minres(const SparseMatrix& K, const Eigen::VectorXd& b, const Precond& P,
                         double tol = kDefaultSolveTolerance, int max_iterations = 20000)
{
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.method = SolveMethod::minres;
    rep.unknowns = K.rows();
    rep.nonzeros = K.nonZeros();

    const Index n = K.rows();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r1 = b, r2 = b;
    Eigen::VectorXd y = P.apply(r1);
    double beta1 = r1.dot(y);
    if (beta1 < 0.0)
        throw SolveError("MINRES preconditioner is not positive definite");
    beta1 = std::sqrt(beta1);
    if (beta1 == 0.0) {
        rep.solution = x;
        return rep;
    }

    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
    double cs = -1.0, sn = 0.0;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n), w1(n), w2 = Eigen::VectorXd::Zero(n), v(n);
    double res = 1.0;
    int it = 0;
    while (it < max_iterations) {
        ++it;
        v = y / beta;
        y = K * v;
        if (it >= 2)
            y -= (beta / oldb) * r1;
        const double alfa = v.dot(y);
        y -= (alfa / beta) * r2;
        r1 = r2;
        r2 = y;
        y = P.apply(r2);
        oldb = beta;
        beta = r2.dot(y);
        if (beta < 0.0)
            throw SolveError("MINRES preconditioner is not positive definite");
        beta = std::sqrt(beta);

        const double oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        const double gamma = std::max(std::hypot(gbar, beta), 1e-300);
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;

        w1 = w2;
        w2 = w;
        w = (v - oldeps * w1 - delta * w2) / gamma;
        x += phi * w;

        if (phibar / beta1 < 0.1 * tol || (it % 25 == 0 && phibar / beta1 < 1e3 * tol)) {
            res = detail::relative_residual(K, x, b);
            if (res <= tol)
                break;
        }
        if (beta == 0.0)
            break;
    }
    res = detail::relative_residual(K, x, b);
    rep.solution = std::move(x);
    rep.relative_residual = res;
    rep.iterations = it;
    rep.seconds = detail::seconds_since(t0);
    if (!(res <= tol))
        throw SolveError("MINRES stopped after " + std::to_string(it) + " iterations with residual "
                         + std::to_string(res));
    return rep;
}

/// Solve [[M, B^T], [B, 0]] x = [0; F].
inline SolveReport solve_saddle(const SaddleSystem& sys, double tol = kDefaultSolveTolerance,
                                SolveMethod method = SolveMethod::direct)
{
    if (method == SolveMethod::direct)
        return solve_augmented(sys, tol);
    const SparseMatrix K = sys.full_matrix();
    const Eigen::VectorXd b = sys.rhs();
    if (method == SolveMethod::lu)
        return solve_lu(K, b, tol);
    const SaddlePreconditioner P(sys);
    return solve_minres(K, b, P, tol);
}

} // namespace hzfem

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "hzfem/assembly.hpp"
#include "hzfem/solver.hpp"

namespace hzfem
{

struct RunConfig
{
    int degree = 4;
    int levels = 3;
    double mu = 0.5;
    double lambda = 1.0;
    double tol = kDefaultSolveTolerance;
    int quad_degree = -1;               // -1: 2k + 2 (capped at the largest rule)
    std::uint64_t seed = 20240601;
    SolveMethod method = SolveMethod::direct;
    bool timing = true;                 // false: CSV seconds column written as 0

    void validate() const
    {
        require_degree(degree);
        if (levels < 1 || levels > kMaxMeshLevel)
            throw ConfigError("levels must lie in [1, " + std::to_string(kMaxMeshLevel) + "]");
        if (!(mu > 0.0))
            throw ConfigError("mu must be positive");
        if (!(2.0 * mu + 3.0 * lambda > 0.0))
            throw ConfigError("2 mu + 3 lambda must be positive");
        if (!(tol > 0.0))
            throw ConfigError("solver tolerance must be positive");
        if (quad_degree >= 0) {
            require_quadrature(degree, quad_degree);
            if (quad_degree > kMaxQuadratureDegree)
                throw ConfigError("quadrature degree above " + std::to_string(kMaxQuadratureDegree));
        }
    }

    int quadrature() const { return quad_degree < 0 ? default_quadrature_degree(degree) : quad_degree; }
};

struct LevelResult
{
    int level = 0;
    ErrorNorms interp;          // against I_h sigma, I_h u
    ErrorNorms exact;           // against the closed-form solution
    double order_sigma = 0.0;
    double order_u = 0.0;
    double order_div = 0.0;
    Index n_dof_sigma = 0;
    Index n_dof_u = 0;
    double seconds = 0.0;
    double residual = 0.0;
    int solver_iterations = 0;
};

struct ConvergenceReport
{
    RunConfig config;
    std::vector<LevelResult> levels;
};

/// Everything produced by one level: kept alive for export.
struct LevelSolution
{
    Mesh mesh;
    StressDofMap smap;
    DisplacementDofMap umap;
    SaddleSystem system;
    SolveReport solve;
    Eigen::VectorXd sigma;
    Eigen::VectorXd u;
};

inline double convergence_order(double coarse, double fine)
{
    if (!(coarse > 0.0) || !(fine > 0.0))
        return 0.0;
    return std::log2(coarse / fine);
}

/// Build, assemble and solve one level of the manufactured-solution problem.
inline LevelSolution solve_level(const RunConfig& cfg, int level)
{
    const ComplianceTensor A(cfg.mu, cfg.lambda);
    const ManufacturedSolution exact(A);
    LevelSolution s;
    s.mesh = build_cube_mesh(level);
    s.smap = build_stress_dofmap(s.mesh, cfg.degree);
    s.umap = build_displacement_dofmap(s.mesh, cfg.degree);
    s.system = assemble(s.mesh, s.smap, s.umap, A, [&exact](const Point3& x) { return exact.load(x); },
                        cfg.quadrature());
    s.solve = solve_saddle(s.system, cfg.tol, cfg.method);
    s.sigma = s.solve.solution.head(s.system.n_sigma);
    s.u = s.solve.solution.tail(s.system.n_u);
    return s;
}

/// Per-level errors and log2 orders; the first level's orders are 0.
/// `on_level` (optional) sees every solved level, e.g. for export.
inline ConvergenceReport run_convergence(const RunConfig& cfg,
                                         const std::function<void(const LevelSolution&)>& on_level = {})
{
    cfg.validate();
    ConvergenceReport rep;
    rep.config = cfg;
    const ComplianceTensor A(cfg.mu, cfg.lambda);
    const ManufacturedSolution exact(A);
    for (int level = 1; level <= cfg.levels; ++level) {
        const auto t0 = std::chrono::steady_clock::now();
        const LevelSolution s = solve_level(cfg, level);

        const Eigen::VectorXd Is = interpolate_stress([&exact](const Point3& x) { return exact.stress(x); }, s.smap);
        const Eigen::VectorXd Iu =
            interpolate_displacement([&exact](const Point3& x) { return exact.displacement(x); }, s.mesh, s.umap);

        LevelResult r;
        r.level = level;
        r.interp = error_norms_vs_interpolant(s.mesh, s.smap, s.umap, s.sigma, s.u, Is, Iu, cfg.quadrature());
        r.exact = error_norms_vs_exact(s.mesh, s.smap, s.umap, s.sigma, s.u, exact, cfg.quadrature());
        r.n_dof_sigma = s.system.n_sigma;
        r.n_dof_u = s.system.n_u;
        r.residual = s.solve.relative_residual;
        r.solver_iterations = s.solve.iterations;
        if (!rep.levels.empty()) {
            const LevelResult& p = rep.levels.back();
            r.order_sigma = convergence_order(p.interp.stress_l2, r.interp.stress_l2);
            r.order_u = convergence_order(p.interp.displacement_l2, r.interp.displacement_l2);
            r.order_div = convergence_order(p.interp.divergence_l2, r.interp.divergence_l2);
        }
        if (on_level)
            on_level(s);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.levels.push_back(r);
    }
    return rep;
}

inline const char* kCsvHeader = "level,e_sigma_interp,order_sigma,e_u_interp,order_u,e_divsigma_interp,order_div,"
                                "e_sigma_exact,e_u_exact,n_dof_sigma,n_dof_u,seconds";

/// CSV with full-precision values; seconds are 0 when timing is disabled so
/// that repeated runs compare byte for byte.
inline void write_csv(std::ostream& os, const ConvergenceReport& rep)
{
    os << kCsvHeader << '\n';
    char buf[512];
    for (const auto& r : rep.levels) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%lld,%.3f\n", r.level,
                      r.interp.stress_l2, r.order_sigma, r.interp.displacement_l2, r.order_u, r.interp.divergence_l2,
                      r.order_div, r.exact.stress_l2, r.exact.displacement_l2,
                      static_cast<long long>(r.n_dof_sigma), static_cast<long long>(r.n_dof_u),
                      rep.config.timing ? r.seconds : 0.0);
        os << buf;
    }
}

/// Console table in the layout of the published tables: 8 decimals, orders to one decimal.
inline void write_table(std::ostream& os, const ConvergenceReport& rep)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "P%d elements, mu = %g, lambda = %g\n", rep.config.degree, rep.config.mu,
                  rep.config.lambda);
    os << buf;
    os << "level  |I_h s - s_h|   order  |I_h u - u_h|   order  |div(I_h s - s_h)|  order\n";
    for (const auto& r : rep.levels) {
        std::snprintf(buf, sizeof buf, "%5d  %13.8f  %5.1f  %13.8f  %5.1f  %17.8f  %5.1f\n", r.level,
                      r.interp.stress_l2, r.order_sigma, r.interp.displacement_l2, r.order_u, r.interp.divergence_l2,
                      r.order_div);
        os << buf;
    }
    os << "\nlevel  |s - s_h|_Hdiv    |u - u_h|      dofs(s)   dofs(u)  residual  seconds\n";
    for (const auto& r : rep.levels) {
        std::snprintf(buf, sizeof buf, "%5d  %13.8f  %13.8f  %9lld %9lld  %8.1e  %7.2f\n", r.level,
                      r.exact.stress_hdiv(), r.exact.displacement_l2, static_cast<long long>(r.n_dof_sigma),
                      static_cast<long long>(r.n_dof_u), r.residual, r.seconds);
        os << buf;
    }
}

} // namespace hzfem

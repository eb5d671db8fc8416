#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hzfem/convergence.hpp"
#include "hzfem/verify.hpp"

namespace hzfem
{

struct VerifyConfig
{
    std::vector<int> degrees{4, 5};
    int levels = 2;               // global certificates on levels 1..levels
    int infsup_levels = 2;        // inf-sup probe (k = degrees.front()) on levels 1..infsup_levels
    std::uint64_t seed = 20240601;
    int tet_trials = 1000;
    int surjectivity_trials = 20;
    int conformity_trials = 3;
    int kernel_probes = 20;
    bool corrupt_dof = false;     // duplicate a displacement DOF before the global checks

    void validate() const
    {
        if (degrees.empty())
            throw ConfigError("no polynomial degree selected");
        for (int k : degrees)
            require_degree(k);
        if (levels < 1 || levels > kMaxMeshLevel || infsup_levels < 1 || infsup_levels > kMaxMeshLevel)
            throw ConfigError("verify levels must lie in [1, " + std::to_string(kMaxMeshLevel) + "]");
        if (tet_trials < 1 || surjectivity_trials < 1 || conformity_trials < 1 || kernel_probes < 1)
            throw ConfigError("certificate trial counts must be positive");
    }
};

/// Runs every certificate; `sink` sees each report as soon as it is produced.
inline std::vector<CertificateReport> run_verify(const VerifyConfig& cfg,
                                                 const std::function<void(const CertificateReport&)>& sink = {})
{
    cfg.validate();
    std::vector<CertificateReport> out;
    const auto add = [&](CertificateReport r) {
        if (sink)
            sink(r);
        out.push_back(std::move(r));
    };

    add(check_quadrature());
    add(check_tangent_independence(cfg.tet_trials, cfg.seed));
    add(check_dual_roundtrip(cfg.tet_trials, cfg.seed + 1));
    for (int k : cfg.degrees) {
        add(check_bubble_flux(k, 100, cfg.seed + 2));
        add(check_local_surjectivity(k, cfg.surjectivity_trials, cfg.seed + 3));
    }

    const ComplianceTensor A(0.5, 1.0);
    const ManufacturedSolution exact(A);
    const auto load = [&exact](const Point3& x) { return exact.load(x); };
    for (int k : cfg.degrees)
        for (int level = 1; level <= cfg.levels; ++level) {
            const Mesh mesh = build_cube_mesh(level);
            const StressDofMap smap = build_stress_dofmap(mesh, k);
            const DisplacementDofMap umap = build_displacement_dofmap(mesh, k);
            SaddleSystem sys = assemble(mesh, smap, umap, A, load);
            if (cfg.corrupt_dof)
                sys = corrupt_duplicate_dof(sys);
            add(check_conformity(mesh, smap, cfg.conformity_trials, cfg.seed + 4));
            if (level == 1)
                add(check_conformity_negative_control(mesh, smap));
            add(check_kernel_divfree(mesh, smap, sys, cfg.kernel_probes, cfg.seed + 5));
        }

    const int k = cfg.degrees.front();
    std::vector<double> betas;
    std::string failure;
    for (int level = 1; level <= cfg.infsup_levels; ++level) {
        const Mesh mesh = build_cube_mesh(level);
        const StressDofMap smap = build_stress_dofmap(mesh, k);
        const DisplacementDofMap umap = build_displacement_dofmap(mesh, k);
        SaddleSystem sys = assemble(mesh, smap, umap, A, load);
        if (cfg.corrupt_dof)
            sys = corrupt_duplicate_dof(sys);
        try {
            betas.push_back(probe_infsup(mesh, smap, umap, sys, cfg.seed + 6).beta);
        } catch (const SolveError& e) {
            failure = e.what();
            betas.push_back(0.0);
        }
    }
    CertificateReport inf = check_infsup_levels(betas);
    inf.name += "_k" + std::to_string(k);
    if (!failure.empty())
        inf.witness += "; " + failure;
    const bool positive = !betas.empty() && *std::min_element(betas.begin(), betas.end()) > 1e-6;
    if (!positive) {
        inf.passed = false;
        inf.witness += "; beta_h ~ 0 (divergence map not surjective)";
    }
    add(inf);
    return out;
}

inline bool all_passed(const std::vector<CertificateReport>& reports)
{
    for (const auto& r : reports)
        if (!r.passed)
            return false;
    return !reports.empty();
}

} // namespace hzfem

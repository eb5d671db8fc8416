#include <gtest/gtest.h>

#include "hzfem/suite.hpp"
#include "hzfem/verify.hpp"

using namespace hzfem;

namespace
{

constexpr std::uint64_t kSeed = 20240601;

struct Level
{
    Mesh mesh;
    StressDofMap smap;
    DisplacementDofMap umap;
    SaddleSystem sys;

    Level(int level, int k)
        : mesh(build_cube_mesh(level)), smap(build_stress_dofmap(mesh, k)), umap(build_displacement_dofmap(mesh, k))
    {
        const ComplianceTensor A(0.5, 1.0);
        const ManufacturedSolution exact(A);
        sys = assemble(mesh, smap, umap, A, [&exact](const Point3& x) { return exact.load(x); });
    }
};

} // namespace

TEST(Certificates, Quadrature)
{
    const CertificateReport r = check_quadrature();
    EXPECT_TRUE(r.passed) << r.witness;
    EXPECT_LE(r.measured, 1e-13);
}

TEST(Certificates, TangentTensorsIndependentOnThousandTets)
{
    const CertificateReport r = check_tangent_independence(1000, kSeed);
    EXPECT_TRUE(r.passed) << r.witness;
    EXPECT_GT(r.measured, 1e-10);
}

TEST(Certificates, DualRoundtrip)
{
    const CertificateReport r = check_dual_roundtrip(1000, kSeed);
    EXPECT_TRUE(r.passed) << r.witness;
    EXPECT_LE(r.measured, 1e-10);
}

TEST(Certificates, BubbleFlux)
{
    for (int k : {4, 5}) {
        const CertificateReport r = check_bubble_flux(k, 50, kSeed);
        EXPECT_TRUE(r.passed) << r.witness;
        EXPECT_LE(r.measured, 1e-12);
    }
}

TEST(Certificates, BubbleDivergenceRanks)
{
    const SurjectivityResult r4 = analyse_bubble_divergence(unit_right_tet(), 4);
    EXPECT_EQ(r4.rows, 60);
    EXPECT_EQ(r4.cols, 60);
    EXPECT_EQ(r4.rank, 54);
    EXPECT_LE(r4.max_angle_sine, 1e-9);
    const SurjectivityResult r5 = analyse_bubble_divergence(unit_right_tet(), 5);
    EXPECT_EQ(r5.rows, 105);
    EXPECT_EQ(r5.cols, 120);
    EXPECT_EQ(r5.rank, 99);
    EXPECT_LE(r5.max_angle_sine, 1e-9);
}

TEST(Certificates, LocalSurjectivityOnRandomTets)
{
    for (int k : {4, 5}) {
        const CertificateReport r = check_local_surjectivity(k, 10, kSeed);
        EXPECT_TRUE(r.passed) << r.witness;
    }
}

TEST(Certificates, ConformityAndNegativeControl)
{
    const Level L(1, 4);
    const CertificateReport r = check_conformity(L.mesh, L.smap, 3, kSeed);
    EXPECT_TRUE(r.passed) << r.witness;
    EXPECT_LE(r.measured, 1e-10);
    const CertificateReport neg = check_conformity_negative_control(L.mesh, L.smap);
    EXPECT_TRUE(neg.passed) << neg.witness;
    EXPECT_GT(neg.measured, 1e-3);
}

TEST(Certificates, KernelIsPointwiseDivergenceFree)
{
    const Level L(1, 4);
    const CertificateReport r = check_kernel_divfree(L.mesh, L.smap, L.sys, 10, kSeed);
    EXPECT_TRUE(r.passed) << r.witness;
    EXPECT_LE(r.measured, 1e-9);
    // Projection path (used above the dense limit) agrees.
    const CertificateReport p = check_kernel_divfree(L.mesh, L.smap, L.sys, 10, kSeed, 0);
    EXPECT_TRUE(p.passed) << p.witness;
}

TEST(Certificates, ConstantStressIsInKernel)
{
    const Level L(1, 4);
    const Eigen::VectorXd c = interpolate_stress([](const Point3&) { return SymTensor::identity(); }, L.smap);
    EXPECT_LE((L.sys.B * c).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE(max_pointwise_divergence(L.mesh, L.smap, c), 1e-12);
}

TEST(InfSup, DenseAndLanczosAgree)
{
    const Level L(1, 4);
    const InfSupResult dense = probe_infsup(L.mesh, L.smap, L.umap, L.sys, kSeed);
    const InfSupResult lanczos = probe_infsup(L.mesh, L.smap, L.umap, L.sys, kSeed, 0);
    EXPECT_TRUE(dense.dense);
    EXPECT_FALSE(lanczos.dense);
    EXPECT_GT(dense.beta, 0.5);
    EXPECT_NEAR(dense.beta, lanczos.beta, 1e-6);
}

TEST(InfSup, CorruptedSystemLosesStability)
{
    const Level L(1, 4);
    const SaddleSystem bad = corrupt_duplicate_dof(L.sys);
    EXPECT_EQ(bad.B.row(1).norm(), L.sys.B.row(0).norm());
    const InfSupResult r = probe_infsup(L.mesh, L.smap, L.umap, bad, kSeed);
    EXPECT_LT(r.beta, 1e-6);
}

TEST(InfSup, RegressionRule)
{
    EXPECT_TRUE(check_infsup_levels({1.0, 0.9, 0.6}).passed);
    EXPECT_FALSE(check_infsup_levels({1.0, 0.4}).passed);
    EXPECT_FALSE(check_infsup_levels({0.0, 0.0}).passed);
    EXPECT_FALSE(check_infsup_levels({}).passed);
}

TEST(RandomTets, SeededAndWellShaped)
{
    RandomTetGenerator a(7), b(7);
    for (int i = 0; i < 20; ++i) {
        const TetFrame fa = a.next(), fb = b.next();
        EXPECT_EQ(fa.vertices[3], fb.vertices[3]);
        EXPECT_GT(fa.volume, 0.0);
        const double s = fa.scale();
        EXPECT_GE(6.0 * fa.volume, 0.1 * s * s * s);
    }
}

TEST(Suite, SmallRunPassesAndCorruptionFails)
{
    VerifyConfig cfg;
    cfg.degrees = {4};
    cfg.levels = 1;
    cfg.infsup_levels = 1;
    cfg.tet_trials = 50;
    cfg.surjectivity_trials = 3;
    cfg.kernel_probes = 5;
    const auto ok = run_verify(cfg);
    for (const auto& r : ok)
        EXPECT_TRUE(r.passed) << r.name << ": " << r.witness;
    EXPECT_TRUE(all_passed(ok));

    cfg.corrupt_dof = true;
    const auto bad = run_verify(cfg);
    EXPECT_FALSE(all_passed(bad));

    cfg.degrees = {3};
    EXPECT_THROW(run_verify(cfg), ConfigError);
}

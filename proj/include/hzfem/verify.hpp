#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hzfem/assembly.hpp"
#include "hzfem/solver.hpp"

namespace hzfem
{

/// Outcome of one numerical certificate.  A failed certificate always carries a witness.
struct CertificateReport
{
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string witness;
};

namespace detail
{

inline CertificateReport make_report(std::string name, double measured, double tol, bool pass, std::string witness)
{
    CertificateReport r{std::move(name), pass, measured, tol, std::move(witness)};
    if (!r.passed && r.witness.empty())
        r.witness = "measured " + std::to_string(measured) + " exceeds " + std::to_string(tol);
    return r;
}

inline std::string format_point(const Point3& p)
{
    std::ostringstream os;
    os.precision(6);
    os << "(" << p[0] << ", " << p[1] << ", " << p[2] << ")";
    return os.str();
}

/// Numerical rank with singular values below rel * largest treated as zero.
inline int numerical_rank(const Eigen::VectorXd& sv, double rel)
{
    if (sv.size() == 0 || sv[0] == 0.0)
        return 0;
    int r = 0;
    for (Index i = 0; i < sv.size(); ++i)
        r += sv[i] > rel * sv[0];
    return r;
}

} // namespace detail

/// Random nondegenerate tetrahedra: vertices uniform in [-1, 1]^3, positively
/// oriented, rejected when 6 |K| < 0.1 (mean edge)^3 (a regular tet has 0.71).
class RandomTetGenerator
{
public:
    explicit RandomTetGenerator(std::uint64_t seed) : rng_(seed) {}

    TetFrame next()
    {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (;;) {
            std::array<Point3, 4> x;
            for (auto& p : x)
                p = Point3(u(rng_), u(rng_), u(rng_));
            double v = signed_volume(x);
            if (v < 0.0) {
                std::swap(x[2], x[3]);
                v = -v;
            }
            double s = 0.0;
            for (const auto& e : kLocalEdges)
                s += (x[static_cast<std::size_t>(e[1])] - x[static_cast<std::size_t>(e[0])]).norm();
            s /= 6.0;
            if (6.0 * v < 0.1 * s * s * s)
                continue;
            return tet_frame(x);
        }
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline TetFrame unit_right_tet()
{
    return tet_frame({Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(0, 0, 1)});
}

// ---------------------------------------------------------------------------
// Element-level certificates.

/// Gram nonsingularity of the six tangent tensors, plus the rank-6 test of the
/// seven scalar relations n_i^T (.) n_i and s_m^T (.) s_m applied to sum c_e T_e.
inline CertificateReport check_tangent_independence(int trials, std::uint64_t seed)
{
    if (trials < 1)
        throw ConfigError("certificate trials must be positive");
    RandomTetGenerator gen(seed);
    double worst = std::numeric_limits<double>::infinity();
    int worst_trial = -1;
    int rank_failures = 0;
    std::string witness;
    for (int trial = 0; trial < trials; ++trial) {
        const TetFrame f = trial == 0 ? unit_right_tet() : gen.next();
        const TangentSet ts = tangent_tensors(f);
        // Normalised by the Hadamard bound prod |T_e|^2, so 0 < det <= 1 and
        // the measure is scale free.  (det Gram = 8 (6|K|)^8 for every tet.)
        double hadamard = 1.0;
        for (const auto& T : ts.T)
            hadamard *= frobenius(T, T);
        const double det = std::abs(frobenius_gram(ts.T).determinant()) / hadamard;
        if (det < worst) {
            worst = det;
            worst_trial = trial;
        }
        const auto s = skew_edge_vectors(f);
        Eigen::Matrix<double, 7, 6> rel;
        for (int e = 0; e < 6; ++e) {
            const Point3& t = ts.t[static_cast<std::size_t>(e)];
            for (int i = 0; i < 4; ++i) {
                const double d = f.normals[static_cast<std::size_t>(i)].dot(t);
                rel(i, e) = d * d;
            }
            for (int m = 0; m < 3; ++m) {
                const double d = s[static_cast<std::size_t>(m)].dot(t);
                rel(4 + m, e) = d * d;
            }
        }
        Eigen::JacobiSVD<Eigen::Matrix<double, 7, 6>> svd(rel);
        if (detail::numerical_rank(svd.singularValues(), 1e-9) != 6) {
            ++rank_failures;
            witness = "relation system rank-deficient on trial " + std::to_string(trial);
        }
    }
    const double tol = 1e-10;
    const bool pass = worst > tol && rank_failures == 0;
    if (!pass && witness.empty())
        witness = "trial " + std::to_string(worst_trial) + " has scaled Gram determinant " + std::to_string(worst);
    return detail::make_report("tangent_independence", worst, tol, pass, witness);
}

/// epsilon = sum_e (epsilon : T_e) M_e for random symmetric epsilon.
inline CertificateReport check_dual_roundtrip(int trials, std::uint64_t seed)
{
    RandomTetGenerator gen(seed);
    std::normal_distribution<double> g;
    double worst = 0.0;
    int worst_trial = 0;
    for (int trial = 0; trial < trials; ++trial) {
        const TetFrame f = trial == 0 ? unit_right_tet() : gen.next();
        const TangentSet ts = tangent_tensors(f);
        const DualSet ds = dual_basis(ts);
        SymTensor eps;
        for (int c = 0; c < 6; ++c)
            eps[c] = g(gen.engine());
        SymTensor back;
        for (std::size_t e = 0; e < 6; ++e)
            back += frobenius(eps, ts.T[e]) * ds.M[e];
        const double err = (back - eps).norm() / eps.norm();
        if (err > worst) {
            worst = err;
            worst_trial = trial;
        }
    }
    const double tol = 1e-10;
    return detail::make_report("dual_roundtrip", worst, tol, worst <= tol,
                               worst <= tol ? "" : "trial " + std::to_string(worst_trial));
}

/// Normal flux of lambda_a lambda_b p T_ab on all four faces, p random in P_{k-2}.
inline CertificateReport check_bubble_flux(int k, int trials, std::uint64_t seed)
{
    require_degree(k);
    RandomTetGenerator gen(seed);
    std::normal_distribution<double> g;
    const LagrangeBasis pbasis(k - 2);
    const QuadratureRule face_rule = simplex_rule(2, std::min(kMaxQuadratureDegree, 2 * k));
    double worst = 0.0;
    std::string witness;
    std::vector<double> phi;
    for (int trial = 0; trial < trials; ++trial) {
        const TetFrame f = trial == 0 ? unit_right_tet() : gen.next();
        std::vector<double> coef(pbasis.size());
        for (auto& c : coef)
            c = g(gen.engine());
        const auto p = [&](const Point3& x) {
            pbasis.evaluate(f.barycentric(x), phi);
            double v = 0.0;
            for (std::size_t i = 0; i < coef.size(); ++i)
                v += coef[i] * phi[i];
            return v;
        };
        for (std::size_t face = 0; face < 4; ++face) {
            const auto& fv = kLocalFaces[face];
            const Point3 n = f.normals[face].normalized();
            for (std::size_t q = 0; q < face_rule.size(); ++q) {
                Point3 x = Point3::Zero();
                for (std::size_t i = 0; i < 3; ++i)
                    x += face_rule.points[q][i] * f.vertices[static_cast<std::size_t>(fv[i])];
                for (const auto& ab : kLocalEdges) {
                    const double scale = SymTensor::outer(f.vertices[static_cast<std::size_t>(ab[1])]
                                                          - f.vertices[static_cast<std::size_t>(ab[0])])
                                             .norm();
                    const double flux = (bubble_value(f, ab[0], ab[1], p, x) * n).norm() / scale;
                    if (flux > worst) {
                        worst = flux;
                        witness = "trial " + std::to_string(trial) + " face " + std::to_string(face) + " edge "
                                  + std::to_string(ab[0]) + std::to_string(ab[1]);
                    }
                }
            }
        }
    }
    const double tol = 1e-12;
    const bool pass = worst <= tol;
    return detail::make_report("bubble_flux_k" + std::to_string(k), worst, tol, pass, pass ? "" : witness);
}

/// Divergence of the local bubble space into P_{k-1} vectors on one tetrahedron,
/// as moments: D[(c, r), (e, p)] = int psi_r (T_e grad(lambda_a lambda_b phi_p))_c.
inline Eigen::MatrixXd bubble_divergence_matrix(const TetFrame& f, int k)
{
    const LagrangeBasis pbasis(k - 2), vbasis(k - 1);
    const int np = static_cast<int>(pbasis.size()), nv = static_cast<int>(vbasis.size());
    const QuadratureRule rule = simplex_rule(3, 2 * k - 2);
    const TangentSet ts = tangent_tensors(f);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3 * nv, 6 * np);
    std::vector<double> phi, psi;
    std::vector<Point3> grad;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const std::array<double, 4> l{rule.points[q][0], rule.points[q][1], rule.points[q][2], rule.points[q][3]};
        const double w = rule.weights[q] * f.volume;
        pbasis.evaluate(l, f.normals, phi, grad);
        vbasis.evaluate(l, psi);
        for (int e = 0; e < 6; ++e) {
            const auto a = static_cast<std::size_t>(kLocalEdges[static_cast<std::size_t>(e)][0]);
            const auto b = static_cast<std::size_t>(kLocalEdges[static_cast<std::size_t>(e)][1]);
            const double lab = l[a] * l[b];
            const Point3 glab = l[b] * f.normals[a] + l[a] * f.normals[b];
            for (int p = 0; p < np; ++p) {
                const Point3 gb = lab * grad[static_cast<std::size_t>(p)] + phi[static_cast<std::size_t>(p)] * glab;
                const Point3 div = ts.T[static_cast<std::size_t>(e)] * gb;
                for (int c = 0; c < 3; ++c)
                    for (int r = 0; r < nv; ++r)
                        D(c * nv + r, e * np + p) += w * psi[static_cast<std::size_t>(r)] * div[c];
            }
        }
    }
    return D;
}

struct SurjectivityResult
{
    int rows = 0;
    int cols = 0;
    int rank = 0;
    double max_angle_sine = 0.0;   // between the range complement and the rigid motions
};

inline SurjectivityResult analyse_bubble_divergence(const TetFrame& f, int k)
{
    const Eigen::MatrixXd D = bubble_divergence_matrix(f, k);
    SurjectivityResult res;
    res.rows = static_cast<int>(D.rows());
    res.cols = static_cast<int>(D.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeFullU);
    res.rank = detail::numerical_rank(svd.singularValues(), 1e-9);
    // Left null space: coefficient vectors of v in P_{k-1}^3 with int v . div b = 0.
    const Eigen::MatrixXd left = svd.matrixU().rightCols(res.rows - res.rank);

    // Rigid motions in the same nodal coefficients.
    const LagrangeNodeSet nodes = lagrange_nodes(k - 1);
    const auto nv = static_cast<int>(nodes.size());
    Eigen::MatrixXd R(3 * nv, RigidMotionBasis::size);
    for (int i = 0; i < RigidMotionBasis::size; ++i)
        for (int r = 0; r < nv; ++r) {
            const auto& a = nodes.index[static_cast<std::size_t>(r)];
            const std::array<double, 4> l{a[0] / double(k - 1), a[1] / double(k - 1), a[2] / double(k - 1),
                                          a[3] / double(k - 1)};
            const Point3 v = RigidMotionBasis::value(i, f.point(l));
            for (int c = 0; c < 3; ++c)
                R(c * nv + r, i) = v[c];
        }
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(R).householderQ() * Eigen::MatrixXd::Identity(R.rows(), R.cols());
    if (left.cols() != Q.cols()) {
        res.max_angle_sine = 1.0;
        return res;
    }
    // Largest principal-angle sine = || (I - L L^T) Q ||_2.
    const Eigen::MatrixXd resid = Q - left * (left.transpose() * Q);
    res.max_angle_sine = Eigen::JacobiSVD<Eigen::MatrixXd>(resid).singularValues()[0];
    return res;
}

/// Rank 3 dim P_{k-1} - 6 and range complement = rigid motions, on the unit
/// right tet and `trials - 1` random tets.
inline CertificateReport check_local_surjectivity(int k, int trials, std::uint64_t seed)
{
    require_degree(k);
    RandomTetGenerator gen(seed);
    const int expected = 3 * dim_p(k - 1) - 6;
    double worst_angle = 0.0;
    std::string witness;
    bool pass = true;
    int rank = 0;
    for (int trial = 0; trial < trials; ++trial) {
        const TetFrame f = trial == 0 ? unit_right_tet() : gen.next();
        const SurjectivityResult r = analyse_bubble_divergence(f, k);
        rank = r.rank;
        worst_angle = std::max(worst_angle, r.max_angle_sine);
        if (r.rank != expected) {
            pass = false;
            witness = "trial " + std::to_string(trial) + ": rank " + std::to_string(r.rank) + ", expected "
                      + std::to_string(expected) + "; vertex 1 at " + detail::format_point(f.vertices[1]);
        } else if (r.max_angle_sine > 1e-9) {
            pass = false;
            witness = "trial " + std::to_string(trial) + ": range complement differs from rigid motions";
        }
    }
    auto rep = detail::make_report("local_surjectivity_k" + std::to_string(k), worst_angle, 1e-9, pass, witness);
    if (pass)
        rep.witness = "rank " + std::to_string(rank) + " = 3 dim P_{k-1} - 6";
    return rep;
}

/// Quadrature exactness for every rule the assembly can use.
inline CertificateReport check_quadrature(int max_degree = kMaxQuadratureDegree)
{
    double worst = 0.0;
    std::string witness;
    for (int dim : {2, 3})
        for (int d = 0; d <= max_degree; ++d) {
            const double e = verify_rule(simplex_rule(dim, d));
            if (e > worst) {
                worst = e;
                witness = "dimension " + std::to_string(dim) + " degree " + std::to_string(d);
            }
        }
    const double tol = 1e-13;
    return detail::make_report("quadrature_exactness", worst, tol, worst <= tol, worst <= tol ? "" : witness);
}

// ---------------------------------------------------------------------------
// Global certificates.

/// Jumps of sigma.n (and optionally of the full tensor) across interior faces,
/// and of sigma across incident tets at each vertex.
struct JumpMeasure
{
    double normal = 0.0;     // max |[sigma n]|
    double tensor = 0.0;     // max |[sigma]| (tangential components included)
    double vertex = 0.0;     // max vertex disagreement
    Index worst_face = -1;
};

inline JumpMeasure measure_jumps(const Mesh& mesh, const StressDofMap& map, const Eigen::VectorXd& coeff)
{
    const int k = map.degree;
    const QuadratureRule face_rule = simplex_rule(2, std::min(kMaxQuadratureDegree, 2 * k));
    JumpMeasure jm;
    for (Index fi = 0; fi < static_cast<Index>(mesh.faces.size()); ++fi) {
        const Face& face = mesh.faces[static_cast<std::size_t>(fi)];
        if (face.is_boundary())
            continue;
        const Index ta = face.incident_tets[0], tb = face.incident_tets[1];
        const TetFrame fa = tet_frame(mesh, ta), fb = tet_frame(mesh, tb);
        for (std::size_t q = 0; q < face_rule.size(); ++q) {
            Point3 x = Point3::Zero();
            for (std::size_t i = 0; i < 3; ++i)
                x += face_rule.points[q][i] * mesh.vertices[static_cast<std::size_t>(face.vertex_ids[i])];
            const SymTensor sa = eval_stress(mesh, map, ta, fa.barycentric(x), coeff);
            const SymTensor sb = eval_stress(mesh, map, tb, fb.barycentric(x), coeff);
            const double jn = ((sa - sb) * face.unit_normal).norm();
            if (jn > jm.normal) {
                jm.normal = jn;
                jm.worst_face = fi;
            }
            jm.tensor = std::max(jm.tensor, (sa - sb).norm());
        }
    }
    std::vector<std::vector<std::pair<Index, int>>> at_vertex(mesh.vertices.size());
    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t)
        for (int i = 0; i < 4; ++i)
            at_vertex[static_cast<std::size_t>(mesh.tets[static_cast<std::size_t>(t)].vertex_ids[static_cast<std::size_t>(i)])]
                .emplace_back(t, i);
    for (const auto& list : at_vertex) {
        if (list.empty())
            continue;
        const auto value = [&](const std::pair<Index, int>& ti) {
            std::array<double, 4> l{};
            l[static_cast<std::size_t>(ti.second)] = 1.0;
            return eval_stress(mesh, map, ti.first, l, coeff);
        };
        const SymTensor ref = value(list.front());
        for (std::size_t i = 1; i < list.size(); ++i)
            jm.vertex = std::max(jm.vertex, (value(list[i]) - ref).norm());
    }
    return jm;
}

/// H(div) conformity and vertex continuity of random stress coefficient vectors.
inline CertificateReport check_conformity(const Mesh& mesh, const StressDofMap& map, int trials, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    Index worst_face = -1;
    for (int trial = 0; trial < trials; ++trial) {
        Eigen::VectorXd c(map.num_dofs);
        for (Index i = 0; i < c.size(); ++i)
            c[i] = u(rng);
        const JumpMeasure jm = measure_jumps(mesh, map, c);
        const double m = std::max(jm.normal, jm.vertex) / c.cwiseAbs().maxCoeff();
        if (m > worst) {
            worst = m;
            worst_face = jm.worst_face;
        }
    }
    const double tol = 1e-10;
    std::string witness;
    if (worst > tol && worst_face >= 0) {
        const auto& fv = mesh.faces[static_cast<std::size_t>(worst_face)].vertex_ids;
        witness = "face " + std::to_string(worst_face) + " at "
                  + detail::format_point(mesh.vertices[static_cast<std::size_t>(fv[0])]);
    }
    return detail::make_report("conformity_k" + std::to_string(map.degree) + "_level" + std::to_string(mesh.level),
                               worst, tol, worst <= tol, witness);
}

/// Negative control: copy of a smooth interpolant with one broken face copy
/// shifted.  Normal and vertex checks must stay clean while the full-tensor
/// jump exposes the desynchronised copy.
inline CertificateReport check_conformity_negative_control(const Mesh& mesh, const StressDofMap& map)
{
    const TensorField smooth = [](const Point3& x) {
        return SymTensor(1.0 + x[0], 2.0 - x[1], 0.5 * x[2], x[0] * x[1], 0.25, x[1] - x[2]);
    };
    Eigen::VectorXd c = interpolate_stress(smooth, map);
    const JumpMeasure clean = measure_jumps(mesh, map, c);
    Index target = -1;
    for (const auto& node : map.nodes) {
        if (node.carrier != Carrier::face || node.dofs[3].size() != 2)
            continue;
        target = node.dofs[3][1];
        break;
    }
    if (target < 0)
        return detail::make_report("conformity_negative_control", 0.0, 0.0, false, "mesh has no interior face node");
    c[target] += 1.0;
    const JumpMeasure bad = measure_jumps(mesh, map, c);
    const bool pass = clean.normal <= 1e-11 && clean.tensor <= 1e-11 && bad.normal <= 1e-10 && bad.vertex <= 1e-10
                      && bad.tensor > 1e-3;
    std::ostringstream w;
    w << "clean jump " << clean.tensor << ", perturbed normal jump " << bad.normal << ", tangential jump "
      << bad.tensor;
    auto rep = detail::make_report("conformity_negative_control", bad.tensor, 1e-3, pass, w.str());
    return rep;
}

/// Max pointwise |div tau| over all volume quadrature points of every tet.
inline double max_pointwise_divergence(const Mesh& mesh, const StressDofMap& map, const Eigen::VectorXd& coeff)
{
    const int k = map.degree;
    const QuadratureRule rule = simplex_rule(3, std::min(kMaxQuadratureDegree, 2 * k));
    const LagrangeBasis sbasis(k), ubasis(k - 1);
    double worst = 0.0;
    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t) {
        const ElementTables tab = tabulate(tet_frame(mesh, t), k, rule, sbasis, ubasis);
        const auto& dofs = map.local[static_cast<std::size_t>(t)];
        for (std::size_t q = 0; q < rule.size(); ++q)
            worst = std::max(worst, stress_divergence(dofs, tab.stress_grad[q], coeff).norm());
    }
    return worst;
}

/// Elements of ker B are divergence-free pointwise.  Small systems use the full
/// null space (pivoted QR of B^T); larger ones project `probes` random vectors
/// with z = r - B^T (B B^T)^-1 B r.  The measure is max |div z| * h / ||z||_inf.
inline CertificateReport check_kernel_divfree(const Mesh& mesh, const StressDofMap& smap, const SaddleSystem& sys,
                                              int probes, std::uint64_t seed, Index dense_limit = 2000)
{
    const double h = mesh.max_edge_length();
    std::vector<Eigen::VectorXd> kernel;
    if (sys.n_sigma <= dense_limit) {
        const Eigen::MatrixXd Bt = Eigen::MatrixXd(sys.B).transpose();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Bt);
        qr.setThreshold(1e-10);
        const Index rank = qr.rank();
        const Eigen::MatrixXd Q = qr.householderQ();
        for (Index j = rank; j < Q.cols(); ++j)
            kernel.emplace_back(Q.col(j));
    } else {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        const SparseMatrix BBt = sys.B * SparseMatrix(sys.B.transpose());
        Eigen::SimplicialLLT<SparseMatrix> chol(BBt);
        if (chol.info() != Eigen::Success)
            return detail::make_report("kernel_divfree", 1.0, 1e-9, false, "B B^T is singular (B rank deficient)");
        for (int p = 0; p < probes; ++p) {
            Eigen::VectorXd z(sys.n_sigma);
            for (Index i = 0; i < z.size(); ++i)
                z[i] = g(rng);
            for (int pass = 0; pass < 3; ++pass) {
                const Eigen::VectorXd y = chol.solve(sys.B * z);
                z -= sys.B.transpose() * y;
            }
            kernel.push_back(std::move(z));
        }
    }
    double worst = 0.0;
    for (const auto& z : kernel)
        worst = std::max(worst, max_pointwise_divergence(mesh, smap, z) * h / z.cwiseAbs().maxCoeff());

    // Sanity inversion: a generic vector is visibly not divergence-free.
    Eigen::VectorXd generic = Eigen::VectorXd::LinSpaced(sys.n_sigma, -1.0, 1.0);
    const double generic_div = max_pointwise_divergence(mesh, smap, generic) * h / generic.cwiseAbs().maxCoeff();

    const double tol = 1e-9;
    const bool pass = !kernel.empty() && worst <= tol && generic_div > 1e-3;
    std::string witness = std::to_string(kernel.size()) + " kernel vectors; generic vector divergence "
                          + std::to_string(generic_div);
    return detail::make_report("kernel_divfree_k" + std::to_string(smap.degree) + "_level" + std::to_string(mesh.level),
                               worst, tol, pass, witness);
}

// ---------------------------------------------------------------------------
// Inf-sup probe.

/// The H(div) Gram matrix (sigma, tau) + (div sigma, div tau).  Because
/// div Sigma_h lies in V_h, the divergence part is exactly B^T Mu^-1 B.
inline SparseMatrix hdiv_gram(const Mesh& mesh, const StressDofMap& smap, const DisplacementDofMap& umap,
                              const SaddleSystem& sys, int quad_degree = -1)
{
    const ComplianceTensor identity(0.5, 0.0);   // A = identity
    const auto zero = [](const Point3&) { return Point3::Zero().eval(); };
    const SaddleSystem l2 = assemble(mesh, smap, umap, identity, zero, quad_degree);
    const SparseMatrix Bt = sys.B.transpose();
    SparseMatrix H = l2.M + Bt * sys.Mu_inv * sys.B;
    H.prune(0.0);
    return H;
}

struct InfSupResult
{
    double beta = 0.0;
    int iterations = 0;
    double residual = 0.0;     // eigen-residual of the returned pair
    bool dense = false;
};

/// beta_h^2 = smallest eigenvalue of B H^-1 B^T y = beta^2 Mu y, dense.
inline InfSupResult infsup_dense(const SparseMatrix& H, const SparseMatrix& B, const SparseMatrix& Mu)
{
    const Eigen::MatrixXd Hd(H), Bd(B), Mud(Mu);
    const Eigen::LLT<Eigen::MatrixXd> llt(Hd);
    if (llt.info() != Eigen::Success)
        throw SolveError("H(div) Gram matrix is not positive definite");
    const Eigen::MatrixXd X = llt.matrixL().solve(Bd.transpose());
    Eigen::MatrixXd S = X.transpose() * X;
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Mud, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw SolveError("dense inf-sup eigenproblem failed");
    InfSupResult r;
    r.beta = std::sqrt(std::max(0.0, es.eigenvalues()[0]));
    r.dense = true;
    return r;
}

/// Lanczos (full Mu-orthogonalisation) on T = S^-1 Mu, S = B H^-1 B^T, which
/// is self-adjoint in the Mu inner product with eigenvalues 1 / beta^2 >= 1.
/// The largest Ritz value gives beta_h.  S^-1 is applied through the saddle
/// system [[H, B^T], [B, 0]] with one augmented Cholesky factorization.
inline InfSupResult infsup_iterative(const SparseMatrix& H, const SparseMatrix& B, const SparseMatrix& Mu,
                                     const SparseMatrix& Mu_inv, std::uint64_t seed, double tol = 1e-8,
                                     int max_steps = 400)
{
    const AugmentedSaddleSolver solver(H, B, Mu_inv);
    const Index n = B.rows();
    const Eigen::VectorXd zero_top = Eigen::VectorXd::Zero(H.rows());
    const auto apply = [&](const Eigen::VectorXd& x) {
        // H s + B^T w = 0, B s = Mu x  =>  w = -S^-1 Mu x
        Eigen::VectorXd sig, w;
        const double res = solver.solve(zero_top, Mu * x, sig, w, 1e-12, 200);
        if (!(res <= 1e-9))
            throw SolveError("inf-sup inner solve stalled at residual " + std::to_string(res)
                             + " (singular divergence block)");
        return Eigen::VectorXd(-w);
    };
    const auto mnorm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(Mu * v)); };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXd q(n);
    for (Index i = 0; i < n; ++i)
        q[i] = g(rng);
    q /= mnorm(q);

    const int m = static_cast<int>(std::min<Index>(max_steps, n));
    Eigen::MatrixXd Q(n, m + 1), MQ(n, m + 1);
    Q.col(0) = q;
    MQ.col(0) = Mu * q;
    std::vector<double> alpha, beta;
    InfSupResult out;
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd w = apply(Q.col(j));
        alpha.push_back(MQ.col(j).dot(w));
        for (int pass = 0; pass < 2; ++pass)
            w -= Q.leftCols(j + 1) * (MQ.leftCols(j + 1).transpose() * w);
        const double b = mnorm(w);

        const int d = j + 1;
        Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            Tm(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < d)
                Tm(i, i + 1) = Tm(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
        const double theta = es.eigenvalues()[d - 1];
        const double bound = b * std::abs(es.eigenvectors()(d - 1, d - 1));
        out.beta = 1.0 / std::sqrt(theta);
        out.iterations = d;
        out.residual = bound / theta;
        if (out.residual <= tol || b <= 1e-14 * theta)
            return out;
        beta.push_back(b);
        Q.col(j + 1) = w / b;
        MQ.col(j + 1) = Mu * Q.col(j + 1);
    }
    throw SolveError("inf-sup Lanczos did not converge in " + std::to_string(m) + " steps (last beta "
                     + std::to_string(out.beta) + ", residual " + std::to_string(out.residual) + ")");
}

/// beta_h for one assembled system; dense below `dense_limit` displacement DOFs.
inline InfSupResult probe_infsup(const Mesh& mesh, const StressDofMap& smap, const DisplacementDofMap& umap,
                                 const SaddleSystem& sys, std::uint64_t seed, Index dense_limit = 1500)
{
    const SparseMatrix H = hdiv_gram(mesh, smap, umap, sys);
    if (sys.n_u <= dense_limit)
        return infsup_dense(H, sys.B, sys.Mu);
    return infsup_iterative(H, sys.B, sys.Mu, sys.Mu_inv, seed);
}

/// Copy of `sys` in which displacement DOF `target` duplicates DOF `source`
/// (row of B copied), so the divergence map loses surjectivity.
inline SaddleSystem corrupt_duplicate_dof(const SaddleSystem& sys, Index source = 0, Index target = 1)
{
    SaddleSystem bad = sys;
    const SparseMatrix Bt = sys.B.transpose();   // column-major: columns of Bt are rows of B
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < Bt.outerSize(); ++c) {
        if (c == target)
            continue;
        for (SparseMatrix::InnerIterator it(Bt, c); it; ++it) {
            trip.emplace_back(c, static_cast<int>(it.row()), it.value());
            if (c == source)
                trip.emplace_back(static_cast<int>(target), static_cast<int>(it.row()), it.value());
        }
    }
    bad.B.setZero();
    bad.B.setFromTriplets(trip.begin(), trip.end());
    return bad;
}

/// Regression check: every beta_h at least `ratio` times the first level's value.
inline CertificateReport check_infsup_levels(const std::vector<double>& betas, double ratio = 0.5)
{
    if (betas.empty())
        return detail::make_report("infsup_regression", 0.0, ratio, false, "no levels probed");
    const double base = betas.front();
    double worst = std::numeric_limits<double>::infinity();
    std::ostringstream w;
    w.precision(6);
    w << "beta_h:";
    for (std::size_t i = 0; i < betas.size(); ++i) {
        worst = std::min(worst, base > 0.0 ? betas[i] / base : 0.0);
        w << " " << betas[i];
    }
    w << " (baseline is the level-1 value)";
    const bool pass = base > 1e-6 && worst >= ratio;
    return detail::make_report("infsup_regression", worst, ratio, pass, w.str());
}

// ---------------------------------------------------------------------------
// Dimension oracles (small meshes only: dense linear algebra on 6 dim P_k T unknowns).

/// Coefficients of every global stress basis function in the broken
/// (tet, Lagrange node, canonical component) representation.
inline Eigen::MatrixXd broken_representation(const Mesh& mesh, const StressDofMap& map)
{
    const Index np = dim_p(map.degree);
    const Index nd = 6 * np * static_cast<Index>(mesh.tets.size());
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(nd, map.num_dofs);
    for (Index t = 0; t < static_cast<Index>(mesh.tets.size()); ++t)
        for (const auto& d : map.local[static_cast<std::size_t>(t)])
            for (int c = 0; c < 6; ++c)
                R((t * np + d.scalar) * 6 + c, d.global) += d.tensor[c];
    return R;
}

/// Spanning set of "continuous P_k tensors + per-tet bubbles lambda_a lambda_b P_{k-2} T_ab"
/// in the same broken representation.
inline Eigen::MatrixXd lagrange_plus_bubble_span(const Mesh& mesh, int k)
{
    const LagrangeBasis lb(k), pb(k - 2);
    const Index np = static_cast<Index>(lb.size());
    const Index T = static_cast<Index>(mesh.tets.size());
    const Index nd = 6 * np * T;
    // Continuous Lagrange nodes, identified by k * position on the integer lattice k * m.
    std::map<std::array<long, 3>, std::vector<std::pair<Index, Index>>> occurrences;
    const double m = std::pow(2.0, mesh.level - 1);
    for (Index t = 0; t < T; ++t) {
        const auto pts = mesh.tet_points(t);
        for (Index n = 0; n < np; ++n) {
            Point3 x = Point3::Zero();
            for (std::size_t i = 0; i < 4; ++i)
                x += lb.nodes().index[static_cast<std::size_t>(n)][i] * pts[i];
            occurrences[{std::lround(x[0] * m), std::lround(x[1] * m), std::lround(x[2] * m)}].emplace_back(t, n);
        }
    }
    const Index n_bubble = 6 * static_cast<Index>(pb.size());
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nd, 6 * static_cast<Index>(occurrences.size()) + T * n_bubble);
    Index col = 0;
    for (const auto& [key, list] : occurrences)
        for (int c = 0; c < 6; ++c, ++col)
            for (const auto& [t, n] : list)
                S((t * np + n) * 6 + c, col) = 1.0;
    std::vector<double> q;
    for (Index t = 0; t < T; ++t) {
        const TetFrame f = tet_frame(mesh, t);
        for (int e = 0; e < 6; ++e) {
            const auto& ab = kLocalEdges[static_cast<std::size_t>(e)];
            const SymTensor Te = SymTensor::outer(f.edge_vector(e));
            for (std::size_t p = 0; p < pb.size(); ++p, ++col)
                for (Index n = 0; n < np; ++n) {
                    const auto& a = lb.nodes().index[static_cast<std::size_t>(n)];
                    const std::array<double, 4> l{a[0] / double(k), a[1] / double(k), a[2] / double(k), a[3] / double(k)};
                    pb.evaluate(l, q);
                    const double s = l[static_cast<std::size_t>(ab[0])] * l[static_cast<std::size_t>(ab[1])] * q[p];
                    for (int c = 0; c < 6; ++c)
                        S((t * np + n) * 6 + c, col) = s * Te[c];
                }
        }
    }
    return S;
}

/// Rows of the vertex-continuity and interior-face normal-continuity
/// constraints on the broken P_k representation (collocated at P_k face nodes).
inline Eigen::MatrixXd continuity_constraints(const Mesh& mesh, int k)
{
    const LagrangeBasis lb(k);
    const Index np = static_cast<Index>(lb.size());
    const Index T = static_cast<Index>(mesh.tets.size());
    const Index nd = 6 * np * T;
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> pa, pb;
    for (const auto& face : mesh.faces) {
        if (face.is_boundary())
            continue;
        const Index ta = face.incident_tets[0], tb = face.incident_tets[1];
        const TetFrame fa = tet_frame(mesh, ta), fb = tet_frame(mesh, tb);
        for (const auto& a : barycentric_exponents(2, k)) {
            if (a[0] + a[1] + a[2] != k)
                continue;
            Point3 x = Point3::Zero();
            for (std::size_t i = 0; i < 3; ++i)
                x += (a[i] / double(k)) * mesh.vertices[static_cast<std::size_t>(face.vertex_ids[i])];
            lb.evaluate(fa.barycentric(x), pa);
            lb.evaluate(fb.barycentric(x), pb);
            for (int r = 0; r < 3; ++r) {
                Eigen::VectorXd row = Eigen::VectorXd::Zero(nd);
                for (int c = 0; c < 6; ++c) {
                    const double v = (SymTensor::canonical(c) * face.unit_normal)[r];
                    if (v == 0.0)
                        continue;
                    for (Index s = 0; s < np; ++s) {
                        row[(ta * np + s) * 6 + c] += pa[static_cast<std::size_t>(s)] * v;
                        row[(tb * np + s) * 6 + c] -= pb[static_cast<std::size_t>(s)] * v;
                    }
                }
                rows.push_back(std::move(row));
            }
        }
    }
    std::vector<std::pair<Index, Index>> first(mesh.vertices.size(), {-1, -1});
    for (Index t = 0; t < T; ++t)
        for (int i = 0; i < 4; ++i) {
            const auto v = static_cast<std::size_t>(mesh.tets[static_cast<std::size_t>(t)].vertex_ids[static_cast<std::size_t>(i)]);
            // Lagrange node of vertex i in tet t: the multi-index k e_i.
            Index node = 0;
            for (Index n = 0; n < np; ++n)
                if (lb.nodes().index[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)] == k)
                    node = n;
            if (first[v].first < 0) {
                first[v] = {t, node};
                continue;
            }
            for (int c = 0; c < 6; ++c) {
                Eigen::VectorXd row = Eigen::VectorXd::Zero(nd);
                row[(t * np + node) * 6 + c] = 1.0;
                row[(first[v].first * np + first[v].second) * 6 + c] = -1.0;
                rows.push_back(std::move(row));
            }
        }
    Eigen::MatrixXd C(static_cast<Index>(rows.size()), nd);
    for (std::size_t i = 0; i < rows.size(); ++i)
        C.row(static_cast<Index>(i)) = rows[i].transpose();
    return C;
}

inline Index matrix_rank(const Eigen::MatrixXd& A, double threshold = 1e-9)
{
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(threshold);
    return qr.rank();
}

struct DimensionOracle
{
    Index dof_count = 0;             // DOF map total
    Index basis_rank = 0;            // rank of the DOF map's basis functions
    Index span_rank = 0;             // rank of continuous Lagrange + bubbles
    Index union_rank = 0;            // rank of both together
    Index broken_dimension = 0;      // 6 dim P_k T
    Index constraint_rank = 0;       // vertex + normal continuity constraints
    double constraint_violation = 0.0;  // max |C * basis|
};

inline DimensionOracle dimension_oracle(const Mesh& mesh, const StressDofMap& map)
{
    DimensionOracle o;
    o.dof_count = map.num_dofs;
    const Eigen::MatrixXd ours = broken_representation(mesh, map);
    const Eigen::MatrixXd span = lagrange_plus_bubble_span(mesh, map.degree);
    Eigen::MatrixXd both(ours.rows(), ours.cols() + span.cols());
    both << ours, span;
    o.basis_rank = matrix_rank(ours);
    o.span_rank = matrix_rank(span);
    o.union_rank = matrix_rank(both);
    o.broken_dimension = ours.rows();
    const Eigen::MatrixXd C = continuity_constraints(mesh, map.degree);
    o.constraint_rank = matrix_rank(C);
    o.constraint_violation = (C * ours).cwiseAbs().maxCoeff();
    return o;
}

} // namespace hzfem

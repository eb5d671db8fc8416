#pragma once

// JSON / VTK / MatrixMarket output.  Requires nlohmann/json (single header "json.hpp").

#include <fstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/SparseExtra>

#include "json.hpp"

#include "hzfem/convergence.hpp"
#include "hzfem/verify.hpp"

namespace hzfem
{

using Json = nlohmann::ordered_json;

inline Json to_json(const SolveReport& r)
{
    return Json{{"method", to_string(r.method)},
                {"unknowns", r.unknowns},
                {"nonzeros", r.nonzeros},
                {"relative_residual", r.relative_residual},
                {"iterations", r.iterations},
                {"seconds", r.seconds}};
}

inline Json to_json(const ErrorNorms& e)
{
    return Json{{"stress_l2", e.stress_l2},
                {"displacement_l2", e.displacement_l2},
                {"divergence_l2", e.divergence_l2},
                {"stress_hdiv", e.stress_hdiv()}};
}

inline Json to_json(const RunConfig& c)
{
    return Json{{"degree", c.degree},   {"levels", c.levels}, {"mu", c.mu},
                {"lambda", c.lambda},   {"tol", c.tol},       {"quad_degree", c.quadrature()},
                {"seed", c.seed},       {"solver", to_string(c.method)}};
}

inline Json to_json(const ConvergenceReport& rep)
{
    Json levels = Json::array();
    for (const auto& r : rep.levels)
        levels.push_back(Json{{"level", r.level},
                              {"vs_interpolant", to_json(r.interp)},
                              {"vs_exact", to_json(r.exact)},
                              {"order_sigma", r.order_sigma},
                              {"order_u", r.order_u},
                              {"order_div", r.order_div},
                              {"n_dof_sigma", r.n_dof_sigma},
                              {"n_dof_u", r.n_dof_u},
                              {"relative_residual", r.residual},
                              {"solver_iterations", r.solver_iterations},
                              {"seconds", rep.config.timing ? r.seconds : 0.0}});
    return Json{{"config", to_json(rep.config)}, {"levels", levels}};
}

inline Json to_json(const CertificateReport& c)
{
    return Json{{"name", c.name},
                {"passed", c.passed},
                {"measured", c.measured},
                {"tolerance", c.tolerance},
                {"witness", c.witness}};
}

/// Counts of the DOF layout per entity class, for debugging the map.
inline Json dof_layout(const Mesh& mesh, const StressDofMap& smap, const DisplacementDofMap& umap)
{
    const MeshStats ms = mesh_stats(mesh);
    Index broken = 0, shared = 0, n_vertex = 0, n_edge = 0, n_face = 0, n_cell = 0;
    for (const auto& node : smap.nodes) {
        switch (node.carrier) {
        case Carrier::vertex: ++n_vertex; break;
        case Carrier::edge: ++n_edge; break;
        case Carrier::face: ++n_face; break;
        case Carrier::cell: ++n_cell; break;
        }
        for (std::size_t i = 0; i < 6; ++i)
            (node.frame.broken[i] ? broken : shared) += static_cast<Index>(node.dofs[i].size());
    }
    Index n0_min = 0, n0_max = 0;
    if (!mesh.edges.empty()) {
        n0_min = n0_max = mesh.edges.front().n0();
        for (const auto& e : mesh.edges) {
            n0_min = std::min<Index>(n0_min, e.n0());
            n0_max = std::max<Index>(n0_max, e.n0());
        }
    }
    return Json{{"level", mesh.level},
                {"degree", smap.degree},
                {"mesh", {{"vertices", ms.vertices}, {"edges", ms.edges}, {"faces", ms.faces}, {"tets", ms.tets},
                          {"edge_n0_min", n0_min}, {"edge_n0_max", n0_max}}},
                {"stress",
                 {{"total", smap.num_dofs},
                  {"formula", stress_dof_formula(mesh, smap.degree)},
                  {"vertex", smap.vertex_dofs},
                  {"edge", smap.edge_dofs},
                  {"face", smap.face_dofs},
                  {"cell", smap.cell_dofs},
                  {"shared", shared},
                  {"broken", broken},
                  {"nodes", {{"vertex", n_vertex}, {"edge", n_edge}, {"face", n_face}, {"cell", n_cell}}}}},
                {"displacement",
                 {{"total", umap.num_dofs}, {"per_tet", umap.block_size()}, {"scalar_dim", umap.scalar_size}}}};
}

inline void write_json(const std::string& path, const Json& j)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

/// Full indefinite matrix [[M, B^T], [B, 0]] in MatrixMarket coordinate format,
/// with the right-hand side alongside as "<path>.rhs.mtx".
inline void write_matrix_market(const std::string& path, const SaddleSystem& sys)
{
    if (!Eigen::saveMarket(sys.full_matrix(), path))
        throw std::runtime_error("cannot write " + path);
    if (!Eigen::saveMarketVector(sys.rhs(), path + ".rhs.mtx"))
        throw std::runtime_error("cannot write " + path + ".rhs.mtx");
}

/// Vertex samples of a solved level: sigma_h (continuous at vertices) and
/// u_h averaged over the incident tetrahedra.
inline std::vector<VtkPointField> vertex_fields(const LevelSolution& s)
{
    const std::size_t nv = s.mesh.vertices.size();
    VtkPointField u{"displacement", 3, std::vector<double>(3 * nv, 0.0)};
    VtkPointField sig{"stress", 6, std::vector<double>(6 * nv, 0.0)};
    std::vector<int> count(nv, 0);
    std::vector<bool> stress_done(nv, false);
    for (Index t = 0; t < static_cast<Index>(s.mesh.tets.size()); ++t)
        for (int i = 0; i < 4; ++i) {
            const auto v = static_cast<std::size_t>(s.mesh.tets[static_cast<std::size_t>(t)].vertex_ids[static_cast<std::size_t>(i)]);
            std::array<double, 4> l{};
            l[static_cast<std::size_t>(i)] = 1.0;
            const Point3 uv = eval_displacement(s.umap, t, l, s.u);
            for (int c = 0; c < 3; ++c)
                u.values[3 * v + static_cast<std::size_t>(c)] += uv[c];
            ++count[v];
            if (!stress_done[v]) {
                const SymTensor st = eval_stress(s.mesh, s.smap, t, l, s.sigma);
                for (int c = 0; c < 6; ++c)
                    sig.values[6 * v + static_cast<std::size_t>(c)] = st[c];
                stress_done[v] = true;
            }
        }
    for (std::size_t v = 0; v < nv; ++v)
        for (int c = 0; c < 3; ++c)
            u.values[3 * v + static_cast<std::size_t>(c)] /= std::max(1, count[v]);
    return {u, sig};
}

inline void export_vtk(const LevelSolution& s, const std::string& path) { write_vtk(s.mesh, path, vertex_fields(s)); }

} // namespace hzfem

#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hzfem/errors.hpp"
#include "hzfem/lagrange.hpp"
#include "hzfem/mesh.hpp"
#include "hzfem/tensor_geometry.hpp"

namespace hzfem
{

/// Six tensors forming a basis of S at a Lagrange node.  Broken entries get
/// one degree of freedom per incident tetrahedron; shared entries get one.
struct NodeFrame
{
    std::array<SymTensor, 6> tensors{};
    std::array<bool, 6> broken{};

    int broken_count() const { return static_cast<int>(std::count(broken.begin(), broken.end(), true)); }
};

namespace detail
{

inline NodeFrame canonical_frame()
{
    NodeFrame f;
    for (int i = 0; i < 6; ++i)
        f.tensors[static_cast<std::size_t>(i)] = SymTensor::canonical(i);
    return f;
}

} // namespace detail

/// Frame for a node interior to an edge with tangent `t`:
/// entries 0..4 shared (Frobenius complement of T_e), entry 5 broken (unit T_e).
inline NodeFrame edge_node_frame(const Point3& t)
{
    if (t.norm() == 0.0)
        throw GeometryError("zero-length edge");
    const SymTensor te = SymTensor::outer(t.normalized());  // unit Frobenius norm

    std::array<SymTensor, 6> cand;
    std::array<double, 6> residual{};
    for (int i = 0; i < 6; ++i) {
        SymTensor c = SymTensor::canonical(i);
        c *= 1.0 / c.norm();
        c -= frobenius(c, te) * te;
        cand[static_cast<std::size_t>(i)] = c;
        residual[static_cast<std::size_t>(i)] = c.norm();
    }
    const auto drop = static_cast<std::size_t>(std::min_element(residual.begin(), residual.end()) - residual.begin());

    NodeFrame f;
    std::size_t n = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        if (i == drop)
            continue;
        SymTensor v = cand[i];
        for (std::size_t j = 0; j < n; ++j)
            v -= frobenius(v, f.tensors[j]) * f.tensors[j];
        v *= 1.0 / v.norm();
        f.tensors[n++] = v;
    }
    f.tensors[5] = te;
    f.broken[5] = true;
    return f;
}

/// Frame for a node interior to a face with unit normal `n` and edge tangents
/// `t`: entries 0..2 shared (n v^T + v n^T, v = e1, e2, e3), entries 3..5 broken
/// (unit T_e of the face edges, all annihilating n).
inline NodeFrame face_node_frame(const Point3& n, const std::array<Point3, 3>& t)
{
    NodeFrame f;
    for (int v = 0; v < 3; ++v)
        f.tensors[static_cast<std::size_t>(v)] = SymTensor::sym_outer(n, Point3::Unit(v));
    for (std::size_t e = 0; e < 3; ++e) {
        if (t[e].norm() == 0.0)
            throw GeometryError("zero-length face edge");
        f.tensors[3 + e] = SymTensor::outer(t[e].normalized());
        f.broken[3 + e] = true;
    }
    return f;
}

struct StressNode
{
    Carrier carrier = Carrier::vertex;
    Index entity = 0;       // vertex / edge / face / tet id
    Point3 position = Point3::Zero();
    NodeFrame frame;
    std::array<SymTensor, 6> dual{};                // dual[i] : frame.tensors[j] = delta_ij
    std::array<std::vector<Index>, 6> dofs;         // shared: one dof; broken: one per owner tet
    std::array<std::vector<Index>, 6> owner_tets;   // parallel to dofs (empty for shared)
};

/// Global stress DOF attached to a local (tet, Lagrange node) basis slot.
struct LocalStressDof
{
    int scalar = 0;      // Lagrange node index within the tet
    SymTensor tensor;    // frame tensor
    Index global = 0;
};

struct StressDofMap
{
    int degree = 0;
    Index num_dofs = 0;
    std::vector<StressNode> nodes;
    std::vector<std::vector<Index>> tet_nodes;         // per tet: global node of each Lagrange node
    std::vector<std::vector<LocalStressDof>> local;    // per tet: 6 * dim P_k entries

    // Counts of DOFs per carrier class.
    Index vertex_dofs = 0, edge_dofs = 0, face_dofs = 0, cell_dofs = 0;
};

struct DisplacementDofMap
{
    int degree = 0;          // stress degree k; displacement polynomials have degree k - 1
    Index num_tets = 0;
    int scalar_size = 0;     // dim P_{k-1}
    Index num_dofs = 0;

    Index block_size() const { return 3 * scalar_size; }
    Index offset(Index tet) const { return tet * block_size(); }
    Index dof(Index tet, int component, int scalar) const
    {
        return offset(tet) + component * scalar_size + scalar;
    }
};

inline void require_degree(int k)
{
    if (k < 4)
        throw ConfigError("polynomial degree k must satisfy k >= 4 (got " + std::to_string(k) + ")");
}

inline NodeFrame node_frame(const Mesh& mesh, Carrier carrier, Index entity)
{
    switch (carrier) {
    case Carrier::vertex:
    case Carrier::cell:
        return detail::canonical_frame();
    case Carrier::edge: {
        const auto& e = mesh.edges[static_cast<std::size_t>(entity)];
        return edge_node_frame(mesh.vertices[static_cast<std::size_t>(e.vertex_ids[1])]
                               - mesh.vertices[static_cast<std::size_t>(e.vertex_ids[0])]);
    }
    case Carrier::face: {
        const auto& f = mesh.faces[static_cast<std::size_t>(entity)];
        const auto& a = mesh.vertices[static_cast<std::size_t>(f.vertex_ids[0])];
        const auto& b = mesh.vertices[static_cast<std::size_t>(f.vertex_ids[1])];
        const auto& c = mesh.vertices[static_cast<std::size_t>(f.vertex_ids[2])];
        return face_node_frame(f.unit_normal, {b - a, c - b, c - a});
    }
    }
    return detail::canonical_frame();
}

inline StressDofMap build_stress_dofmap(const Mesh& mesh, int k)
{
    require_degree(k);
    StressDofMap map;
    map.degree = k;
    const LagrangeNodeSet lag = lagrange_nodes(k);
    const auto at = [&mesh](Index v) -> const Point3& { return mesh.vertices[static_cast<std::size_t>(v)]; };

    // Face-interior multi-indices over sorted face vertices, keyed by (a, b).
    std::map<std::pair<int, int>, int> face_slot;
    std::vector<std::array<int, 3>> face_pattern;
    for (int a = 1; a < k; ++a)
        for (int b = 1; a + b < k; ++b) {
            face_slot[{a, b}] = static_cast<int>(face_pattern.size());
            face_pattern.push_back({a, b, k - a - b});
        }
    const int per_edge = k - 1;
    const int per_face = static_cast<int>(face_pattern.size());
    const int per_cell = (k - 1) * (k - 2) * (k - 3) / 6;

    const auto new_node = [&](Carrier c, Index entity, const Point3& pos, const std::vector<Index>& owners) {
        StressNode node;
        node.carrier = c;
        node.entity = entity;
        node.position = pos;
        node.frame = node_frame(mesh, c, entity);
        node.dual = dual_tensors(node.frame.tensors);
        for (std::size_t i = 0; i < 6; ++i) {
            if (node.frame.broken[i]) {
                for (Index t : owners) {
                    node.dofs[i].push_back(map.num_dofs++);
                    node.owner_tets[i].push_back(t);
                }
            } else {
                node.dofs[i].push_back(map.num_dofs++);
            }
        }
        map.nodes.push_back(std::move(node));
    };

    const Index vertex_base = 0;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        new_node(Carrier::vertex, static_cast<Index>(v), mesh.vertices[v], {});
    map.vertex_dofs = map.num_dofs;

    const Index edge_base = static_cast<Index>(map.nodes.size());
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        const auto& edge = mesh.edges[e];
        for (int j = 1; j < k; ++j) {
            // j = barycentric multiplicity at the lower-numbered vertex
            const Point3 pos = (j * at(edge.vertex_ids[0]) + (k - j) * at(edge.vertex_ids[1])) / k;
            new_node(Carrier::edge, static_cast<Index>(e), pos, edge.incident_tets);
        }
    }
    map.edge_dofs = map.num_dofs - map.vertex_dofs;

    const Index face_base = static_cast<Index>(map.nodes.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        for (const auto& p : face_pattern) {
            const Point3 pos = (p[0] * at(face.vertex_ids[0]) + p[1] * at(face.vertex_ids[1])
                                + p[2] * at(face.vertex_ids[2])) / k;
            new_node(Carrier::face, static_cast<Index>(f), pos, face.incident_tets);
        }
    }
    map.face_dofs = map.num_dofs - map.vertex_dofs - map.edge_dofs;

    const Index cell_base = static_cast<Index>(map.nodes.size());
    std::vector<int> cell_slot(lag.size(), -1);
    {
        int c = 0;
        for (std::size_t n = 0; n < lag.size(); ++n)
            if (LagrangeNodeSet::classify(lag.index[n]) == Carrier::cell)
                cell_slot[n] = c++;
    }
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        const auto pts = mesh.tet_points(static_cast<Index>(t));
        for (std::size_t n = 0; n < lag.size(); ++n) {
            if (cell_slot[n] < 0)
                continue;
            Point3 pos = Point3::Zero();
            for (std::size_t i = 0; i < 4; ++i)
                pos += lag.index[n][i] * pts[i];
            new_node(Carrier::cell, static_cast<Index>(t), pos / k, {static_cast<Index>(t)});
        }
    }
    map.cell_dofs = map.num_dofs - map.vertex_dofs - map.edge_dofs - map.face_dofs;

    // Resolve each tet's Lagrange nodes onto global nodes and frame DOFs.
    map.tet_nodes.resize(mesh.tets.size());
    map.local.resize(mesh.tets.size());
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        const auto& tet = mesh.tets[t];
        auto& tn = map.tet_nodes[t];
        tn.resize(lag.size());
        for (std::size_t n = 0; n < lag.size(); ++n) {
            const auto& a = lag.index[n];
            Index gnode = -1;
            switch (LagrangeNodeSet::classify(a)) {
            case Carrier::vertex: {
                const auto i = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
                gnode = vertex_base + tet.vertex_ids[i];
                break;
            }
            case Carrier::edge: {
                int lo = -1, hi = -1;
                for (int i = 0; i < 4; ++i)
                    if (a[static_cast<std::size_t>(i)] > 0)
                        (lo < 0 ? lo : hi) = i;
                const int le = local_edge_index(lo, hi);
                const Index eid = tet.edge_ids[static_cast<std::size_t>(le)];
                const Index low_vertex = mesh.edges[static_cast<std::size_t>(eid)].vertex_ids[0];
                const int j = tet.vertex_ids[static_cast<std::size_t>(lo)] == low_vertex
                                  ? a[static_cast<std::size_t>(lo)]
                                  : a[static_cast<std::size_t>(hi)];
                gnode = edge_base + eid * per_edge + (j - 1);
                break;
            }
            case Carrier::face: {
                int opposite = 0;
                for (int i = 0; i < 4; ++i)
                    if (a[static_cast<std::size_t>(i)] == 0)
                        opposite = i;
                const Index fid = tet.face_ids[static_cast<std::size_t>(opposite)];
                const auto& fv = mesh.faces[static_cast<std::size_t>(fid)].vertex_ids;
                std::array<int, 3> mult{};
                for (std::size_t s = 0; s < 3; ++s)
                    for (std::size_t i = 0; i < 4; ++i)
                        if (tet.vertex_ids[i] == fv[s])
                            mult[s] = a[i];
                gnode = face_base + fid * per_face + face_slot.at({mult[0], mult[1]});
                break;
            }
            case Carrier::cell:
                gnode = cell_base + static_cast<Index>(t) * per_cell + cell_slot[n];
                break;
            }
            tn[n] = gnode;

            const StressNode& node = map.nodes[static_cast<std::size_t>(gnode)];
            for (std::size_t i = 0; i < 6; ++i) {
                Index g = node.dofs[i].front();
                if (node.frame.broken[i]) {
                    const auto& owners = node.owner_tets[i];
                    const auto it = std::find(owners.begin(), owners.end(), static_cast<Index>(t));
                    if (it == owners.end())
                        throw std::logic_error("tet is not an owner of its broken node DOF");
                    g = node.dofs[i][static_cast<std::size_t>(it - owners.begin())];
                }
                map.local[t].push_back(LocalStressDof{static_cast<int>(n), node.frame.tensors[i], g});
            }
        }
    }
    return map;
}

inline DisplacementDofMap build_displacement_dofmap(const Mesh& mesh, int k)
{
    require_degree(k);
    DisplacementDofMap map;
    map.degree = k;
    map.num_tets = static_cast<Index>(mesh.tets.size());
    map.scalar_size = dim_p(k - 1);
    map.num_dofs = map.num_tets * map.block_size();
    return map;
}

/// Closed-form DOF count of the stress space.
inline Index stress_dof_formula(const Mesh& mesh, int k)
{
    Index n = 6 * static_cast<Index>(mesh.vertices.size());
    for (const auto& e : mesh.edges)
        n += (k - 1) * (5 + e.n0());
    const Index per_face = (k - 1) * (k - 2) / 2;
    for (const auto& f : mesh.faces)
        n += per_face * (3 + 3 * static_cast<Index>(f.incident_tets.size()));
    n += static_cast<Index>(mesh.tets.size()) * (k - 1) * (k - 2) * (k - 3);
    return n;
}

// ---------------------------------------------------------------------------
// Field evaluation on one element.

/// Tabulated scalar bases for one tetrahedron at a set of barycentric points.
struct ElementTables
{
    TetFrame frame;
    std::vector<std::array<double, 4>> lambda;
    std::vector<double> weights;                 // physical weights (include |K|)
    std::vector<std::vector<double>> stress_phi;     // [q][n]
    std::vector<std::vector<Point3>> stress_grad;    // [q][n]
    std::vector<std::vector<double>> disp_phi;       // [q][s]
};

inline ElementTables tabulate(const TetFrame& frame, int k, const QuadratureRule& rule,
                              const LagrangeBasis& stress_basis, const LagrangeBasis& disp_basis)
{
    ElementTables tab;
    tab.frame = frame;
    const std::size_t nq = rule.size();
    tab.lambda.resize(nq);
    tab.weights.resize(nq);
    tab.stress_phi.resize(nq);
    tab.stress_grad.resize(nq);
    tab.disp_phi.resize(nq);
    (void)k;
    for (std::size_t q = 0; q < nq; ++q) {
        const auto& p = rule.points[q];
        tab.lambda[q] = {p[0], p[1], p[2], p[3]};
        tab.weights[q] = rule.weights[q] * frame.volume;
        stress_basis.evaluate(tab.lambda[q], frame.normals, tab.stress_phi[q], tab.stress_grad[q]);
        disp_basis.evaluate(tab.lambda[q], tab.disp_phi[q]);
    }
    return tab;
}

inline SymTensor stress_value(const std::vector<LocalStressDof>& dofs, const std::vector<double>& phi,
                              const Eigen::VectorXd& coeff)
{
    SymTensor s;
    for (const auto& d : dofs)
        s += (coeff[d.global] * phi[static_cast<std::size_t>(d.scalar)]) * d.tensor;
    return s;
}

inline Point3 stress_divergence(const std::vector<LocalStressDof>& dofs, const std::vector<Point3>& grad,
                                const Eigen::VectorXd& coeff)
{
    Point3 v = Point3::Zero();
    for (const auto& d : dofs)
        v += coeff[d.global] * (d.tensor * grad[static_cast<std::size_t>(d.scalar)]);
    return v;
}

inline Point3 displacement_value(const DisplacementDofMap& map, Index tet, const std::vector<double>& phi,
                                 const Eigen::VectorXd& coeff)
{
    Point3 u = Point3::Zero();
    for (int c = 0; c < 3; ++c)
        for (int s = 0; s < map.scalar_size; ++s)
            u[c] += coeff[map.dof(tet, c, s)] * phi[static_cast<std::size_t>(s)];
    return u;
}

/// Stress field on tet t at a barycentric point.
inline SymTensor eval_stress(const Mesh& mesh, const StressDofMap& map, Index t,
                             const std::array<double, 4>& lambda, const Eigen::VectorXd& coeff)
{
    (void)mesh;
    const LagrangeBasis basis(map.degree);
    std::vector<double> phi;
    basis.evaluate(lambda, phi);
    return stress_value(map.local[static_cast<std::size_t>(t)], phi, coeff);
}

inline Point3 eval_displacement(const DisplacementDofMap& map, Index t, const std::array<double, 4>& lambda,
                                const Eigen::VectorXd& coeff)
{
    const LagrangeBasis basis(map.degree - 1);
    std::vector<double> phi;
    basis.evaluate(lambda, phi);
    return displacement_value(map, t, phi, coeff);
}

/// Per-DOF stress basis values and divergences on one tet at the given points.
struct StressBasisValues
{
    std::vector<std::vector<SymTensor>> value;  // [q][local dof]
    std::vector<std::vector<Point3>> divergence;
};

inline StressBasisValues eval_stress_basis(const Mesh& mesh, const StressDofMap& map, Index t,
                                           const std::vector<std::array<double, 4>>& points)
{
    const TetFrame frame = tet_frame(mesh, t);
    const LagrangeBasis basis(map.degree);
    const auto& dofs = map.local[static_cast<std::size_t>(t)];
    StressBasisValues out;
    std::vector<double> phi;
    std::vector<Point3> grad;
    for (const auto& p : points) {
        basis.evaluate(p, frame.normals, phi, grad);
        std::vector<SymTensor> v;
        std::vector<Point3> d;
        v.reserve(dofs.size());
        d.reserve(dofs.size());
        for (const auto& dof : dofs) {
            v.push_back(phi[static_cast<std::size_t>(dof.scalar)] * dof.tensor);
            d.push_back(dof.tensor * grad[static_cast<std::size_t>(dof.scalar)]);
        }
        out.value.push_back(std::move(v));
        out.divergence.push_back(std::move(d));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Interpolation and projection.

using TensorField = std::function<SymTensor(const Point3&)>;
using VectorField = std::function<Point3(const Point3&)>;

/// Nodal interpolant: each node value expanded in its frame; every broken copy gets the same coefficient.
inline Eigen::VectorXd interpolate_stress(const TensorField& sigma, const StressDofMap& map)
{
    Eigen::VectorXd c = Eigen::VectorXd::Zero(map.num_dofs);
    for (const auto& node : map.nodes) {
        const SymTensor value = sigma(node.position);
        for (std::size_t i = 0; i < 6; ++i) {
            const double coef = frobenius(value, node.dual[i]);
            for (Index g : node.dofs[i])
                c[g] = coef;
        }
    }
    return c;
}

/// Elementwise Lagrange interpolant of degree k - 1.
inline Eigen::VectorXd interpolate_displacement(const VectorField& u, const Mesh& mesh, const DisplacementDofMap& map)
{
    Eigen::VectorXd c = Eigen::VectorXd::Zero(map.num_dofs);
    const LagrangeNodeSet nodes = lagrange_nodes(map.degree - 1);
    const int kd = map.degree - 1;
    for (Index t = 0; t < map.num_tets; ++t) {
        const auto pts = mesh.tet_points(t);
        for (std::size_t s = 0; s < nodes.size(); ++s) {
            Point3 x = Point3::Zero();
            for (std::size_t i = 0; i < 4; ++i)
                x += nodes.index[s][i] * pts[i];
            const Point3 v = u(x / kd);
            for (int comp = 0; comp < 3; ++comp)
                c[map.dof(t, comp, static_cast<int>(s))] = v[comp];
        }
    }
    return c;
}

/// Local L2 projection onto discontinuous P_{k-1} vectors.
inline Eigen::VectorXd project_displacement(const VectorField& u, const Mesh& mesh, const DisplacementDofMap& map,
                                            int quad_degree = -1)
{
    const int kd = map.degree - 1;
    const QuadratureRule rule = simplex_rule(3, quad_degree < 0 ? std::min(kMaxQuadratureDegree, 2 * kd + 8) : quad_degree);
    const LagrangeBasis basis(kd);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(map.num_dofs);
    const int n = map.scalar_size;
    std::vector<double> phi;
    for (Index t = 0; t < map.num_tets; ++t) {
        const TetFrame frame = tet_frame(mesh, t);
        Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 3);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const std::array<double, 4> l{rule.points[q][0], rule.points[q][1], rule.points[q][2], rule.points[q][3]};
            basis.evaluate(l, phi);
            const double w = rule.weights[q] * frame.volume;
            const Point3 v = u(frame.point(l));
            for (int a = 0; a < n; ++a) {
                const double pa = phi[static_cast<std::size_t>(a)] * w;
                for (int b = 0; b < n; ++b)
                    mass(a, b) += pa * phi[static_cast<std::size_t>(b)];
                for (int comp = 0; comp < 3; ++comp)
                    rhs(a, comp) += pa * v[comp];
            }
        }
        const Eigen::MatrixXd sol = mass.llt().solve(rhs);
        for (int comp = 0; comp < 3; ++comp)
            for (int s = 0; s < n; ++s)
                c[map.dof(t, comp, s)] = sol(s, comp);
    }
    return c;
}

} // namespace hzfem

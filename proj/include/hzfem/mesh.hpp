#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "hzfem/errors.hpp"
#include "hzfem/sym_tensor.hpp"

namespace hzfem
{

using Index = std::int64_t;

/// Local edge order used everywhere: (01, 02, 03, 12, 23, 13).
inline constexpr std::array<std::array<int, 2>, 6> kLocalEdges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {2, 3}, {1, 3}}};

/// Local face i is opposite local vertex i.
inline constexpr std::array<std::array<int, 3>, 4> kLocalFaces{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

inline int local_edge_index(int a, int b)
{
    if (a > b)
        std::swap(a, b);
    for (int e = 0; e < 6; ++e)
        if (kLocalEdges[static_cast<std::size_t>(e)][0] == a && kLocalEdges[static_cast<std::size_t>(e)][1] == b)
            return e;
    return -1;
}

struct Tetrahedron
{
    std::array<Index, 4> vertex_ids{};
    double signed_volume = 0.0;
    std::array<Index, 6> edge_ids{};  // in kLocalEdges order
    std::array<Index, 4> face_ids{};  // face i opposite vertex i
};

struct Edge
{
    std::array<Index, 2> vertex_ids{};  // ascending
    std::vector<Index> incident_tets;
    int n0() const { return static_cast<int>(incident_tets.size()); }
};

struct Face
{
    std::array<Index, 3> vertex_ids{};  // ascending
    std::vector<Index> incident_tets;   // 1 (boundary) or 2 (interior)
    Point3 unit_normal = Point3::Zero();
    bool is_boundary() const { return incident_tets.size() == 1; }
};

struct Mesh
{
    std::vector<Point3> vertices;
    std::vector<Tetrahedron> tets;
    std::vector<Edge> edges;
    std::vector<Face> faces;
    int level = 1;

    std::array<Point3, 4> tet_points(Index t) const
    {
        const auto& ids = tets[static_cast<std::size_t>(t)].vertex_ids;
        return {vertices[static_cast<std::size_t>(ids[0])], vertices[static_cast<std::size_t>(ids[1])],
                vertices[static_cast<std::size_t>(ids[2])], vertices[static_cast<std::size_t>(ids[3])]};
    }

    /// Longest edge length; the mesh size h.
    double max_edge_length() const
    {
        double h = 0.0;
        for (const auto& e : edges)
            h = std::max(h, (vertices[static_cast<std::size_t>(e.vertex_ids[1])]
                             - vertices[static_cast<std::size_t>(e.vertex_ids[0])]).norm());
        return h;
    }
};

inline constexpr int kMaxMeshLevel = 6;

inline double signed_volume(const std::array<Point3, 4>& p)
{
    Eigen::Matrix3d e;
    e.col(0) = p[1] - p[0];
    e.col(1) = p[2] - p[0];
    e.col(2) = p[3] - p[0];
    return e.determinant() / 6.0;
}

namespace detail
{

inline void build_connectivity(Mesh& mesh)
{
    std::map<std::array<Index, 2>, Index> edge_lookup;
    std::map<std::array<Index, 3>, Index> face_lookup;

    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        auto& tet = mesh.tets[t];
        for (std::size_t e = 0; e < 6; ++e) {
            std::array<Index, 2> key{tet.vertex_ids[static_cast<std::size_t>(kLocalEdges[e][0])],
                                     tet.vertex_ids[static_cast<std::size_t>(kLocalEdges[e][1])]};
            std::sort(key.begin(), key.end());
            auto [it, inserted] = edge_lookup.try_emplace(key, static_cast<Index>(mesh.edges.size()));
            if (inserted)
                mesh.edges.push_back(Edge{key, {}});
            mesh.edges[static_cast<std::size_t>(it->second)].incident_tets.push_back(static_cast<Index>(t));
            tet.edge_ids[e] = it->second;
        }
        for (std::size_t f = 0; f < 4; ++f) {
            std::array<Index, 3> key{tet.vertex_ids[static_cast<std::size_t>(kLocalFaces[f][0])],
                                     tet.vertex_ids[static_cast<std::size_t>(kLocalFaces[f][1])],
                                     tet.vertex_ids[static_cast<std::size_t>(kLocalFaces[f][2])]};
            std::sort(key.begin(), key.end());
            auto [it, inserted] = face_lookup.try_emplace(key, static_cast<Index>(mesh.faces.size()));
            if (inserted) {
                Face face;
                face.vertex_ids = key;
                const Point3& a = mesh.vertices[static_cast<std::size_t>(key[0])];
                const Point3& b = mesh.vertices[static_cast<std::size_t>(key[1])];
                const Point3& c = mesh.vertices[static_cast<std::size_t>(key[2])];
                face.unit_normal = (b - a).cross(c - a).normalized();
                mesh.faces.push_back(face);
            }
            mesh.faces[static_cast<std::size_t>(it->second)].incident_tets.push_back(static_cast<Index>(t));
            tet.face_ids[f] = it->second;
        }
    }
}

} // namespace detail

/// Unit cube split into m^3 subcubes (m = 2^(level-1)), each cut into the six
/// Kuhn tetrahedra around the diagonal from its lowest to its highest corner.
inline Mesh build_cube_mesh(int level)
{
    if (level < 1 || level > kMaxMeshLevel)
        throw ConfigError("mesh level must lie in [1, " + std::to_string(kMaxMeshLevel) + "], got "
                          + std::to_string(level));

    Mesh mesh;
    mesh.level = level;
    const Index m = Index{1} << (level - 1);
    const Index np = m + 1;
    auto vid = [np](Index i, Index j, Index l) { return i + np * (j + np * l); };

    mesh.vertices.reserve(static_cast<std::size_t>(np * np * np));
    for (Index l = 0; l < np; ++l)
        for (Index j = 0; j < np; ++j)
            for (Index i = 0; i < np; ++i)
                mesh.vertices.emplace_back(static_cast<double>(i) / static_cast<double>(m),
                                           static_cast<double>(j) / static_cast<double>(m),
                                           static_cast<double>(l) / static_cast<double>(m));

    // Paths through the unit cube corners, one per permutation of the axes.
    std::array<int, 3> perm{0, 1, 2};
    std::vector<std::array<int, 3>> perms;
    do {
        perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));

    mesh.tets.reserve(static_cast<std::size_t>(6 * m * m * m));
    for (Index l = 0; l < m; ++l)
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i < m; ++i)
                for (const auto& p : perms) {
                    std::array<Index, 3> c{i, j, l};
                    Tetrahedron tet;
                    tet.vertex_ids[0] = vid(c[0], c[1], c[2]);
                    for (std::size_t s = 0; s < 3; ++s) {
                        ++c[static_cast<std::size_t>(p[s])];
                        tet.vertex_ids[s + 1] = vid(c[0], c[1], c[2]);
                    }
                    std::array<Point3, 4> pts{};
                    for (std::size_t v = 0; v < 4; ++v)
                        pts[v] = mesh.vertices[static_cast<std::size_t>(tet.vertex_ids[v])];
                    double vol = signed_volume(pts);
                    if (vol < 0.0) {
                        std::swap(tet.vertex_ids[2], tet.vertex_ids[3]);
                        vol = -vol;
                    }
                    tet.signed_volume = vol;
                    mesh.tets.push_back(tet);
                }

    detail::build_connectivity(mesh);
    return mesh;
}

struct MeshStats
{
    Index vertices = 0;
    Index edges = 0;
    Index faces = 0;
    Index tets = 0;
    double total_volume = 0.0;
    double min_volume = 0.0;
    double max_volume = 0.0;
};

inline MeshStats mesh_stats(const Mesh& mesh)
{
    MeshStats s;
    s.vertices = static_cast<Index>(mesh.vertices.size());
    s.edges = static_cast<Index>(mesh.edges.size());
    s.faces = static_cast<Index>(mesh.faces.size());
    s.tets = static_cast<Index>(mesh.tets.size());
    s.min_volume = mesh.tets.empty() ? 0.0 : mesh.tets.front().signed_volume;
    s.max_volume = s.min_volume;
    for (const auto& t : mesh.tets) {
        s.total_volume += t.signed_volume;
        s.min_volume = std::min(s.min_volume, t.signed_volume);
        s.max_volume = std::max(s.max_volume, t.signed_volume);
    }
    return s;
}

/// Legacy ASCII VTK unstructured grid (cell type 10) with optional point data.
struct VtkPointField
{
    std::string name;
    int components = 1;            // 1, 3 or 6 (6 is written as a full 3x3 tensor)
    std::vector<double> values;    // vertices.size() * components
};

inline void write_vtk(const Mesh& mesh, const std::string& path, const std::vector<VtkPointField>& fields = {})
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out.precision(16);
    out << "# vtk DataFile Version 3.0\n"
        << "hzfem level " << mesh.level << "\n"
        << "ASCII\n"
        << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.vertices.size() << " double\n";
    for (const auto& p : mesh.vertices)
        out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    out << "CELLS " << mesh.tets.size() << ' ' << 5 * mesh.tets.size() << '\n';
    for (const auto& t : mesh.tets)
        out << 4 << ' ' << t.vertex_ids[0] << ' ' << t.vertex_ids[1] << ' ' << t.vertex_ids[2] << ' '
            << t.vertex_ids[3] << '\n';
    out << "CELL_TYPES " << mesh.tets.size() << '\n';
    for (std::size_t i = 0; i < mesh.tets.size(); ++i)
        out << "10\n";
    if (fields.empty())
        return;
    out << "POINT_DATA " << mesh.vertices.size() << '\n';
    for (const auto& f : fields) {
        if (f.components == 1) {
            out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : f.values)
                out << v << '\n';
        } else if (f.components == 3) {
            out << "VECTORS " << f.name << " double\n";
            for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
                out << f.values[3 * i] << ' ' << f.values[3 * i + 1] << ' ' << f.values[3 * i + 2] << '\n';
        } else if (f.components == 6) {
            out << "TENSORS " << f.name << " double\n";
            for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
                const double* s = &f.values[6 * i];
                out << s[0] << ' ' << s[3] << ' ' << s[4] << '\n'
                    << s[3] << ' ' << s[1] << ' ' << s[5] << '\n'
                    << s[4] << ' ' << s[5] << ' ' << s[2] << "\n\n";
            }
        } else {
            throw std::invalid_argument("unsupported VTK field width for " + f.name);
        }
    }
}

} // namespace hzfem

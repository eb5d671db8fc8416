#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "hzfem/mesh.hpp"

using namespace hzfem;

TEST(Mesh, LevelOneCounts)
{
    const Mesh m = build_cube_mesh(1);
    const MeshStats s = mesh_stats(m);
    EXPECT_EQ(s.tets, 6);
    EXPECT_EQ(s.vertices, 8);
    EXPECT_EQ(s.edges, 19);
    EXPECT_EQ(s.faces, 18);
    EXPECT_EQ(s.vertices - s.edges + s.faces - s.tets, 1);
}

TEST(Mesh, LevelOneVolumes)
{
    const MeshStats s = mesh_stats(build_cube_mesh(1));
    EXPECT_NEAR(s.total_volume, 1.0, 1e-14);
    EXPECT_NEAR(s.min_volume, 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(s.max_volume, 1.0 / 6.0, 1e-15);
}

TEST(Mesh, MainDiagonalIsSharedBySixTets)
{
    const Mesh m = build_cube_mesh(1);
    bool found = false;
    for (const auto& e : m.edges) {
        const Point3 a = m.vertices[static_cast<std::size_t>(e.vertex_ids[0])];
        const Point3 b = m.vertices[static_cast<std::size_t>(e.vertex_ids[1])];
        if (a.norm() == 0.0 && (b - Point3(1, 1, 1)).norm() == 0.0) {
            EXPECT_EQ(e.n0(), 6);
            found = true;
        }
    }
    EXPECT_TRUE(found);
}

TEST(Mesh, RefinedCounts)
{
    const MeshStats s2 = mesh_stats(build_cube_mesh(2));
    EXPECT_EQ(s2.tets, 48);
    EXPECT_EQ(s2.vertices, 27);
    EXPECT_EQ(s2.vertices - s2.edges + s2.faces - s2.tets, 1);
    const MeshStats s3 = mesh_stats(build_cube_mesh(3));
    EXPECT_EQ(s3.tets, 384);
    EXPECT_EQ(s3.vertices, 125);
    EXPECT_NEAR(s3.total_volume, 1.0, 1e-12);
}

TEST(Mesh, IncidenceSums)
{
    for (int level = 1; level <= 3; ++level) {
        const Mesh m = build_cube_mesh(level);
        Index edge_sum = 0, face_sum = 0, boundary = 0;
        for (const auto& e : m.edges)
            edge_sum += e.n0();
        for (const auto& f : m.faces) {
            face_sum += static_cast<Index>(f.incident_tets.size());
            boundary += f.is_boundary();
        }
        const auto T = static_cast<Index>(m.tets.size());
        EXPECT_EQ(edge_sum, 6 * T);
        EXPECT_EQ(face_sum, 4 * T);
        const Index n = Index{1} << (level - 1);
        EXPECT_EQ(boundary, 12 * n * n);
    }
}

TEST(Mesh, PositiveOrientationAndConsistentEntities)
{
    const Mesh m = build_cube_mesh(2);
    for (std::size_t t = 0; t < m.tets.size(); ++t) {
        const auto& tet = m.tets[t];
        EXPECT_GT(signed_volume(m.tet_points(static_cast<Index>(t))), 0.0);
        for (std::size_t le = 0; le < 6; ++le) {
            const auto& e = m.edges[static_cast<std::size_t>(tet.edge_ids[le])];
            std::set<Index> want{tet.vertex_ids[static_cast<std::size_t>(kLocalEdges[le][0])],
                                 tet.vertex_ids[static_cast<std::size_t>(kLocalEdges[le][1])]};
            EXPECT_EQ(std::set<Index>(e.vertex_ids.begin(), e.vertex_ids.end()), want);
        }
        for (std::size_t lf = 0; lf < 4; ++lf) {
            const auto& f = m.faces[static_cast<std::size_t>(tet.face_ids[lf])];
            for (Index v : f.vertex_ids)
                EXPECT_NE(v, tet.vertex_ids[lf]);   // face i is opposite vertex i
            EXPECT_NEAR(f.unit_normal.norm(), 1.0, 1e-14);
        }
    }
}

TEST(Mesh, RefinementIsNested)
{
    // Every level-l vertex is a level-(l+1) vertex, and every coarse edge is
    // the union of two fine edges through its midpoint.
    const Mesh coarse = build_cube_mesh(2), fine = build_cube_mesh(3);
    const auto key = [](const Point3& p) {
        return std::array<long, 3>{std::lround(8 * p[0]), std::lround(8 * p[1]), std::lround(8 * p[2])};
    };
    std::set<std::array<long, 3>> fine_vertices;
    for (const auto& p : fine.vertices)
        fine_vertices.insert(key(p));
    for (const auto& p : coarse.vertices)
        EXPECT_TRUE(fine_vertices.count(key(p)));
    std::set<std::pair<std::array<long, 3>, std::array<long, 3>>> fine_edges;
    for (const auto& e : fine.edges) {
        auto a = key(fine.vertices[static_cast<std::size_t>(e.vertex_ids[0])]);
        auto b = key(fine.vertices[static_cast<std::size_t>(e.vertex_ids[1])]);
        fine_edges.insert({std::min(a, b), std::max(a, b)});
    }
    for (const auto& e : coarse.edges) {
        const Point3 a = coarse.vertices[static_cast<std::size_t>(e.vertex_ids[0])];
        const Point3 b = coarse.vertices[static_cast<std::size_t>(e.vertex_ids[1])];
        const auto ka = key(a), kb = key(b), km = key(0.5 * (a + b));
        EXPECT_TRUE(fine_edges.count({std::min(ka, km), std::max(ka, km)}));
        EXPECT_TRUE(fine_edges.count({std::min(kb, km), std::max(kb, km)}));
    }
}

TEST(Mesh, RejectsBadLevel)
{
    EXPECT_THROW(build_cube_mesh(0), ConfigError);
    EXPECT_THROW(build_cube_mesh(kMaxMeshLevel + 1), ConfigError);
}

TEST(Mesh, VtkLegacyOutput)
{
    const Mesh m = build_cube_mesh(1);
    const std::string path = ::testing::TempDir() + "hzfem_mesh.vtk";
    VtkPointField u{"u", 3, std::vector<double>(3 * m.vertices.size(), 0.5)};
    write_vtk(m, path, {u});
    std::ifstream in(path);
    ASSERT_TRUE(in);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# vtk DataFile Version", 0), 0u);
    std::stringstream rest;
    rest << in.rdbuf();
    const std::string text = rest.str();
    EXPECT_NE(text.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
    EXPECT_NE(text.find("POINTS 8 double"), std::string::npos);
    EXPECT_NE(text.find("CELLS 6 30"), std::string::npos);
    EXPECT_NE(text.find("CELL_TYPES 6"), std::string::npos);
    EXPECT_NE(text.find("VECTORS u double"), std::string::npos);
    std::remove(path.c_str());
}

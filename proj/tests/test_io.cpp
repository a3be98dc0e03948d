#include <catch2/catch.hpp>

#include "shapeflow/io.hpp"
#include "shapeflow/mesh_gen.hpp"

#include <filesystem>

using namespace shapeflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("shapeflow_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("NRRD round-trips scalar grids with geometry", "[io]") {
    TempDir tmp;
    ScalarGrid g(7, 5, 3, 0.0);
    g.set_spacing(Vec3(1.0, 1.5, 2.0));
    g.set_origin(Vec3(-3.0, 4.0, 0.25));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sin(double(i));

    const fs::path p = tmp.path / "grid.nrrd";
    write_nrrd(g, p);
    const ScalarGrid r = read_nrrd<double>(p);
    CHECK(r.dims() == g.dims());
    CHECK(r.data() == g.data());
    CHECK((r.spacing() - g.spacing()).norm() == 0.0);
    CHECK((r.origin() - g.origin()).norm() == 0.0);
}

TEST_CASE("NRRD round-trips binary masks as uint8", "[io]") {
    TempDir tmp;
    MaskGrid m = make_ball_mask(5.0, 2.0);
    const fs::path p = tmp.path / "mask.nrrd";
    write_nrrd(m, p);
    const MaskGrid r = read_nrrd<std::uint8_t>(p);
    CHECK(r.data() == m.data());
    CHECK(is_binary(r));
}

TEST_CASE("NRRD writes are byte-stable", "[io]") {
    TempDir tmp;
    MaskGrid m = make_ball_mask(4.0, 2.0);
    write_nrrd(m, tmp.path / "a.nrrd");
    write_nrrd(m, tmp.path / "b.nrrd");
    CHECK(hash_file(tmp.path / "a.nrrd") == hash_file(tmp.path / "b.nrrd"));
}

TEST_CASE("OBJ round-trips quad meshes", "[io]") {
    TempDir tmp;
    const QuadMesh m = make_quad_sphere(4, 3.0);
    const fs::path p = tmp.path / "mesh.obj";
    write_obj(p, m);
    const QuadMesh r = read_obj(p).as_quad_mesh();
    REQUIRE(r.vertices.size() == m.vertices.size());
    REQUIRE(r.faces == m.faces);
    for (std::size_t v = 0; v < m.vertices.size(); ++v)
        CHECK((r.vertices[v] - m.vertices[v]).norm() == 0.0); // %.17g is lossless
}

TEST_CASE("OBJ round-trips triangle meshes and point clouds", "[io]") {
    TempDir tmp;
    const TriMesh m = make_icosphere(2, 2.0);
    write_obj(tmp.path / "tri.obj", m);
    const TriMesh r = read_obj(tmp.path / "tri.obj").as_tri_mesh();
    CHECK(r.faces == m.faces);

    write_obj(tmp.path / "cloud.obj", m.vertices);
    const ObjContents cloud = read_obj(tmp.path / "cloud.obj");
    CHECK(cloud.vertices.size() == m.vertices.size());
    CHECK(cloud.quads.empty());
    CHECK(cloud.tris.empty());
}

TEST_CASE("vertex CSV round-trips", "[io]") {
    TempDir tmp;
    const std::vector<double> vals = {1.0, -2.5, 3.14159, 0.0, 1e-17};
    write_vertex_csv(tmp.path / "v.csv", vals);
    CHECK(read_vertex_csv(tmp.path / "v.csv") == vals);
}

TEST_CASE("feature series round-trips with metadata", "[io]") {
    TempDir tmp;
    FeatureSeries s;
    s.name = "elongation";
    s.reference = 0;
    s.rows = {{0.0, 0.5, -0.25}, {1e-9, 2.0, 3.0}};
    write_series(tmp.path / "series.csv", s);
    const FeatureSeries r = read_series(tmp.path / "series.csv");
    CHECK(r.name == s.name);
    CHECK(r.reference == s.reference);
    CHECK(r.rows == s.rows);
}

TEST_CASE("unreadable files raise errors", "[io]") {
    CHECK_THROWS_AS(read_nrrd<double>("/nonexistent/file.nrrd"), Error);
    CHECK_THROWS_AS(read_obj("/nonexistent/file.obj"), Error);
}

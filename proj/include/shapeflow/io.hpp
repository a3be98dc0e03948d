#pragma once

#include "shapeflow/descriptors.hpp"
#include "shapeflow/mesh.hpp"
#include "shapeflow/voxel_grid.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace shapeflow {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
struct NrrdTypeName;
template <>
struct NrrdTypeName<double> {
    static constexpr const char* value = "double";
};
template <>
struct NrrdTypeName<float> {
    static constexpr const char* value = "float";
};
template <>
struct NrrdTypeName<std::uint8_t> {
    static constexpr const char* value = "uint8";
};

} // namespace detail

/// Raw little-endian NRRD with diagonal space directions. Header fields are
/// emitted in a fixed order so identical grids serialize byte-identically.
template <typename T>
void write_nrrd(const VoxelGrid<T>& g, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("write_nrrd: cannot open " + path.string());
    const Vec3& sp = g.spacing();
    const Vec3& o = g.origin();
    f << "NRRD0004\n";
    f << "type: " << detail::NrrdTypeName<T>::value << "\n";
    f << "dimension: 3\n";
    f << "sizes: " << g.nx() << " " << g.ny() << " " << g.nz() << "\n";
    f << "encoding: raw\n";
    f << "endian: little\n";
    f << "space dimension: 3\n";
    f << "space directions: (" << detail::fmt_double(sp[0]) << ",0,0) (0,"
      << detail::fmt_double(sp[1]) << ",0) (0,0," << detail::fmt_double(sp[2]) << ")\n";
    f << "space origin: (" << detail::fmt_double(o[0]) << "," << detail::fmt_double(o[1])
      << "," << detail::fmt_double(o[2]) << ")\n";
    f << "\n";
    f.write(reinterpret_cast<const char*>(g.data().data()), g.size() * sizeof(T));
    if (!f) throw Error("write_nrrd: write failed for " + path.string());
}

namespace detail {

struct NrrdHeader {
    std::string type;
    std::array<int, 3> sizes = {0, 0, 0};
    Vec3 spacing{1, 1, 1};
    Vec3 origin{0, 0, 0};
    std::streampos data_start;
};

inline NrrdHeader read_nrrd_header(std::ifstream& f, const std::string& name) {
    NrrdHeader h;
    std::string line;
    if (!std::getline(f, line) || line.rfind("NRRD", 0) != 0)
        throw Error("read_nrrd: not a NRRD file: " + name);
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;
        if (line[0] == '#') continue;
        const auto colon = line.find(": ");
        if (colon == std::string::npos) continue;
        const std::string key = line.substr(0, colon);
        const std::string val = line.substr(colon + 2);
        if (key == "type") {
            h.type = val;
        } else if (key == "sizes") {
            std::istringstream ss(val);
            ss >> h.sizes[0] >> h.sizes[1] >> h.sizes[2];
        } else if (key == "encoding") {
            if (val != "raw") throw Error("read_nrrd: only raw encoding supported");
        } else if (key == "endian") {
            if (val != "little") throw Error("read_nrrd: only little endian supported");
        } else if (key == "space directions" || key == "space origin" || key == "spacings") {
            std::string nums = val;
            for (char& c : nums)
                if (c == '(' || c == ')' || c == ',') c = ' ';
            std::istringstream ss(nums);
            if (key == "spacings") {
                ss >> h.spacing[0] >> h.spacing[1] >> h.spacing[2];
            } else if (key == "space origin") {
                ss >> h.origin[0] >> h.origin[1] >> h.origin[2];
            } else {
                double m[9] = {0};
                for (double& x : m) ss >> x;
                h.spacing = Vec3(m[0], m[4], m[8]);
                if (h.spacing.minCoeff() <= 0)
                    throw Error("read_nrrd: non-diagonal space directions unsupported");
            }
        }
    }
    h.data_start = f.tellg();
    if (h.sizes[0] <= 0 || h.sizes[1] <= 0 || h.sizes[2] <= 0)
        throw Error("read_nrrd: missing sizes in " + name);
    return h;
}

template <typename Src, typename T>
void read_nrrd_payload(std::ifstream& f, VoxelGrid<T>& g) {
    std::vector<Src> buf(g.size());
    f.read(reinterpret_cast<char*>(buf.data()), buf.size() * sizeof(Src));
    if (!f) throw Error("read_nrrd: truncated payload");
    for (std::size_t i = 0; i < buf.size(); ++i) g[i] = static_cast<T>(buf[i]);
}

} // namespace detail

template <typename T>
VoxelGrid<T> read_nrrd(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("read_nrrd: cannot open " + path.string());
    const auto h = detail::read_nrrd_header(f, path.string());
    VoxelGrid<T> g(h.sizes[0], h.sizes[1], h.sizes[2]);
    g.set_spacing(h.spacing);
    g.set_origin(h.origin);
    f.seekg(h.data_start);
    if (h.type == "double")
        detail::read_nrrd_payload<double>(f, g);
    else if (h.type == "float")
        detail::read_nrrd_payload<float>(f, g);
    else if (h.type == "uint8" || h.type == "uchar" || h.type == "unsigned char")
        detail::read_nrrd_payload<std::uint8_t>(f, g);
    else if (h.type == "short" || h.type == "int16")
        detail::read_nrrd_payload<std::int16_t>(f, g);
    else
        throw Error("read_nrrd: unsupported type " + h.type);
    return g;
}

/// Wavefront OBJ contents: vertices plus any mix of quad and triangle faces.
struct ObjContents {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> quads;
    std::vector<std::array<int, 3>> tris;

    QuadMesh as_quad_mesh() const {
        if (!tris.empty()) throw Error("OBJ: triangle faces where quads expected");
        QuadMesh m;
        m.vertices = vertices;
        m.faces = quads;
        return m;
    }
    TriMesh as_tri_mesh() const {
        if (!quads.empty()) throw Error("OBJ: quad faces where triangles expected");
        TriMesh m;
        m.vertices = vertices;
        m.faces = tris;
        return m;
    }
};

inline void write_obj(const std::filesystem::path& path, std::span<const Vec3> vertices,
                      std::span<const std::array<int, 4>> quads = {},
                      std::span<const std::array<int, 3>> tris = {}) {
    std::ofstream f(path);
    if (!f) throw Error("write_obj: cannot open " + path.string());
    for (const Vec3& v : vertices)
        f << "v " << detail::fmt_double(v[0]) << " " << detail::fmt_double(v[1]) << " "
          << detail::fmt_double(v[2]) << "\n";
    for (const auto& q : quads)
        f << "f " << q[0] + 1 << " " << q[1] + 1 << " " << q[2] + 1 << " " << q[3] + 1 << "\n";
    for (const auto& t : tris) f << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    if (!f) throw Error("write_obj: write failed for " + path.string());
}

inline void write_obj(const std::filesystem::path& path, const QuadMesh& m) {
    write_obj(path, m.vertices, m.faces, {});
}
inline void write_obj(const std::filesystem::path& path, const TriMesh& m) {
    write_obj(path, m.vertices, {}, m.faces);
}

inline ObjContents read_obj(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("read_obj: cannot open " + path.string());
    ObjContents out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("v ", 0) == 0) {
            std::istringstream ss(line.substr(2));
            Vec3 v;
            ss >> v[0] >> v[1] >> v[2];
            out.vertices.push_back(v);
        } else if (line.rfind("f ", 0) == 0) {
            std::istringstream ss(line.substr(2));
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // accept v, v/t, v/t/n, v//n references
                idx.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
            }
            if (idx.size() == 3)
                out.tris.push_back({idx[0], idx[1], idx[2]});
            else if (idx.size() == 4)
                out.quads.push_back({idx[0], idx[1], idx[2], idx[3]});
            else
                throw Error("read_obj: only triangle and quad faces supported");
        }
    }
    return out;
}

/// Per-vertex scalar CSV: "vertex_id,value".
inline void write_vertex_csv(const std::filesystem::path& path,
                             std::span<const double> values) {
    std::ofstream f(path);
    if (!f) throw Error("write_vertex_csv: cannot open " + path.string());
    f << "vertex_id,value\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        f << i << "," << detail::fmt_double(values[i]) << "\n";
}

inline std::vector<double> read_vertex_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("read_vertex_csv: cannot open " + path.string());
    std::string line;
    std::getline(f, line); // header
    std::vector<double> out;
    while (std::getline(f, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        out.push_back(std::stod(line.substr(comma + 1)));
    }
    return out;
}

/// FeatureSeries as frame-by-vertex CSV plus a JSON metadata sidecar.
inline void write_series(const std::filesystem::path& csv_path, const FeatureSeries& s,
                         const std::string& units = "") {
    std::ofstream f(csv_path);
    if (!f) throw Error("write_series: cannot open " + csv_path.string());
    for (std::size_t t = 0; t < s.rows.size(); ++t) {
        f << t;
        for (double v : s.rows[t]) f << "," << detail::fmt_double(v);
        f << "\n";
    }
    nlohmann::json meta;
    meta["name"] = s.name;
    meta["reference_frame"] = s.reference;
    meta["frames"] = s.rows.size();
    meta["vertices"] = s.rows.empty() ? 0 : s.rows[0].size();
    meta["units"] = units;
    std::filesystem::path jp = csv_path;
    jp.replace_extension(".json");
    std::ofstream jf(jp);
    jf << meta.dump(2) << "\n";
}

inline FeatureSeries read_series(const std::filesystem::path& csv_path) {
    std::ifstream f(csv_path);
    if (!f) throw Error("read_series: cannot open " + csv_path.string());
    FeatureSeries s;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = line.find(','); // first field is the frame index
        while (pos != std::string::npos) {
            const std::size_t next = line.find(',', pos + 1);
            row.push_back(std::stod(line.substr(pos + 1, next - pos - 1)));
            pos = next;
        }
        s.rows.push_back(std::move(row));
    }
    std::filesystem::path jp = csv_path;
    jp.replace_extension(".json");
    if (std::ifstream jf(jp); jf) {
        nlohmann::json meta = nlohmann::json::parse(jf);
        s.name = meta.value("name", "");
        s.reference = meta.value("reference_frame", 0);
    }
    return s;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream f(path);
    if (!f) throw Error("write_matrix_csv: cannot open " + path.string());
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) f << (j ? "," : "") << detail::fmt_double(m(i, j));
        f << "\n";
    }
}

inline std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("hash_file: cannot open " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
    return fnv1a64(buf);
}

} // namespace shapeflow

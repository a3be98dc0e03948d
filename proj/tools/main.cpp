// Command-line driver: every pipeline stage as a subcommand with
// reproducible configs and hashed output manifests.

#include "shapeflow/analysis.hpp"
#include "shapeflow/descriptors.hpp"
#include "shapeflow/geodesic.hpp"
#include "shapeflow/io.hpp"
#include "shapeflow/lbo.hpp"
#include "shapeflow/lddmm.hpp"
#include "shapeflow/marching_cubes.hpp"
#include "shapeflow/mesh_gen.hpp"
#include "shapeflow/simulate.hpp"
#include "shapeflow/synthetic.hpp"
#include "shapeflow/voxelize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shapeflow;

namespace {

/// Input/config problems exit with 1; numerical failures with 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tracks files written by a run: on success a manifest with content hashes
/// is emitted, on failure all partial outputs are removed.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    fs::path path(const std::string& name) {
        fs::path p = dir_ / name;
        files_.push_back(p);
        return p;
    }

    void write_manifest(const std::string& subcommand, const std::string& config_text) {
        json m;
        m["subcommand"] = subcommand;
        m["config"] = config_text;
        json outs = json::array();
        for (const auto& f : files_) {
            char hex[32];
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(hash_file(f)));
            outs.push_back({{"path", f.filename().string()}, {"fnv1a64", hex}});
        }
        m["outputs"] = outs;
        std::ofstream f(dir_ / "run_manifest.json");
        f << m.dump(2) << "\n";
    }

    void remove_partial() {
        for (const auto& f : files_) {
            std::error_code ec;
            fs::remove(f, ec);
        }
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
};

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) throw UsageError(what + " not found: " + p.string());
}

std::string frame_name(const char* prefix, int t, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%03d.%s", prefix, t, ext);
    return buf;
}

std::vector<Vec3> subsample(const std::vector<Vec3>& points, int target) {
    if (target <= 0 || int(points.size()) <= target) return points;
    std::vector<Vec3> out;
    const int stride = std::max<int>(1, int(points.size()) / target);
    for (std::size_t i = 0; i < points.size(); i += stride) out.push_back(points[i]);
    return out;
}

// ---------------------------------------------------------------- mesh-gen

struct MeshGenOpts {
    std::string shape = "sphere";
    int subdiv = 8;
    int level = 4;
    double radius = 1.0;
    double a = 2, b = 1.5, c = 1;
    double major = 2, minor = 0.5;
    double texture_amp = 0.1;
    double texture_freq = 0.65;
    double margin = 4.0;
    std::string out;
    std::string mask_out;
};

int run_mesh_gen(const MeshGenOpts& o, OutputSet& outs) {
    if (o.out.empty() && o.mask_out.empty())
        throw UsageError("mesh-gen: need --out and/or --mask-out");

    if (!o.out.empty()) {
        const fs::path p = outs.path(o.out);
        if (o.shape == "sphere")
            write_obj(p, make_quad_sphere(o.subdiv, o.radius));
        else if (o.shape == "ellipsoid")
            write_obj(p, make_quad_ellipsoid(o.a, o.b, o.c, o.subdiv));
        else if (o.shape == "torus")
            write_obj(p, make_quad_torus(o.major, o.minor));
        else if (o.shape == "icosphere")
            write_obj(p, make_icosphere(o.level, o.radius));
        else if (o.shape == "blob")
            write_obj(p, make_quad_blob(Vec3(o.a, o.b, o.c), o.texture_amp, o.subdiv,
                                        Vec3::Zero(), o.texture_freq));
        else
            throw UsageError("mesh-gen: unknown shape " + o.shape);
    }
    if (!o.mask_out.empty()) {
        const fs::path p = outs.path(o.mask_out);
        if (o.shape == "sphere" || o.shape == "icosphere")
            write_nrrd(make_ball_mask(o.radius, o.margin), p);
        else if (o.shape == "ellipsoid")
            write_nrrd(make_ellipsoid_mask(Vec3(o.a, o.b, o.c), o.margin), p);
        else if (o.shape == "torus")
            write_nrrd(make_torus_mask(o.major, o.minor, o.margin), p);
        else if (o.shape == "blob")
            write_nrrd(make_blob_mask(Vec3(o.a, o.b, o.c), o.texture_amp, o.margin,
                                      Vec3(1, 1, 1), o.texture_freq),
                       p);
        else
            throw UsageError("mesh-gen: unknown shape " + o.shape);
    }
    return 0;
}

// ---------------------------------------------------------------- feature

struct FeatureOpts {
    std::string mask;
    std::string mesh;
    double radius_factor = 0.8;
    int erode_passes = 1;
    int iterations = 200;
    double tol = 0.0; // 0 = fixed iteration budget
    int length_iterations = 200;
    bool save_fields = false;
    bool sphere_map = false;
};

FeatureOptions to_feature_options(const FeatureOpts& o) {
    FeatureOptions fo;
    fo.radius_factor = o.radius_factor;
    fo.erode_passes = o.erode_passes;
    fo.laplace.max_iter = o.iterations;
    if (o.tol > 0) fo.laplace.tol = o.tol;
    fo.length_iterations = o.length_iterations;
    return fo;
}

int run_feature(const FeatureOpts& o, OutputSet& outs) {
    require_file(o.mask, "mask");
    const MaskGrid mask = read_nrrd<std::uint8_t>(o.mask);
    const FeaturePipeline pipe = run_feature_pipeline(mask, to_feature_options(o));

    write_nrrd(pipe.feature.values, outs.path("feature.nrrd"));
    if (o.save_fields) {
        write_nrrd(pipe.harmonic.h, outs.path("h.nrrd"));
        write_nrrd(pipe.lengths.L0, outs.path("L0.nrrd"));
        write_nrrd(pipe.lengths.L1, outs.path("L1.nrrd"));
        write_nrrd(pipe.lengths.G, outs.path("G.nrrd"));
    }
    json info;
    info["radius"] = pipe.labels.radius;
    info["centroid"] = {pipe.labels.centroid[0], pipe.labels.centroid[1],
                        pipe.labels.centroid[2]};
    info["laplace_iterations"] = pipe.harmonic.iterations_run;

    if (!o.mesh.empty()) {
        require_file(o.mesh, "mesh");
        const ObjContents obj = read_obj(o.mesh);
        const auto values = sample_on_vertices(pipe.feature, obj.vertices);
        write_vertex_csv(outs.path("feature_vertices.csv"), values);
        if (o.sphere_map) {
            const auto positions = flow_to_sphere(pipe.flow, obj.vertices, pipe.labels);
            write_obj(outs.path("sphere_map.obj"), positions);
            write_vertex_csv(outs.path("sphere_map_values.csv"), values);
        }
    }
    std::ofstream jf(outs.path("feature.json"));
    jf << info.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    std::string synthetic = "ellipsoid"; // "blob" | "ellipsoid"
    double a = 16, b = 11, c = 8;
    double texture_amp = 0.0;
    double texture_freq = 0.65;
    int subdiv = 8;
    std::string model = "sag";
    double severity = 1.0;
    double amplitude = 0.04;
    int frames_per_half = 4;
    int cycles = 8;
    int target_points = 1200;
    std::uint64_t seed = 0;
    double frame_rate = 8.0;
};

int run_simulate(const SimulateOpts& o, OutputSet& outs) {
    if (o.synthetic != "blob" && o.synthetic != "ellipsoid")
        throw UsageError("simulate: need --synthetic blob|ellipsoid");
    const double amp = o.synthetic == "blob" ? o.texture_amp : 0.0;
    const double semi_max = std::max({o.a, o.b, o.c});
    const double margin = 0.8 * 2.0 * semi_max * (1 + amp) - semi_max + 3.0;
    const MaskGrid mask =
        make_blob_mask(Vec3(o.a, o.b, o.c), amp, margin, Vec3(1, 1, 1), o.texture_freq);
    const Vec3 center = shape_pca(mask).centroid;
    const QuadMesh mesh =
        make_quad_blob(Vec3(o.a, o.b, o.c), amp, o.subdiv, center, o.texture_freq);

    PolyaffineModel model;
    if (o.model == "sag")
        model = sag_model(mask, o.severity);
    else if (o.model == "breathing")
        model = breathing_model(mask, o.amplitude, o.seed);
    else
        throw UsageError("simulate: unknown model " + o.model);

    const SimulatedSequence sim = make_cycle(model, mask, mesh, o.frames_per_half, o.cycles);

    write_obj(outs.path("rest_mesh.obj"), mesh);
    json frames = json::array();
    for (int t = 0; t < sim.frame_count(); ++t) {
        const std::string mask_name = frame_name("mask", t, "nrrd");
        const std::string cloud_name = frame_name("cloud", t, "obj");
        write_nrrd(sim.masks[t], outs.path(mask_name));
        const TriMesh surface = marching_cubes(box_smooth(sim.masks[t]));
        write_obj(outs.path(cloud_name), subsample(surface.vertices, o.target_points));
        frames.push_back({{"index", t},
                          {"s", sim.s[t]},
                          {"mask", mask_name},
                          {"cloud", cloud_name}});
    }
    {
        std::ofstream gt(outs.path("ground_truth.csv"));
        gt << "frame,vertex_id,x,y,z\n";
        for (int t = 0; t < sim.frame_count(); ++t)
            for (std::size_t v = 0; v < sim.meshes[t].size(); ++v) {
                const Vec3& p = sim.meshes[t][v];
                gt << t << "," << v << "," << detail::fmt_double(p[0]) << ","
                   << detail::fmt_double(p[1]) << "," << detail::fmt_double(p[2]) << "\n";
            }
    }
    json manifest;
    manifest["units"] = "mm";
    manifest["frame_rate"] = o.frame_rate;
    manifest["rest_mesh"] = "rest_mesh.obj";
    manifest["ground_truth"] = "ground_truth.csv";
    manifest["frames"] = frames;
    std::ofstream mf(outs.path("manifest.json"));
    mf << manifest.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- track

struct TrackOpts {
    std::string manifest;
    double kernel_width = 8.0;
    int time_steps = 15;
    int max_iterations = 60;
    double data_weight = 1.0;
    double reg_weight = 1e-4;
    double rel_tol = 1e-6;
    int target_points = 0; // 0 = use clouds as stored
};

json load_json(const fs::path& path, const std::string& what) {
    require_file(path, what);
    std::ifstream f(path);
    return json::parse(f);
}

int run_track(const TrackOpts& o, OutputSet& outs) {
    const json manifest = load_json(o.manifest, "manifest");
    const fs::path base = fs::path(o.manifest).parent_path();

    const QuadMesh rest =
        read_obj(base / manifest.at("rest_mesh").get<std::string>()).as_quad_mesh();
    std::vector<std::vector<Vec3>> clouds;
    for (const auto& fr : manifest.at("frames")) {
        auto cloud = read_obj(base / fr.at("cloud").get<std::string>()).vertices;
        if (o.target_points > 0) cloud = subsample(cloud, o.target_points);
        clouds.push_back(std::move(cloud));
    }

    RegistrationParams params;
    params.kernel_width = o.kernel_width;
    params.time_steps = o.time_steps;
    params.max_iterations = o.max_iterations;
    params.data_weight = o.data_weight;
    params.reg_weight = o.reg_weight;
    params.rel_tol = o.rel_tol;

    const TrackedSequence seq = track_sequence(rest.faces, rest.vertices, clouds, params);

    write_obj(outs.path("faces.obj"), seq.frames[0], seq.faces, {});
    json frames = json::array();
    for (int t = 0; t < seq.frame_count(); ++t) {
        const std::string name = frame_name("frame", t, "obj");
        write_obj(outs.path(name), seq.frames[t]);
        frames.push_back(name);
    }
    {
        std::ofstream rf(outs.path("residuals.csv"));
        rf << "transition,residual_mm\n";
        for (std::size_t t = 0; t < seq.residuals.size(); ++t)
            rf << t << "," << detail::fmt_double(seq.residuals[t]) << "\n";
    }
    json index;
    index["faces"] = "faces.obj";
    index["frames"] = frames;
    index["residuals"] = "residuals.csv";
    std::ofstream f(outs.path("index.json"));
    f << index.dump(2) << "\n";
    return 0;
}

TrackedSequence load_tracked(const fs::path& index_path) {
    const json index = load_json(index_path, "tracked index");
    const fs::path base = index_path.parent_path();
    TrackedSequence seq;
    seq.faces = read_obj(base / index.at("faces").get<std::string>()).quads;
    for (const auto& fr : index.at("frames"))
        seq.frames.push_back(read_obj(base / fr.get<std::string>()).vertices);
    return seq;
}

// ---------------------------------------------------------------- describe

struct DescribeOpts {
    std::string tracked;
    std::string manifest; // per-frame masks; optional if meshes are voxelized
    FeatureOpts feature;
    double voxel_spacing = 1.0;
    bool negate_elongation = false;
};

int run_describe(const DescribeOpts& o, OutputSet& outs) {
    const TrackedSequence seq = load_tracked(o.tracked);

    write_series(outs.path("elongation.csv"), elongation_series(seq, o.negate_elongation));
    outs.path("elongation.json");
    write_series(outs.path("distortion.csv"), distortion_series(seq), "rad");
    outs.path("distortion.json");
    write_series(outs.path("curvature.csv"), curvature_series(seq), "1/mm");
    outs.path("curvature.json");

    // per-frame masks: supplied volumes, or voxelized tracked meshes
    std::vector<MaskGrid> masks;
    if (!o.manifest.empty()) {
        const json manifest = load_json(o.manifest, "manifest");
        const fs::path base = fs::path(o.manifest).parent_path();
        if (int(manifest.at("frames").size()) != seq.frame_count())
            throw UsageError("describe: manifest frame count != tracked frame count");
        for (const auto& fr : manifest.at("frames"))
            masks.push_back(read_nrrd<std::uint8_t>(base / fr.at("mask").get<std::string>()));
    } else {
        const auto tri_faces = triangulate_like(seq.faces, seq.frames[0]);
        for (const auto& verts : seq.frames) {
            TriMesh m;
            m.vertices = verts;
            m.faces = tri_faces;
            masks.push_back(voxelize(m, Vec3::Constant(o.voxel_spacing), 4.0));
        }
    }

    // identical masks (cyclic sequences) share one field solve
    const FeatureOptions fo = to_feature_options(o.feature);
    std::map<std::uint64_t, std::shared_ptr<FeaturePipeline>> cache;
    FeatureSeries geo;
    geo.name = "geodesic_feature";
    for (int t = 0; t < seq.frame_count(); ++t) {
        const auto& data = masks[t].data();
        const std::uint64_t key = fnv1a64(std::span(data.data(), data.size()));
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache
                     .emplace(key, std::make_shared<FeaturePipeline>(
                                       run_feature_pipeline(masks[t], fo)))
                     .first;
        geo.rows.push_back(sample_on_vertices(it->second->feature, seq.frames[t]));
    }
    write_series(outs.path("geodesic_feature.csv"), geo);
    outs.path("geodesic_feature.json");
    return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOpts {
    std::string series;
    int max_frame = -1; ///< frame of maximal deformation; -1 = global minimum
};

int run_analyze(const AnalyzeOpts& o, OutputSet& outs) {
    require_file(o.series, "series");
    const FeatureSeries series = read_series(o.series);
    const CorrelationTrajectory tr = correlation_trajectory(series);

    {
        std::ofstream f(outs.path("correlation.csv"));
        f << "frame,correlation,valid\n";
        for (std::size_t t = 0; t < tr.corr.size(); ++t)
            f << t << "," << detail::fmt_double(tr.corr[t]) << "," << int(tr.valid[t])
              << "\n";
    }
    json out;
    out["name"] = series.name;
    out["reference_frame"] = tr.reference;
    out["min_corr"] = tr.min_corr;
    out["depth"] = tr.depth;
    if (o.max_frame >= 0 && o.max_frame < int(tr.corr.size())) {
        out["max_deformation_frame"] = o.max_frame;
        out["depth_at_max_deformation"] = 1.0 - tr.corr[o.max_frame];
    }
    std::ofstream jf(outs.path("analysis.json"));
    jf << out.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- compare

struct CompareOpts {
    std::vector<std::string> series;
    int max_frame = -1;
    std::vector<std::string> patterns;     // "positions.obj,values.csv" per subject
    std::vector<std::string> lbo_subjects; // "mesh.obj,series.csv" per subject
    int grid_level = 4;
};

int run_compare(const CompareOpts& o, OutputSet& outs) {
    json out;
    if (o.series.size() >= 2) {
        std::vector<double> depths;
        for (const auto& s : o.series) {
            require_file(s, "series");
            const CorrelationTrajectory tr = correlation_trajectory(read_series(s));
            if (o.max_frame >= 0 && o.max_frame < int(tr.corr.size()))
                depths.push_back(1.0 - tr.corr[o.max_frame]);
            else
                depths.push_back(tr.depth);
        }
        const DistanceMatrix m = depth_distance_matrix(depths);
        write_matrix_csv(outs.path("depth_matrix.csv"), m.d);
        out["depths"] = depths;
        out["depth_matrix_kind"] = m.kind;
    }
    if (o.patterns.size() >= 2) {
        std::vector<SphericalMap> maps;
        for (const auto& spec : o.patterns) {
            const auto comma = spec.find(',');
            if (comma == std::string::npos)
                throw UsageError("compare: --pattern wants positions.obj,values.csv");
            SphericalMap map;
            map.positions = read_obj(spec.substr(0, comma)).vertices;
            map.values = read_vertex_csv(spec.substr(comma + 1));
            maps.push_back(std::move(map));
        }
        const DistanceMatrix m = pattern_distance_matrix(maps, o.grid_level);
        write_matrix_csv(outs.path("pattern_matrix.csv"), m.d);
        out["pattern_matrix_kind"] = m.kind;
    }
    if (o.lbo_subjects.size() >= 2) {
        // eigenfunction-based spherical maps carrying the mean motion pattern
        std::vector<SphericalMap> maps;
        int sid = 0;
        for (const auto& spec : o.lbo_subjects) {
            const auto comma = spec.find(',');
            if (comma == std::string::npos)
                throw UsageError("compare: --lbo-subject wants mesh.obj,series.csv");
            const ObjContents obj = read_obj(spec.substr(0, comma));
            TriMesh tri;
            if (!obj.quads.empty()) {
                tri = quad_to_tri(obj.as_quad_mesh());
            } else {
                tri = obj.as_tri_mesh();
            }
            const FeatureSeries series = read_series(spec.substr(comma + 1));
            const SphericalMap base =
                lbo_spherical_map(tri, std::vector<double>(tri.vertices.size(), 0.0));
            maps.push_back(mean_pattern_map(series, base.positions));
            write_obj(outs.path("lbo_map_" + std::to_string(sid) + ".obj"),
                      maps.back().positions);
            write_vertex_csv(outs.path("lbo_map_" + std::to_string(sid) + "_values.csv"),
                             maps.back().values);
            ++sid;
        }
        const DistanceMatrix m = pattern_distance_matrix(maps, o.grid_level);
        write_matrix_csv(outs.path("lbo_pattern_matrix.csv"), m.d);
        out["lbo_pattern_matrix_kind"] = m.kind;
    }
    if (out.empty())
        throw UsageError("compare: need >= 2 --series, --pattern, or --lbo-subject");
    std::ofstream jf(outs.path("compare.json"));
    jf << out.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- validate

struct ValidateOpts {
    std::string tracked;
    std::string manifest;
    std::string ground_truth;
};

int run_validate(const ValidateOpts& o, OutputSet& outs) {
    const TrackedSequence seq = load_tracked(o.tracked);
    const json manifest = load_json(o.manifest, "manifest");
    const fs::path base = fs::path(o.manifest).parent_path();

    std::vector<std::vector<Vec3>> clouds;
    for (const auto& fr : manifest.at("frames"))
        clouds.push_back(read_obj(base / fr.at("cloud").get<std::string>()).vertices);
    if (int(clouds.size()) != seq.frame_count())
        throw UsageError("validate: frame count mismatch");

    double max_e = 0, sum_e = 0;
    std::ofstream pf(outs.path("per_frame_errors.csv"));
    pf << "frame,error_mm\n";
    for (int t = 0; t < seq.frame_count(); ++t) {
        const double e = tracking_error(seq.frames[t], clouds[t]);
        pf << t << "," << detail::fmt_double(e) << "\n";
        max_e = std::max(max_e, e);
        sum_e += e;
    }
    json out;
    out["final_frame_error_mm"] = tracking_error(seq.frames.back(), clouds.back());
    out["max_frame_error_mm"] = max_e;
    out["mean_frame_error_mm"] = sum_e / seq.frame_count();

    if (!o.ground_truth.empty()) {
        require_file(o.ground_truth, "ground truth");
        std::ifstream gt(o.ground_truth);
        std::string line;
        std::getline(gt, line); // header
        std::vector<std::vector<Vec3>> truth;
        while (std::getline(gt, line)) {
            int frame, vid;
            double x, y, z;
            if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &frame, &vid, &x, &y, &z) !=
                5)
                continue;
            if (frame >= int(truth.size())) truth.resize(frame + 1);
            if (vid >= int(truth[frame].size())) truth[frame].resize(vid + 1);
            truth[frame][vid] = Vec3(x, y, z);
        }
        if (int(truth.size()) != seq.frame_count())
            throw UsageError("validate: ground-truth frame count mismatch");
        double max_gt = 0, final_gt = 0;
        for (int t = 0; t < seq.frame_count(); ++t) {
            double mean = 0;
            for (std::size_t v = 0; v < seq.frames[t].size(); ++v)
                mean += (seq.frames[t][v] - truth[t][v]).norm();
            mean /= double(seq.frames[t].size());
            max_gt = std::max(max_gt, mean);
            if (t + 1 == seq.frame_count()) final_gt = mean;
        }
        out["ground_truth_final_mean_error_mm"] = final_gt;
        out["ground_truth_max_mean_error_mm"] = max_gt;
    }
    std::ofstream jf(outs.path("validation.json"));
    jf << out.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"shapeflow: surface motion tracking and characterization"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI config file");

    std::string out_dir = "shapeflow_out";
    app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();

    MeshGenOpts mg;
    auto* cmd_mesh = app.add_subcommand("mesh-gen", "generate synthetic quad/tri meshes");
    cmd_mesh->add_option("--shape", mg.shape, "sphere|ellipsoid|torus|icosphere|blob");
    cmd_mesh->add_option("--subdiv", mg.subdiv);
    cmd_mesh->add_option("--level", mg.level, "icosphere subdivision level");
    cmd_mesh->add_option("--radius", mg.radius);
    cmd_mesh->add_option("--a", mg.a);
    cmd_mesh->add_option("--b", mg.b);
    cmd_mesh->add_option("--c", mg.c);
    cmd_mesh->add_option("--major", mg.major, "torus major radius");
    cmd_mesh->add_option("--minor", mg.minor, "torus tube radius");
    cmd_mesh->add_option("--texture-amp", mg.texture_amp);
    cmd_mesh->add_option("--texture-freq", mg.texture_freq);
    cmd_mesh->add_option("--margin", mg.margin, "background margin for --mask-out");
    cmd_mesh->add_option("--out", mg.out, "OBJ output name");
    cmd_mesh->add_option("--mask-out", mg.mask_out, "NRRD mask output name");

    FeatureOpts fe;
    auto* cmd_feature = app.add_subcommand("feature", "geodesic shape feature from a mask");
    cmd_feature->add_option("--mask", fe.mask)->required();
    cmd_feature->add_option("--mesh", fe.mesh, "sample the feature at these vertices");
    cmd_feature->add_option("--radius-factor", fe.radius_factor);
    cmd_feature->add_option("--erode-passes", fe.erode_passes);
    cmd_feature->add_option("--iterations", fe.iterations);
    cmd_feature->add_option("--tol", fe.tol,
                            "energy-ratio stop threshold (0 = fixed budget)");
    cmd_feature->add_option("--length-iterations", fe.length_iterations);
    cmd_feature->add_flag("--save-fields", fe.save_fields);
    cmd_feature->add_flag("--sphere-map", fe.sphere_map);

    SimulateOpts sim;
    auto* cmd_sim = app.add_subcommand("simulate", "synthetic cyclic deformation sequence");
    cmd_sim->add_option("--synthetic", sim.synthetic, "blob|ellipsoid");
    cmd_sim->add_option("--a", sim.a);
    cmd_sim->add_option("--b", sim.b);
    cmd_sim->add_option("--c", sim.c);
    cmd_sim->add_option("--texture-amp", sim.texture_amp);
    cmd_sim->add_option("--texture-freq", sim.texture_freq);
    cmd_sim->add_option("--subdiv", sim.subdiv);
    cmd_sim->add_option("--model", sim.model, "sag|breathing");
    cmd_sim->add_option("--severity", sim.severity);
    cmd_sim->add_option("--amplitude", sim.amplitude, "breathing amplitude");
    cmd_sim->add_option("--frames-per-half", sim.frames_per_half);
    cmd_sim->add_option("--cycles", sim.cycles);
    cmd_sim->add_option("--target-points", sim.target_points);
    cmd_sim->add_option("--seed", sim.seed);

    TrackOpts tr;
    auto* cmd_track = app.add_subcommand("track", "LDDMM vertex tracking over a sequence");
    cmd_track->add_option("--manifest", tr.manifest)->required();
    cmd_track->add_option("--kernel-width", tr.kernel_width);
    cmd_track->add_option("--time-steps", tr.time_steps);
    cmd_track->add_option("--max-iterations", tr.max_iterations);
    cmd_track->add_option("--data-weight", tr.data_weight);
    cmd_track->add_option("--reg-weight", tr.reg_weight);
    cmd_track->add_option("--rel-tol", tr.rel_tol);
    cmd_track->add_option("--target-points", tr.target_points);

    DescribeOpts de;
    auto* cmd_desc =
        app.add_subcommand("describe", "descriptor series for a tracked sequence");
    cmd_desc->add_option("--tracked", de.tracked, "tracked index.json")->required();
    cmd_desc->add_option("--manifest", de.manifest, "sequence manifest (per-frame masks)");
    cmd_desc->add_option("--voxel-spacing", de.voxel_spacing,
                         "voxelization spacing when no masks are supplied");
    cmd_desc->add_flag("--negate-elongation", de.negate_elongation);
    cmd_desc->add_option("--iterations", de.feature.iterations);
    cmd_desc->add_option("--tol", de.feature.tol);
    cmd_desc->add_option("--radius-factor", de.feature.radius_factor);

    AnalyzeOpts an;
    auto* cmd_an = app.add_subcommand("analyze", "correlation trajectory and depth");
    cmd_an->add_option("--series", an.series)->required();
    cmd_an->add_option("--max-frame", an.max_frame,
                       "frame of maximal deformation for the paper-style depth");

    CompareOpts co;
    auto* cmd_cmp = app.add_subcommand("compare", "inter-subject distance matrices");
    cmd_cmp->add_option("--series", co.series, "one descriptor series per subject");
    cmd_cmp->add_option("--max-frame", co.max_frame);
    cmd_cmp->add_option("--pattern", co.patterns,
                        "positions.obj,values.csv mean-pattern map per subject");
    cmd_cmp->add_option("--lbo-subject", co.lbo_subjects,
                        "mesh.obj,series.csv per subject: eigenfunction spherical maps");
    cmd_cmp->add_option("--grid-level", co.grid_level);

    ValidateOpts va;
    auto* cmd_val = app.add_subcommand("validate", "tracking error report");
    cmd_val->add_option("--tracked", va.tracked)->required();
    cmd_val->add_option("--manifest", va.manifest)->required();
    cmd_val->add_option("--ground-truth", va.ground_truth);

    CLI11_PARSE(app, argc, argv);

    OutputSet outs{out_dir};
    try {
        int rc = 1;
        std::string name;
        if (cmd_mesh->parsed()) {
            rc = run_mesh_gen(mg, outs);
            name = "mesh-gen";
        } else if (cmd_feature->parsed()) {
            rc = run_feature(fe, outs);
            name = "feature";
        } else if (cmd_sim->parsed()) {
            rc = run_simulate(sim, outs);
            name = "simulate";
        } else if (cmd_track->parsed()) {
            rc = run_track(tr, outs);
            name = "track";
        } else if (cmd_desc->parsed()) {
            rc = run_describe(de, outs);
            name = "describe";
        } else if (cmd_an->parsed()) {
            rc = run_analyze(an, outs);
            name = "analyze";
        } else if (cmd_cmp->parsed()) {
            rc = run_compare(co, outs);
            name = "compare";
        } else if (cmd_val->parsed()) {
            rc = run_validate(va, outs);
            name = "validate";
        }
        if (rc == 0) outs.write_manifest(name, app.config_to_str(true, false));
        return rc;
    } catch (const UsageError& e) {
        outs.remove_partial();
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const Error& e) {
        outs.remove_partial();
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        outs.remove_partial();
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

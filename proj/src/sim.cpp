#include "insar/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

namespace insar::sim {

using nlohmann::json;

namespace {

bool inside(double x, double y, int w, int h) { return x >= 0 && y >= 0 && x <= w - 1 && y <= h - 1; }

bool in_region(const CoherenceRegion& r, double x, double y) {
    const double dx = (x - r.cx) / r.half_width;
    const double dy = (y - r.cy) / r.half_height;
    if (r.shape == RegionShape::Rectangle) return std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
    return dx * dx + dy * dy <= 1.0;
}

double segment_distance(const Road& r, double x, double y) {
    const double vx = r.x1 - r.x0;
    const double vy = r.y1 - r.y0;
    const double len2 = vx * vx + vy * vy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((x - r.x0) * vx + (y - r.y0) * vy) / len2, 0.0, 1.0);
    return std::hypot(x - (r.x0 + t * vx), y - (r.y0 + t * vy));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

void validate(const SceneSpec& s) {
    if (s.width <= 0 || s.height <= 0) throw ParameterError("scene dimensions must be positive");
    auto gamma_ok = [](double g) { return g >= 0.0 && g <= 1.0; };
    if (!gamma_ok(s.background_gamma)) throw ParameterError("background_gamma outside [0, 1]");
    for (const auto& b : s.bubbles) {
        if (!inside(b.cx, b.cy, s.width, s.height)) throw ParameterError("bubble center outside image");
        if (!(b.sigma > 0.0)) throw ParameterError("bubble sigma must be positive");
        if (!std::isfinite(b.amplitude)) throw ParameterError("bubble amplitude must be finite");
    }
    for (const auto& r : s.roads) {
        if (!inside(r.x0, r.y0, s.width, s.height) || !inside(r.x1, r.y1, s.width, s.height))
            throw ParameterError("road endpoint outside image");
        if (!(r.width > 0.0)) throw ParameterError("road width must be positive");
    }
    for (const auto& b : s.buildings) {
        if (b.w <= 0 || b.h <= 0 || b.x < 0 || b.y < 0 || b.x + b.w > s.width || b.y + b.h > s.height)
            throw ParameterError("building rectangle outside image");
    }
    for (const auto& c : s.coherence_regions) {
        if (!inside(c.cx, c.cy, s.width, s.height)) throw ParameterError("coherence region center outside image");
        if (!(c.half_width > 0.0 && c.half_height > 0.0))
            throw ParameterError("coherence region extent must be positive");
        if (!gamma_ok(c.gamma)) throw ParameterError("coherence region gamma outside [0, 1]");
    }
}

double wrap_phase(double phase) {
    double r = std::remainder(phase, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
    return r;
}

Scene generate_scene(const SceneSpec& spec) {
    validate(spec);
    const int w = spec.width;
    const int h = spec.height;
    Scene scene{ScalarRaster(w, h), ScalarRaster(w, h, static_cast<float>(spec.background_gamma))};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double phi = 0.0;
            for (const auto& b : spec.bubbles) {
                const double r2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
                phi += b.amplitude * std::exp(-r2 / (2.0 * b.sigma * b.sigma));
            }
            for (const auto& r : spec.roads)
                if (segment_distance(r, x, y) <= 0.5 * r.width) phi += r.phase_offset;
            for (const auto& b : spec.buildings)
                if (x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h) phi += b.phase_offset;
            scene.phase(x, y) = static_cast<float>(wrap_phase(phi));
            for (const auto& c : spec.coherence_regions)
                if (in_region(c, x, y)) scene.gamma_true(x, y) = static_cast<float>(c.gamma);
        }
    // float rounding can push a wrapped value just past +-pi.
    for (float& v : scene.phase.storage()) {
        if (v > static_cast<float>(std::numbers::pi)) v = static_cast<float>(std::numbers::pi);
        if (v <= -static_cast<float>(std::numbers::pi)) v = static_cast<float>(std::numbers::pi);
    }
    return scene;
}

ComplexRaster clean_interferogram(const ScalarRaster& phase) {
    ComplexRaster out(phase.width(), phase.height());
    for (std::size_t i = 0; i < phase.size(); ++i) {
        const double p = phase[i];
        out[i] = {static_cast<float>(std::cos(p)), static_cast<float>(std::sin(p))};
    }
    return out;
}

ComplexRaster synthesize_interferogram(const ScalarRaster& phase, const ScalarRaster& gamma_true,
                                       std::uint64_t seed) {
    if (!phase.same_shape(gamma_true)) throw ParameterError("phase and gamma rasters differ in size");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double noise_scale = 1.0 / std::numbers::sqrt2;
    ComplexRaster out(phase.width(), phase.height());
    for (std::size_t i = 0; i < phase.size(); ++i) {
        const double g = gamma_true[i];
        if (!(g >= 0.0 && g <= 1.0)) throw ParameterError("gamma_true outside [0, 1]");
        // Always draw both normals so the noise stream does not depend on gamma.
        const double nre = normal(rng) * noise_scale;
        const double nim = normal(rng) * noise_scale;
        const double weight = std::sqrt(1.0 - g * g);
        const double p = phase[i];
        out[i] = {static_cast<float>(g * std::cos(p) + weight * nre),
                  static_cast<float>(g * std::sin(p) + weight * nim)};
    }
    return out;
}

LabelField truth_mask(const ScalarRaster& gamma_true, double threshold) {
    LabelField out(gamma_true.width(), gamma_true.height());
    const auto t = static_cast<float>(threshold);
    for (std::size_t i = 0; i < gamma_true.size(); ++i) out[i] = gamma_true[i] >= t ? 1 : 0;
    return out;
}

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

SceneSpec random_scene(int width, int height, std::uint64_t seed, const SceneRanges& ranges) {
    if (width <= 0 || height <= 0) throw ParameterError("scene dimensions must be positive");
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto integer = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const double w = width - 1;
    const double h = height - 1;

    SceneSpec s;
    s.width = width;
    s.height = height;
    s.seed = seed;
    s.background_gamma = uniform(ranges.min_background_gamma, ranges.max_background_gamma);

    const int bubbles = integer(ranges.min_bubbles, ranges.max_bubbles);
    for (int i = 0; i < bubbles; ++i) {
        Bubble b;
        b.cx = uniform(0, w);
        b.cy = uniform(0, h);
        b.sigma = uniform(ranges.min_sigma, ranges.max_sigma);
        b.amplitude = uniform(ranges.min_amplitude, ranges.max_amplitude);
        s.bubbles.push_back(b);
    }
    const int roads = integer(ranges.min_roads, ranges.max_roads);
    for (int i = 0; i < roads; ++i) {
        Road r;
        r.x0 = uniform(0, w);
        r.y0 = uniform(0, h);
        r.x1 = uniform(0, w);
        r.y1 = uniform(0, h);
        r.width = uniform(ranges.min_road_width, ranges.max_road_width);
        r.phase_offset = uniform(-std::numbers::pi, std::numbers::pi);
        s.roads.push_back(r);
    }
    const int buildings = integer(ranges.min_buildings, ranges.max_buildings);
    for (int i = 0; i < buildings; ++i) {
        Building b;
        b.w = std::min(width, integer(ranges.min_building_size, ranges.max_building_size));
        b.h = std::min(height, integer(ranges.min_building_size, ranges.max_building_size));
        b.x = integer(0, width - b.w);
        b.y = integer(0, height - b.h);
        b.phase_offset = uniform(-std::numbers::pi, std::numbers::pi);
        s.buildings.push_back(b);
    }

    // Incoherent blobs until their union covers the drawn target fraction.
    const double target = uniform(ranges.min_incoherent_fraction, ranges.max_incoherent_fraction);
    const double size = std::min(width, height);
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(width) * height, 0);
    std::size_t covered_count = 0;
    constexpr int kMaxBlobs = 40;
    for (int i = 0; i < kMaxBlobs; ++i) {
        if (static_cast<double>(covered_count) >= target * static_cast<double>(covered.size())) break;
        CoherenceRegion r;
        r.shape = RegionShape::Blob;
        r.cx = uniform(0, w);
        r.cy = uniform(0, h);
        r.half_width = std::max(1.0, uniform(ranges.min_blob_radius, ranges.max_blob_radius) * size);
        r.half_height = std::max(1.0, uniform(ranges.min_blob_radius, ranges.max_blob_radius) * size);
        r.gamma = uniform(ranges.min_incoherent_gamma, ranges.max_incoherent_gamma);
        s.coherence_regions.push_back(r);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                auto& c = covered[static_cast<std::size_t>(y) * width + x];
                if (!c && in_region(r, x, y)) {
                    c = 1;
                    ++covered_count;
                }
            }
    }
    return s;
}

SimSample make_sample(const SceneSpec& spec) {
    Scene scene = generate_scene(spec);
    SimSample s;
    s.clean = clean_interferogram(scene.phase);
    s.noisy = synthesize_interferogram(scene.phase, scene.gamma_true, child_seed(spec.seed, 0xA5));
    s.truth_mask = truth_mask(scene.gamma_true);
    s.gamma_true = std::move(scene.gamma_true);
    s.scene = spec;
    return s;
}

std::vector<SimSample> generate_dataset(int n, int size, std::uint64_t seed, const SceneRanges& ranges) {
    if (n < 1) throw ParameterError("dataset needs at least one sample");
    if (size < 1) throw ParameterError("sample size must be positive");
    std::vector<SimSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(make_sample(random_scene(size, size, child_seed(seed, static_cast<std::uint64_t>(i)), ranges)));
    return out;
}

// --- sample files ------------------------------------------------------------

namespace {

json scene_to_json(const SceneSpec& s) {
    json j;
    j["width"] = s.width;
    j["height"] = s.height;
    j["seed"] = s.seed;
    j["background_gamma"] = s.background_gamma;
    j["bubbles"] = json::array();
    for (const auto& b : s.bubbles)
        j["bubbles"].push_back({{"cx", b.cx}, {"cy", b.cy}, {"sigma", b.sigma}, {"amplitude", b.amplitude}});
    j["roads"] = json::array();
    for (const auto& r : s.roads)
        j["roads"].push_back({{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1},
                              {"width", r.width}, {"phase_offset", r.phase_offset}});
    j["buildings"] = json::array();
    for (const auto& b : s.buildings)
        j["buildings"].push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"phase_offset", b.phase_offset}});
    j["coherence_regions"] = json::array();
    for (const auto& c : s.coherence_regions)
        j["coherence_regions"].push_back({{"shape", c.shape == RegionShape::Blob ? "blob" : "rectangle"},
                                          {"cx", c.cx},
                                          {"cy", c.cy},
                                          {"half_width", c.half_width},
                                          {"half_height", c.half_height},
                                          {"gamma", c.gamma}});
    return j;
}

SceneSpec scene_from_json(const json& j) {
    SceneSpec s;
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.background_gamma = j.at("background_gamma").get<double>();
    for (const auto& b : j.at("bubbles"))
        s.bubbles.push_back({b.at("cx"), b.at("cy"), b.at("sigma"), b.at("amplitude")});
    for (const auto& r : j.at("roads"))
        s.roads.push_back({r.at("x0"), r.at("y0"), r.at("x1"), r.at("y1"), r.at("width"), r.at("phase_offset")});
    for (const auto& b : j.at("buildings"))
        s.buildings.push_back({b.at("x"), b.at("y"), b.at("w"), b.at("h"), b.at("phase_offset")});
    for (const auto& c : j.at("coherence_regions")) {
        CoherenceRegion r;
        const std::string shape = c.at("shape");
        if (shape != "blob" && shape != "rectangle") throw FormatError("unknown region shape '" + shape + "'");
        r.shape = shape == "blob" ? RegionShape::Blob : RegionShape::Rectangle;
        r.cx = c.at("cx");
        r.cy = c.at("cy");
        r.half_width = c.at("half_width");
        r.half_height = c.at("half_height");
        r.gamma = c.at("gamma");
        s.coherence_regions.push_back(r);
    }
    return s;
}

}  // namespace

void write_sample(const std::filesystem::path& dir, const SimSample& sample) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    save_raster(dir / "clean.igrm", sample.clean);
    save_raster(dir / "noisy.igrm", sample.noisy);
    save_raster(dir / "gamma.rast", sample.gamma_true);
    save_raster(dir / "truth.rast", to_scalar(sample.truth_mask));

    json manifest;
    manifest["format"] = "insar-sim-sample";
    manifest["version"] = 1;
    manifest["truth_threshold"] = kTruthThreshold;
    manifest["files"] = {{"clean", "clean.igrm"}, {"noisy", "noisy.igrm"}, {"gamma_true", "gamma.rast"},
                         {"truth_mask", "truth.rast"}};
    manifest["scene"] = scene_to_json(sample.scene);
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + (dir / "manifest.json").string());
}

SimSample read_sample(const std::filesystem::path& dir) {
    SimSample s;
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
    try {
        const json manifest = json::parse(in);
        s.scene = scene_from_json(manifest.at("scene"));
    } catch (const json::exception& e) {
        throw FormatError((dir / "manifest.json").string() + ": " + e.what());
    }
    s.clean = load_complex_raster(dir / "clean.igrm");
    s.noisy = load_complex_raster(dir / "noisy.igrm");
    s.gamma_true = load_scalar_raster(dir / "gamma.rast");
    s.truth_mask = labels_from_scalar(load_scalar_raster(dir / "truth.rast"));
    if (!s.clean.same_shape(s.noisy) || !s.clean.same_shape(s.gamma_true) || !s.clean.same_shape(s.truth_mask))
        throw FormatError(dir.string() + ": sample rasters differ in size");
    return s;
}

std::vector<std::filesystem::path> list_sample_dirs(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> dirs;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(root, ec))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json"))
            dirs.push_back(entry.path());
    if (ec) throw IoError("cannot list " + root.string() + ": " + ec.message());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

}  // namespace insar::sim

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "insar/mrf.hpp"
#include "insar/raster.hpp"

namespace insar::sim {

/// Gaussian deformation bubble: amplitude * exp(-r^2 / (2 sigma^2)) radians.
struct Bubble {
    double cx = 0, cy = 0;
    double sigma = 1;
    double amplitude = 0;
};

/// Line segment of the given width; pixels within width/2 of the segment get
/// the phase offset.
struct Road {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double width = 1;
    double phase_offset = 0;
};

/// Axis-aligned rectangle [x, x + w) x [y, y + h) carrying a phase offset.
struct Building {
    int x = 0, y = 0, w = 1, h = 1;
    double phase_offset = 0;
};

enum class RegionShape { Rectangle, Blob };

/// Area of constant true coherence. Rectangle: |dx| <= half_width and
/// |dy| <= half_height around the center. Blob: ellipse with those radii.
struct CoherenceRegion {
    RegionShape shape = RegionShape::Blob;
    double cx = 0, cy = 0;
    double half_width = 1, half_height = 1;
    double gamma = 0;
};

struct SceneSpec {
    int width = 0;
    int height = 0;
    std::vector<Bubble> bubbles;
    std::vector<Road> roads;
    std::vector<Building> buildings;
    // Painted in order over background_gamma; later regions win.
    std::vector<CoherenceRegion> coherence_regions;
    double background_gamma = 1.0;
    std::uint64_t seed = 0;
};

/// Throws ParameterError on geometry outside the image or gammas outside [0,1].
void validate(const SceneSpec& spec);

struct Scene {
    ScalarRaster phase;       // wrapped to (-pi, pi]
    ScalarRaster gamma_true;  // in [0, 1]
};

Scene generate_scene(const SceneSpec& spec);

/// Wraps to (-pi, pi].
double wrap_phase(double phase);

/// z = gamma e^{j phase} + sqrt(1 - gamma^2) n with n circular complex
/// Gaussian of unit expected power.
ComplexRaster synthesize_interferogram(const ScalarRaster& phase, const ScalarRaster& gamma_true,
                                       std::uint64_t seed);

/// Unit-amplitude interferogram with the given phase.
ComplexRaster clean_interferogram(const ScalarRaster& phase);

inline constexpr double kTruthThreshold = 0.6;

struct SimSample {
    ComplexRaster clean;
    ComplexRaster noisy;
    ScalarRaster gamma_true;
    LabelField truth_mask;  // gamma_true >= 0.6
    SceneSpec scene;
};

LabelField truth_mask(const ScalarRaster& gamma_true, double threshold = kTruthThreshold);

/// Ranges used when randomizing scenes for a dataset.
struct SceneRanges {
    int min_bubbles = 3, max_bubbles = 10;
    double min_sigma = 10, max_sigma = 60;          // pixels
    double min_amplitude = 3.141592653589793;        // radians
    double max_amplitude = 6 * 3.141592653589793;
    int min_roads = 0, max_roads = 3;
    double min_road_width = 2, max_road_width = 6;
    int min_buildings = 0, max_buildings = 5;
    int min_building_size = 8, max_building_size = 32;
    double min_incoherent_fraction = 0.2, max_incoherent_fraction = 0.5;
    double min_blob_radius = 0.06, max_blob_radius = 0.2;  // fraction of image size
    double min_incoherent_gamma = 0.0, max_incoherent_gamma = 0.4;
    double min_background_gamma = 0.7, max_background_gamma = 0.95;
};

/// Derives a per-item seed; stable across platforms.
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index);

SceneSpec random_scene(int width, int height, std::uint64_t seed, const SceneRanges& ranges = {});

SimSample make_sample(const SceneSpec& spec);

std::vector<SimSample> generate_dataset(int n, int size, std::uint64_t seed,
                                        const SceneRanges& ranges = {});

/// Writes clean.igrm, noisy.igrm, gamma.rast, truth.rast and manifest.json.
void write_sample(const std::filesystem::path& dir, const SimSample& sample);
SimSample read_sample(const std::filesystem::path& dir);

/// Sample directories below `root`, sorted by name.
std::vector<std::filesystem::path> list_sample_dirs(const std::filesystem::path& root);

}  // namespace insar::sim

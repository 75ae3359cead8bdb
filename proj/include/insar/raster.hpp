#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "insar/error.hpp"

namespace insar {

using Complex = std::complex<float>;

/// Row-major 2D grid. Element (x, y) lives at data[y * width + x].
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}
    Grid(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != static_cast<std::size_t>(checked_area(width, height)))
            throw ShapeError("grid data length does not match width*height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    bool same_shape(const Grid& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }
    template <typename U>
    bool same_shape(const Grid<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid& a, const Grid& b) = default;

private:
    static long long checked_area(int width, int height) {
        if (width < 0 || height < 0) throw ShapeError("negative grid dimension");
        return static_cast<long long>(width) * height;
    }
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Interferogram samples; real and imaginary parts are the two CNN channels.
using ComplexRaster = Grid<Complex>;
/// Real-valued map: amplitude, phase, coherence, or {0,1} labels.
using ScalarRaster = Grid<float>;
/// Per-pixel flag (0/1) marking amplitude outliers.
using OutlierMask = Grid<std::uint8_t>;

using Raster = std::variant<ComplexRaster, ScalarRaster>;

// --- file codec ------------------------------------------------------------
//
// Layout (all little-endian):
//   magic  4 bytes  "IGRM" (complex) | "RAST" (scalar)
//   width  u32
//   height u32
//   payload width*height samples of f32, row-major; complex samples are
//           interleaved (re, im).

std::vector<std::uint8_t> encode_raster(const ComplexRaster& r);
std::vector<std::uint8_t> encode_raster(const ScalarRaster& r);
Raster decode_raster(std::span<const std::uint8_t> bytes);

ComplexRaster decode_complex_raster(std::span<const std::uint8_t> bytes);
ScalarRaster decode_scalar_raster(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

ComplexRaster load_complex_raster(const std::filesystem::path& path);
ScalarRaster load_scalar_raster(const std::filesystem::path& path);
void save_raster(const std::filesystem::path& path, const ComplexRaster& r);
void save_raster(const std::filesystem::path& path, const ScalarRaster& r);

// --- preprocessing ---------------------------------------------------------

struct OutlierRule {
    double z_cutoff = 3.5;
};

struct Preprocessed {
    /// Channels shifted into [0, 2]: (re/ceiling + 1, im/ceiling + 1).
    ComplexRaster shifted;
    OutlierMask outliers;
    /// Largest inlier amplitude; the normalization divisor.
    double ceiling = 0.0;
};

/// Flags high-amplitude outliers by modified z-score, clamps them to the
/// largest inlier amplitude (phase kept), scales by that ceiling and shifts
/// both channels by +1.
Preprocessed saturate_and_normalize(const ComplexRaster& z, OutlierRule rule = {});

/// Modified z-score outlier flags over a list of amplitudes. MAD-based; falls
/// back to the mean absolute deviation (about the median) when MAD is zero.
std::vector<std::uint8_t> detect_amplitude_outliers(std::span<const double> amplitudes,
                                                    OutlierRule rule = {});

/// Inverse of the shift/scale part of saturate_and_normalize.
ComplexRaster unshift(const ComplexRaster& shifted, double ceiling);

ScalarRaster amplitude(const ComplexRaster& z);
ScalarRaster phase(const ComplexRaster& z);

// --- visualization ---------------------------------------------------------

struct Rgb {
    std::uint8_t r, g, b;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Hue ramp from blue (-pi) through green (0) to red (+pi).
Rgb phase_color(double phase);

/// Writes an 8-bit RGB PNG of the wrapped phase. Throws IoError.
void export_phase_png(const ComplexRaster& z, const std::filesystem::path& path);

}  // namespace insar

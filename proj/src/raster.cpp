#include "insar/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace insar {

namespace {

constexpr std::size_t kHeaderBytes = 12;
constexpr char kComplexMagic[4] = {'I', 'G', 'R', 'M'};
constexpr char kScalarMagic[4] = {'R', 'A', 'S', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    put_u32(out, std::bit_cast<std::uint32_t>(f));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
    return v;
}

float get_f32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return std::bit_cast<float>(get_u32(bytes, offset));
}

void put_header(std::vector<std::uint8_t>& out, const char (&magic)[4], int w, int h) {
    out.insert(out.end(), magic, magic + 4);
    put_u32(out, static_cast<std::uint32_t>(w));
    put_u32(out, static_cast<std::uint32_t>(h));
}

struct Header {
    bool complex;
    int width;
    int height;
};

Header parse_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes)
        throw TruncationError("raster header needs 12 bytes, got " + std::to_string(bytes.size()));
    Header h{};
    if (std::memcmp(bytes.data(), kComplexMagic, 4) == 0)
        h.complex = true;
    else if (std::memcmp(bytes.data(), kScalarMagic, 4) == 0)
        h.complex = false;
    else
        throw FormatError("unknown raster magic");
    const std::uint32_t w = get_u32(bytes, 4);
    const std::uint32_t ht = get_u32(bytes, 8);
    if (w > 1u << 20 || ht > 1u << 20) throw FormatError("raster dimensions out of range");
    h.width = static_cast<int>(w);
    h.height = static_cast<int>(ht);

    const std::size_t samples = static_cast<std::size_t>(w) * ht;
    const std::size_t expected = kHeaderBytes + samples * (h.complex ? 8 : 4);
    if (bytes.size() != expected)
        throw TruncationError("raster payload length " + std::to_string(bytes.size() - kHeaderBytes) +
                              " does not match header (" +
                              std::to_string(expected - kHeaderBytes) + " bytes)");
    return h;
}

}  // namespace

std::vector<std::uint8_t> encode_raster(const ComplexRaster& r) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + r.size() * 8);
    put_header(out, kComplexMagic, r.width(), r.height());
    for (const Complex& c : r.values()) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw DataError("refusing to encode non-finite complex sample");
        put_f32(out, c.real());
        put_f32(out, c.imag());
    }
    return out;
}

std::vector<std::uint8_t> encode_raster(const ScalarRaster& r) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + r.size() * 4);
    put_header(out, kScalarMagic, r.width(), r.height());
    for (float v : r.values()) {
        if (!std::isfinite(v)) throw DataError("refusing to encode non-finite scalar sample");
        put_f32(out, v);
    }
    return out;
}

Raster decode_raster(std::span<const std::uint8_t> bytes) {
    const Header h = parse_header(bytes);
    const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
    if (h.complex) {
        std::vector<Complex> data(n);
        for (std::size_t i = 0; i < n; ++i) {
            const float re = get_f32(bytes, kHeaderBytes + 8 * i);
            const float im = get_f32(bytes, kHeaderBytes + 8 * i + 4);
            if (!std::isfinite(re) || !std::isfinite(im))
                throw DataError("non-finite sample at index " + std::to_string(i));
            data[i] = {re, im};
        }
        return ComplexRaster(h.width, h.height, std::move(data));
    }
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = get_f32(bytes, kHeaderBytes + 4 * i);
        if (!std::isfinite(data[i]))
            throw DataError("non-finite sample at index " + std::to_string(i));
    }
    return ScalarRaster(h.width, h.height, std::move(data));
}

ComplexRaster decode_complex_raster(std::span<const std::uint8_t> bytes) {
    Raster r = decode_raster(bytes);
    if (auto* c = std::get_if<ComplexRaster>(&r)) return std::move(*c);
    throw FormatError("expected complex raster (IGRM), found scalar raster (RAST)");
}

ScalarRaster decode_scalar_raster(std::span<const std::uint8_t> bytes) {
    Raster r = decode_raster(bytes);
    if (auto* s = std::get_if<ScalarRaster>(&r)) return std::move(*s);
    throw FormatError("expected scalar raster (RAST), found complex raster (IGRM)");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

ComplexRaster load_complex_raster(const std::filesystem::path& path) {
    try {
        return decode_complex_raster(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

ScalarRaster load_scalar_raster(const std::filesystem::path& path) {
    try {
        return decode_scalar_raster(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_raster(const std::filesystem::path& path, const ComplexRaster& r) {
    write_file(path, encode_raster(r));
}

void save_raster(const std::filesystem::path& path, const ScalarRaster& r) {
    write_file(path, encode_raster(r));
}

// --- preprocessing ---------------------------------------------------------

namespace {

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace

std::vector<std::uint8_t> detect_amplitude_outliers(std::span<const double> amplitudes,
                                                    OutlierRule rule) {
    std::vector<std::uint8_t> flags(amplitudes.size(), 0);
    if (amplitudes.empty()) return flags;

    const double med = median_of({amplitudes.begin(), amplitudes.end()});
    std::vector<double> dev(amplitudes.size());
    std::transform(amplitudes.begin(), amplitudes.end(), dev.begin(),
                   [med](double a) { return std::abs(a - med); });
    const double mad = median_of(dev);

    // Iglewicz-Hoaglin: M = 0.6745 (a - med) / MAD; with MAD = 0 use
    // M = (a - med) / (1.253314 * MeanAD), i.e. 0.7979 (a - med) / MeanAD.
    double scale = 0.0;
    double spread = 0.0;
    if (mad > 0.0) {
        scale = 0.6745;
        spread = mad;
    } else {
        const double mean_ad =
            std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(dev.size());
        if (mean_ad == 0.0) return flags;
        scale = 0.7979;
        spread = mean_ad;
    }
    for (std::size_t i = 0; i < amplitudes.size(); ++i)
        flags[i] = scale * (amplitudes[i] - med) / spread > rule.z_cutoff ? 1 : 0;
    return flags;
}

Preprocessed saturate_and_normalize(const ComplexRaster& z, OutlierRule rule) {
    if (z.empty()) throw DegenerateInputError("cannot normalize an empty raster");

    std::vector<double> amps(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const Complex c = z[i];
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw DataError("non-finite sample at index " + std::to_string(i));
        amps[i] = std::hypot(static_cast<double>(c.real()), static_cast<double>(c.imag()));
    }

    Preprocessed out;
    out.outliers = OutlierMask(z.width(), z.height(), detect_amplitude_outliers(amps, rule));

    double ceiling = 0.0;
    for (std::size_t i = 0; i < amps.size(); ++i)
        if (!out.outliers[i]) ceiling = std::max(ceiling, amps[i]);
    if (ceiling <= 0.0)
        throw DegenerateInputError("all inlier amplitudes are zero; normalization ceiling would be 0");
    out.ceiling = ceiling;

    out.shifted = ComplexRaster(z.width(), z.height());
    for (std::size_t i = 0; i < z.size(); ++i) {
        double re = z[i].real();
        double im = z[i].imag();
        if (out.outliers[i]) {
            const double k = ceiling / amps[i];
            re *= k;
            im *= k;
        }
        const double nre = std::clamp(re / ceiling, -1.0, 1.0);
        const double nim = std::clamp(im / ceiling, -1.0, 1.0);
        out.shifted[i] = {static_cast<float>(nre + 1.0), static_cast<float>(nim + 1.0)};
    }
    return out;
}

ComplexRaster unshift(const ComplexRaster& shifted, double ceiling) {
    ComplexRaster out(shifted.width(), shifted.height());
    for (std::size_t i = 0; i < shifted.size(); ++i) {
        const double re = (static_cast<double>(shifted[i].real()) - 1.0) * ceiling;
        const double im = (static_cast<double>(shifted[i].imag()) - 1.0) * ceiling;
        out[i] = {static_cast<float>(re), static_cast<float>(im)};
    }
    return out;
}

ScalarRaster amplitude(const ComplexRaster& z) {
    ScalarRaster out(z.width(), z.height());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::abs(z[i]);
    return out;
}

ScalarRaster phase(const ComplexRaster& z) {
    ScalarRaster out(z.width(), z.height());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::arg(z[i]);
    return out;
}

}  // namespace insar

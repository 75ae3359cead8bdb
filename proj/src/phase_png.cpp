#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <numbers>
#include <vector>

#include "insar/raster.hpp"

namespace insar {

Rgb phase_color(double phase) {
    // Hue 240 deg (blue) at -pi down to 0 deg (red) at +pi, full saturation
    // and value. Phase 0 lands on hue 120 (pure green).
    const double t = std::clamp((phase + std::numbers::pi) / (2.0 * std::numbers::pi), 0.0, 1.0);
    const double hue = 240.0 * (1.0 - t);
    const double sector = hue / 60.0;
    const int i = std::min(static_cast<int>(sector), 5);
    const double f = sector - i;
    const auto up = static_cast<std::uint8_t>(std::lround(255.0 * f));
    const auto down = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - f)));
    switch (i) {
        case 0: return {255, up, 0};
        case 1: return {down, 255, 0};
        case 2: return {0, 255, up};
        case 3: return {0, down, 255};
        default: return {up, 0, 255};
    }
}

namespace {

struct PngWriter {
    std::FILE* file = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (file) std::fclose(file);
    }
};

}  // namespace

void export_phase_png(const ComplexRaster& z, const std::filesystem::path& path) {
    if (z.empty()) throw ParameterError("cannot export an empty raster");

    std::vector<png_byte> pixels(z.size() * 3);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const Rgb c = phase_color(std::arg(z[i]));
        pixels[3 * i] = c.r;
        pixels[3 * i + 1] = c.g;
        pixels[3 * i + 2] = c.b;
    }

    PngWriter w;
    w.file = std::fopen(path.c_str(), "wb");
    if (!w.file) throw IoError("cannot open for writing: " + path.string());
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw IoError("png_create_write_struct failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw IoError("png_create_info_struct failed");

    std::vector<png_bytep> rows(static_cast<std::size_t>(z.height()));
    for (int y = 0; y < z.height(); ++y)
        rows[static_cast<std::size_t>(y)] = pixels.data() + static_cast<std::size_t>(y) * z.width() * 3;

    if (setjmp(png_jmpbuf(w.png))) throw IoError("libpng failed while writing " + path.string());
    png_init_io(w.png, w.file);
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(z.width()),
                 static_cast<png_uint_32>(z.height()), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);

    if (std::fflush(w.file) != 0) throw IoError("write failed: " + path.string());
}

}  // namespace insar

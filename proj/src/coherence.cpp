#include "insar/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace insar {

namespace {

void check_window(int window, int width, int height) {
    if (window < 1 || window % 2 == 0)
        throw ParameterError("window must be odd and >= 1, got " + std::to_string(window));
    if (window > std::min(width, height))
        throw ParameterError("window " + std::to_string(window) + " exceeds raster size " +
                             std::to_string(width) + "x" + std::to_string(height));
}

// Separable edge-clamped box sum. Summation order is fixed: horizontal pass
// left to right, then vertical pass top to bottom.
std::vector<double> box_sum(const std::vector<double>& src, int width, int height, int window) {
    const int half = window / 2;
    std::vector<double> horiz(src.size());
    for (int y = 0; y < height; ++y) {
        const double* row = src.data() + static_cast<std::size_t>(y) * width;
        double* out = horiz.data() + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            double s = 0.0;
            for (int k = -half; k <= half; ++k) s += row[std::clamp(x + k, 0, width - 1)];
            out[x] = s;
        }
    }
    std::vector<double> result(src.size());
    for (int y = 0; y < height; ++y) {
        double* out = result.data() + static_cast<std::size_t>(y) * width;
        std::fill(out, out + width, 0.0);
        for (int k = -half; k <= half; ++k) {
            const double* row =
                horiz.data() + static_cast<std::size_t>(std::clamp(y + k, 0, height - 1)) * width;
            for (int x = 0; x < width; ++x) out[x] += row[x];
        }
    }
    return result;
}

}  // namespace

ScalarRaster boxcar_mean(const ScalarRaster& r, int window) {
    check_window(window, r.width(), r.height());
    std::vector<double> src(r.values().begin(), r.values().end());
    const std::vector<double> sums = box_sum(src, r.width(), r.height(), window);
    const double area = static_cast<double>(window) * window;
    ScalarRaster out(r.width(), r.height());
    for (std::size_t i = 0; i < sums.size(); ++i) out[i] = static_cast<float>(sums[i] / area);
    return out;
}

CoherenceMap estimate_coherence(const ComplexRaster& u1, const ComplexRaster& u2, int window,
                                const ScalarRaster& compensation_phase) {
    if (!u1.same_shape(u2))
        throw ParameterError("coherence operands differ in size: " + std::to_string(u1.width()) +
                             "x" + std::to_string(u1.height()) + " vs " +
                             std::to_string(u2.width()) + "x" + std::to_string(u2.height()));
    if (!compensation_phase.empty() && !compensation_phase.same_shape(u1))
        throw ParameterError("compensation phase raster differs in size");
    check_window(window, u1.width(), u1.height());

    const std::size_t n = u1.size();
    std::vector<double> cross_re(n), cross_im(n), power1(n), power2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> a(u1[i].real(), u1[i].imag());
        const std::complex<double> b(u2[i].real(), u2[i].imag());
        std::complex<double> c = a * std::conj(b);
        if (!compensation_phase.empty())
            c *= std::polar(1.0, -static_cast<double>(compensation_phase[i]));
        cross_re[i] = c.real();
        cross_im[i] = c.imag();
        power1[i] = std::norm(a);
        power2[i] = std::norm(b);
    }

    const int w = u1.width();
    const int h = u1.height();
    const auto sum_re = box_sum(cross_re, w, h, window);
    const auto sum_im = box_sum(cross_im, w, h, window);
    const auto sum_p1 = box_sum(power1, w, h, window);
    const auto sum_p2 = box_sum(power2, w, h, window);

    CoherenceMap out{ScalarRaster(w, h), window};
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = std::sqrt(sum_p1[i]) * std::sqrt(sum_p2[i]);
        double gamma = 0.0;
        if (sum_p1[i] > 0.0 && sum_p2[i] > 0.0 && denom > 0.0)
            gamma = std::hypot(sum_re[i], sum_im[i]) / denom;
        out.values[i] = static_cast<float>(std::clamp(gamma, 0.0, 1.0));
    }
    return out;
}

CoherenceMap raw_coherence_map(const ComplexRaster& noisy, const ComplexRaster& filtered) {
    return estimate_coherence(noisy, filtered, kRawCoherenceWindow);
}

}  // namespace insar

#pragma once

#include "insar/raster.hpp"

namespace insar {

/// Magnitude of the windowed complex correlation coefficient per pixel.
struct CoherenceMap {
    ScalarRaster values;  // each in [0, 1]
    int window = 0;
};

inline constexpr int kRawCoherenceWindow = 7;

/// Moving average over a window x window neighborhood. Border pixels use
/// edge-replicated neighbors so the output has the input's size.
ScalarRaster boxcar_mean(const ScalarRaster& r, int window);

/// |sum u1 conj(u2)| / sqrt(sum |u1|^2 * sum |u2|^2) over edge-clamped
/// windows. A window with zero energy in either operand yields 0.
///
/// The phase-compensation term of the classical estimator is taken as zero:
/// callers compensate by correlating against a filtered copy of the same
/// interferogram. `compensation_phase`, when non-empty, is subtracted from
/// the per-pixel cross product before summation.
CoherenceMap estimate_coherence(const ComplexRaster& u1, const ComplexRaster& u2, int window,
                                const ScalarRaster& compensation_phase = {});

/// Coherence between a noisy interferogram and its filtered version over
/// 7x7 windows.
CoherenceMap raw_coherence_map(const ComplexRaster& noisy, const ComplexRaster& filtered);

}  // namespace insar

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "beam_geometry.hpp"

namespace beamra {

// Beams are produced by a uniform linear array whose beamwidth is the
// half-power beamwidth. The electrical angle is taken as
//     psi = 2*pi * (d/lambda) * sin(theta - phi)
// with zero progressive phase, which places the pattern maximum exactly
// at the nominal direction phi. The half-power constant 1.391 is the
// solution of sin(x)/x = 1/sqrt(2).

/// Element spacing as a fraction of the wavelength, plus the element
/// count of one resolved array.
struct ArrayConfig {
    double d_over_lambda = 0.25;
    int n_elements = 2;
};

/// Smallest element count whose half-power beamwidth does not exceed
/// `theta`. Valid for theta in (0, pi].
inline int elements_for_beamwidth(double theta, double d_over_lambda) {
    using std::numbers::pi;
    if (!(theta > 0.0 && theta <= pi)) {
        throw std::invalid_argument("elements_for_beamwidth: beamwidth must be in (0, pi]");
    }
    if (!(d_over_lambda > 0.0)) {
        throw std::invalid_argument("elements_for_beamwidth: spacing ratio must be positive");
    }
    const double n = std::ceil(1.391 / (pi * d_over_lambda * std::cos(0.5 * pi - 0.5 * theta)));
    if (!(n <= static_cast<double>(std::numeric_limits<int>::max()))) {
        throw std::domain_error("elements_for_beamwidth: beamwidth too narrow, element count overflows");
    }
    // one element has no defined beamwidth
    return std::max(2, static_cast<int>(n));
}

/// Half-power beamwidth of an `n`-element array, radians.
inline double hpbw_of_elements(int n, double d_over_lambda) {
    using std::numbers::pi;
    if (n < 2) throw std::invalid_argument("hpbw_of_elements: need at least two elements");
    if (!(d_over_lambda > 0.0)) {
        throw std::invalid_argument("hpbw_of_elements: spacing ratio must be positive");
    }
    const double arg = 1.391 / (pi * n * d_over_lambda);
    if (arg > 1.0) {
        throw std::domain_error("hpbw_of_elements: array too small for a defined half-power width");
    }
    return 2.0 * (0.5 * pi - std::acos(arg));
}

/// Normalized array-factor amplitude of `beam` in direction `theta`,
/// in [0, 1]. The element count is derived from the beam's width; the
/// psi -> 0 removable singularity evaluates to 1.
inline double array_factor_gain(const Beam& beam, double theta, double d_over_lambda) {
    const int n = elements_for_beamwidth(beam.theta, d_over_lambda);
    const double psi = two_pi * d_over_lambda * std::sin(theta - beam.phi);
    const double denom = std::sin(0.5 * psi);
    if (std::fabs(denom) < 1e-12) return 1.0;
    const double amp = std::fabs(std::sin(0.5 * n * psi) / (n * denom));
    return amp > 1.0 ? 1.0 : amp;
}

/// Amplitude as a power gain in dB; zero amplitude maps to -infinity.
inline double amplitude_to_db(double amplitude) {
    if (amplitude <= 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(amplitude);
}

}  // namespace beamra

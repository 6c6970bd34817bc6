#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace beamra {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Tolerance for the beam-set constraint checks, radians.
inline constexpr double angle_tolerance = 1e-9;

/// Wraps an angle into [0, 2*pi).
inline double normalize_angle(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("normalize_angle: non-finite input");
    double r = std::fmod(x, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;  // fmod rounding can land exactly on 2*pi
    return r;
}

/// Circular distance between two angles, in [0, pi].
inline double angle_distance(double a, double b) {
    const double d = normalize_angle(a - b);
    return d > std::numbers::pi ? two_pi - d : d;
}

/// One beam: maximum-gain direction `phi` in [0, 2*pi) and width `theta`
/// in (0, 2*pi). The angular range is the half-open interval
/// [phi - theta/2, phi + theta/2) taken modulo 2*pi; the lower bound is
/// inclusive so that shared boundaries belong to exactly one beam.
struct Beam {
    double phi = 0.0;
    double theta = 0.0;

    double lower() const { return normalize_angle(phi - 0.5 * theta); }
    double upper() const { return normalize_angle(phi + 0.5 * theta); }

    bool contains(double theta0) const {
        const double lo = lower();
        const double hi = upper();
        if (lo > hi) return theta0 >= lo || theta0 < hi;  // range wraps through 0
        return theta0 >= lo && theta0 < hi;
    }
};

/// An ordered set of beams intended to tile the full circle.
struct BeamSet {
    std::vector<Beam> beams;

    std::size_t size() const { return beams.size(); }
};

struct BeamSetValidation {
    bool ok = true;
    std::string constraint;  // "C1", "C2" or "C3" when invalid
    int index = -1;          // offending beam for C2/C3
    std::string message;
};

/// Checks the coverage constraints:
///   C1  widths sum to 2*pi,
///   C2  each successor direction sits half its own width plus half the
///       predecessor's width further around the circle (cyclically),
///   C3  every direction lies in [0, 2*pi) and every width in (0, 2*pi).
/// All comparisons use `angle_tolerance`.
inline BeamSetValidation validate_beam_set(const BeamSet& bs) {
    BeamSetValidation v;
    const std::size_t n = bs.beams.size();
    if (n == 0) {
        return {false, "C1", -1, "beam set is empty"};
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Beam& b = bs.beams[i];
        if (!std::isfinite(b.phi) || !std::isfinite(b.theta) || b.phi < 0.0 || b.phi >= two_pi ||
            b.theta <= 0.0 || b.theta >= two_pi) {
            return {false, "C3", static_cast<int>(i),
                    "beam " + std::to_string(i) + ": direction must be in [0, 2pi), width in (0, 2pi)"};
        }
    }
    double width_sum = 0.0;
    for (const Beam& b : bs.beams) width_sum += b.theta;
    if (std::fabs(width_sum - two_pi) > angle_tolerance) {
        return {false, "C1", -1,
                "beam widths sum to " + std::to_string(width_sum) + ", expected 2pi"};
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const double expected = normalize_angle(bs.beams[i].phi + 0.5 * (bs.beams[j].theta + bs.beams[i].theta));
        if (angle_distance(bs.beams[j].phi, expected) > angle_tolerance) {
            return {false, "C2", static_cast<int>(j),
                    "beam " + std::to_string(j) + ": direction " + std::to_string(bs.beams[j].phi) +
                        " does not adjoin beam " + std::to_string(i)};
        }
    }
    return v;
}

/// Index of the beam whose angular range contains `theta0`, for a valid
/// (tiling) beam set. `theta0` must be in [0, 2*pi).
///
/// Ownership is decided against one consistent set of boundaries, the
/// beams' lower bounds: the serving beam is the one whose lower bound
/// most recently precedes theta0 going counterclockwise. For a valid set
/// this is exactly the half-open-interval rule; adjacent upper/lower
/// bounds rounded one ulp apart cannot produce a gap or a double match.
inline int serving_beam(const BeamSet& bs, double theta0) {
    const int n = static_cast<int>(bs.beams.size());
    int best = 0;
    double best_dist = two_pi;
    for (int i = 0; i < n; ++i) {
        const double d = normalize_angle(theta0 - bs.beams[i].lower());
        if (d < best_dist) {
            best_dist = d;
            best = i;
        }
    }
    return best;
}

/// Sector index (0-based) of an angle for `n_sectors` equal sectors.
/// Sector j is centered at j * 2*pi/n_sectors and spans half a width to
/// each side; sector 0 wraps through zero. Lower bounds are inclusive.
inline int sector_of(double theta0, int n_sectors) {
    if (n_sectors < 1) throw std::invalid_argument("sector_of: need at least one sector");
    const double width = two_pi / n_sectors;
    const int j = static_cast<int>(std::floor(normalize_angle(theta0 + 0.5 * width) / width));
    return j >= n_sectors ? 0 : j;  // guard the wrap seam against rounding
}

/// Returns a copy of `bs` with every beam direction advanced by `delta`
/// (counterclockwise for positive delta); widths are unchanged.
inline BeamSet rotate_action(const BeamSet& bs, double delta) {
    BeamSet out = bs;
    for (Beam& b : out.beams) b.phi = normalize_angle(b.phi + delta);
    return out;
}

/// A finite menu of beam layouts the scheduler can pick from.
struct ActionSpace {
    std::vector<BeamSet> actions;

    std::size_t size() const { return actions.size(); }
};

/// Validates every action in the space; returns the first failure with
/// the action index baked into the message.
inline BeamSetValidation validate_action_space(const ActionSpace& space) {
    if (space.actions.empty()) return {false, "C1", -1, "action space is empty"};
    for (std::size_t a = 0; a < space.actions.size(); ++a) {
        BeamSetValidation v = validate_beam_set(space.actions[a]);
        if (!v.ok) {
            v.message = "action " + std::to_string(a) + ": " + v.message;
            return v;
        }
    }
    return {};
}

/// Default action space: six beams, four narrow (pi/6) and two wide
/// (2*pi/3), in three layouts. Layouts 2 and 3 are layout 1 rotated
/// counterclockwise by pi/3 and 2*pi/3.
inline ActionSpace builtin_action_space() {
    using std::numbers::pi;
    ActionSpace space;
    space.actions.push_back(BeamSet{{
        {pi / 12.0, pi / 6.0},
        {pi / 2.0, 2.0 * pi / 3.0},
        {11.0 * pi / 12.0, pi / 6.0},
        {13.0 * pi / 12.0, pi / 6.0},
        {3.0 * pi / 2.0, 2.0 * pi / 3.0},
        {23.0 * pi / 12.0, pi / 6.0},
    }});
    space.actions.push_back(BeamSet{{
        {5.0 * pi / 12.0, pi / 6.0},
        {5.0 * pi / 6.0, 2.0 * pi / 3.0},
        {5.0 * pi / 4.0, pi / 6.0},
        {17.0 * pi / 12.0, pi / 6.0},
        {11.0 * pi / 6.0, 2.0 * pi / 3.0},
        {pi / 4.0, pi / 6.0},
    }});
    space.actions.push_back(BeamSet{{
        {3.0 * pi / 4.0, pi / 6.0},
        {7.0 * pi / 6.0, 2.0 * pi / 3.0},
        {19.0 * pi / 12.0, pi / 6.0},
        {7.0 * pi / 4.0, pi / 6.0},
        {normalize_angle(13.0 * pi / 6.0), 2.0 * pi / 3.0},
        {7.0 * pi / 12.0, pi / 6.0},
    }});
    return space;
}

}  // namespace beamra

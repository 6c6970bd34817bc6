#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "antenna.hpp"
#include "beam_geometry.hpp"

namespace beamra {

/// Sentinel for "no power at all" (empty interference sum, zero beam gain).
inline constexpr double neg_inf_dbm = -std::numeric_limits<double>::infinity();

/// Link budget parameters. Distances are kilometers, powers dBm,
/// gains dBi, the rest dB.
struct LinkParams {
    double tx_power_dbm = 23.0;
    double tx_gain_dbi = 0.0;
    double rx_gain_dbi = 18.0;
    double shadow_sigma_db = 8.0;
    double decode_threshold_db = -110.0;
    double pl_intercept_db = 120.9;
    double pl_slope_db = 37.6;  // per decade of distance
};

/// Log-distance path loss in dB. Distance must be positive; callers place
/// devices no closer than a small floor so this never sees zero.
inline double path_loss_db(const LinkParams& p, double d_km) {
    if (!(d_km > 0.0)) throw std::domain_error("path_loss_db: distance must be positive");
    return p.pl_intercept_db + p.pl_slope_db * std::log10(d_km);
}

/// Received power of one transmission through a beam with the given
/// amplitude gain. Zero amplitude yields the -infinity sentinel.
inline double received_power_dbm(const LinkParams& p, double amplitude, double d_km, double chi_db) {
    if (!(amplitude > 0.0)) return neg_inf_dbm;
    return p.tx_power_dbm + p.tx_gain_dbi + p.rx_gain_dbi + 20.0 * std::log10(amplitude) -
           path_loss_db(p, d_km) + chi_db;
}

/// Received power of a device at polar angle `theta`, distance `d_km`,
/// shadowing `chi_db`, seen through `beam`.
inline double received_power_dbm(const LinkParams& p, const Beam& beam, double d_over_lambda,
                                 double theta, double d_km, double chi_db) {
    return received_power_dbm(p, array_factor_gain(beam, theta, d_over_lambda), d_km, chi_db);
}

/// Aggregate power of interfering transmissions: linear sum converted
/// back to dBm. An empty list (or all sentinels) yields -infinity.
inline double interference_power_dbm(std::span<const double> powers_dbm) {
    double sum_mw = 0.0;
    for (double p : powers_dbm) sum_mw += std::pow(10.0, p / 10.0);  // -inf contributes 0
    if (!(sum_mw > 0.0)) return neg_inf_dbm;
    return 10.0 * std::log10(sum_mw);
}

/// Decode rule: the wanted signal must exceed the aggregate interference
/// by more than `gamma_db`. With no interference (-infinity sentinel) the
/// margin is infinite and the message always decodes.
inline bool decode(double r_dbm, double i_dbm, double gamma_db) {
    return r_dbm - i_dbm > gamma_db;
}

}  // namespace beamra

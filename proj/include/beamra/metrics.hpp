#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace beamra {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

/// Exponential moving average, y_0 = x_0, y_k = w*y_{k-1} + (1-w)*x_k.
inline std::vector<double> ema(const std::vector<double>& xs, double weight) {
    if (xs.empty()) throw std::invalid_argument("ema: empty series");
    if (!(weight >= 0.0 && weight < 1.0)) throw std::invalid_argument("ema: weight must be in [0, 1)");
    std::vector<double> ys(xs.size());
    ys[0] = xs[0];
    for (std::size_t k = 1; k < xs.size(); ++k) {
        ys[k] = weight * ys[k - 1] + (1.0 - weight) * xs[k];
    }
    return ys;
}

/// Mean of all action values recorded over an episode (every slot, every
/// action weighted equally).
inline double avg_action_value(const std::vector<std::vector<double>>& episode_q_outputs) {
    if (episode_q_outputs.empty()) throw std::invalid_argument("avg_action_value: no slots");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& slot : episode_q_outputs) {
        for (double q : slot) sum += q;
        count += slot.size();
    }
    return sum / static_cast<double>(count);
}

/// Empirical CDF over integer slot delays: (delay, fraction of devices
/// with delay <= that value), one point per distinct observed delay.
inline std::vector<std::pair<int, double>> delay_cdf(const std::vector<int>& delays) {
    if (delays.empty()) throw std::invalid_argument("delay_cdf: no delays");
    std::map<int, std::size_t> hist;
    for (int d : delays) hist[d] += 1;
    std::vector<std::pair<int, double>> cdf;
    cdf.reserve(hist.size());
    std::size_t cum = 0;
    for (const auto& [d, c] : hist) {
        cum += c;
        cdf.emplace_back(d, static_cast<double>(cum) / static_cast<double>(delays.size()));
    }
    return cdf;
}

inline void write_curve_csv(const std::string& path, const std::string& value_name,
                            const std::vector<double>& series, double ema_weight) {
    const std::vector<double> smooth = ema(series, ema_weight);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "episode," << value_name << "," << value_name << "_ema\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        out << (k + 1) << "," << format_double(series[k]) << "," << format_double(smooth[k]) << "\n";
    }
}

inline void write_cdf_csv(const std::string& path, const std::vector<std::pair<int, double>>& cdf) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "delay_slots,fraction\n";
    for (const auto& [d, f] : cdf) out << d << "," << format_double(f) << "\n";
}

/// One row of the scheme comparison: mean delays per scheme at one load
/// point. Both gain conventions are emitted: the delay ratio
/// ddqn/static and the relative reduction (static-ddqn)/static.
struct ComparisonRow {
    double lambda = 0.0;
    double rho = 0.0;
    double static_mean = 0.0;
    double random_mean = 0.0;
    double ddqn_mean = 0.0;
};

inline void write_comparison_csv(const std::string& path, const std::vector<ComparisonRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "lambda,rho,static_be_mean_slots,random_bu_mean_slots,ddqn_bu_mean_slots,"
           "ddqn_over_static_ratio_pct,ddqn_reduction_vs_static_pct\n";
    for (const ComparisonRow& r : rows) {
        const double ratio = 100.0 * r.ddqn_mean / r.static_mean;
        const double reduction = 100.0 * (r.static_mean - r.ddqn_mean) / r.static_mean;
        out << format_double(r.lambda) << "," << format_double(r.rho) << ","
            << format_double(r.static_mean) << "," << format_double(r.random_mean) << ","
            << format_double(r.ddqn_mean) << "," << format_double(ratio) << ","
            << format_double(reduction) << "\n";
    }
}

}  // namespace beamra

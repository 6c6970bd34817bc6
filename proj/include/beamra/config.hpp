#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "beam_geometry.hpp"
#include "rl.hpp"
#include "rng.hpp"
#include "sim.hpp"

namespace beamra {

using json = nlohmann::json;

/// Everything a run needs: simulation scenario, link budget, array
/// geometry, action source, learner hyperparameters and the seed.
/// Defaults reproduce the reference parameter set.
struct RunConfig {
    uint64_t seed = 1;

    // scenario
    int n_sectors = 6;
    int n_beams = 6;
    int n_preambles = 48;
    double lambda_total = 150.0;
    double rho = 2.0;
    int n_term = 0;
    int max_slots = 200;
    double d_min_km = 0.01;
    double d_max_km = 10.0;

    LinkParams link;
    double d_over_lambda = 0.25;

    std::string action_space_file;      // empty: built-in action space
    bool random_bu_per_slot = true;     // random baseline redraws each slot

    // learner
    std::vector<int> hidden{64, 64};
    double learning_rate = 1e-3;
    double gamma = 1.0;
    double epsilon_min = 0.01;
    double epsilon_decay = 0.99;
    int replay_capacity = 1200;
    int batch_size = 64;
    int target_sync_period = 16;
    int64_t episodes = 20000;
    bool scale_state_by_rate = false;   // feed counts / lambda_total instead of raw counts

    int eval_episodes = 1000;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_known_keys(const json& obj, const std::string& scope,
                               std::initializer_list<const char*> known) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError("unknown key: " + (scope.empty() ? key : scope + "." + key));
    }
}

template <typename T, typename Pred>
void read_field(const json& obj, const std::string& scope, const char* key, T& out, Pred&& valid,
                const char* requirement) {
    if (!obj.contains(key)) return;
    const std::string where = scope.empty() ? key : scope + "." + std::string(key);
    T value;
    try {
        value = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": wrong type");
    }
    if (!valid(value)) throw ConfigError(where + ": " + requirement);
    out = value;
}

inline auto any = [](const auto&) { return true; };

}  // namespace detail

/// Parses an action space: a JSON array of actions, each an array of
/// {"phi_rad": ..., "theta_rad": ...}. Directions are wrapped into
/// [0, 2*pi) before validation; invalid sets are rejected with the
/// failing constraint named.
inline ActionSpace action_space_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("action space: expected a non-empty array of actions");
    ActionSpace space;
    for (std::size_t a = 0; a < j.size(); ++a) {
        const json& ja = j[a];
        if (!ja.is_array() || ja.empty()) {
            throw ConfigError("action " + std::to_string(a) + ": expected a non-empty array of beams");
        }
        BeamSet bs;
        for (std::size_t b = 0; b < ja.size(); ++b) {
            const json& jb = ja[b];
            detail::require_known_keys(jb, "action " + std::to_string(a) + " beam " + std::to_string(b),
                                       {"phi_rad", "theta_rad"});
            if (!jb.contains("phi_rad") || !jb.contains("theta_rad")) {
                throw ConfigError("action " + std::to_string(a) + " beam " + std::to_string(b) +
                                  ": needs phi_rad and theta_rad");
            }
            const double phi = jb.at("phi_rad").get<double>();
            const double theta = jb.at("theta_rad").get<double>();
            if (!std::isfinite(phi) || !std::isfinite(theta)) {
                throw ConfigError("action " + std::to_string(a) + " beam " + std::to_string(b) +
                                  ": angles must be finite");
            }
            bs.beams.push_back(Beam{normalize_angle(phi), theta});
        }
        space.actions.push_back(std::move(bs));
    }
    const BeamSetValidation v = validate_action_space(space);
    if (!v.ok) throw ConfigError("action space violates " + v.constraint + ": " + v.message);
    return space;
}

inline ActionSpace load_action_space_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open action-space file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("action-space file " + path + ": " + e.what());
    }
    return action_space_from_json(j);
}

/// Applies a JSON override block onto defaults. Unknown keys and
/// out-of-range values are rejected with the offending key named.
inline RunConfig run_config_from_json(const json& j) {
    using detail::read_field;
    RunConfig c;
    if (!j.is_object()) throw ConfigError("config root must be an object");
    detail::require_known_keys(j, "", {"seed", "sim", "link", "array", "actions", "rl", "eval"});

    read_field(j, "", "seed", c.seed, detail::any, "");

    if (j.contains("sim")) {
        const json& s = j.at("sim");
        detail::require_known_keys(s, "sim",
                                   {"n_sectors", "n_beams", "n_preambles", "lambda_total", "rho",
                                    "n_term", "max_slots", "d_min_km", "d_max_km"});
        read_field(s, "sim", "n_sectors", c.n_sectors, [](int v) { return v >= 2; }, "must be >= 2");
        read_field(s, "sim", "n_beams", c.n_beams, [](int v) { return v >= 1; }, "must be >= 1");
        read_field(s, "sim", "n_preambles", c.n_preambles, [](int v) { return v >= 1; }, "must be >= 1");
        read_field(s, "sim", "lambda_total", c.lambda_total, [](double v) { return v > 0.0; },
                   "must be positive");
        read_field(s, "sim", "rho", c.rho, [](double v) { return v > 0.0; }, "must be positive");
        read_field(s, "sim", "n_term", c.n_term, [](int v) { return v >= 0; }, "must be >= 0");
        read_field(s, "sim", "max_slots", c.max_slots, [](int v) { return v >= 1; }, "must be >= 1");
        read_field(s, "sim", "d_min_km", c.d_min_km, [](double v) { return v > 0.0; }, "must be positive");
        read_field(s, "sim", "d_max_km", c.d_max_km, [](double v) { return v > 0.0; }, "must be positive");
    }
    if (j.contains("link")) {
        const json& s = j.at("link");
        detail::require_known_keys(s, "link",
                                   {"tx_power_dbm", "tx_gain_dbi", "rx_gain_dbi", "shadow_sigma_db",
                                    "gamma_db", "pl_intercept_db", "pl_slope_db"});
        read_field(s, "link", "tx_power_dbm", c.link.tx_power_dbm, detail::any, "");
        read_field(s, "link", "tx_gain_dbi", c.link.tx_gain_dbi, detail::any, "");
        read_field(s, "link", "rx_gain_dbi", c.link.rx_gain_dbi, detail::any, "");
        read_field(s, "link", "shadow_sigma_db", c.link.shadow_sigma_db,
                   [](double v) { return v >= 0.0; }, "must be >= 0");
        read_field(s, "link", "gamma_db", c.link.decode_threshold_db, detail::any, "");
        read_field(s, "link", "pl_intercept_db", c.link.pl_intercept_db, detail::any, "");
        read_field(s, "link", "pl_slope_db", c.link.pl_slope_db, [](double v) { return v > 0.0; },
                   "must be positive");
    }
    if (j.contains("array")) {
        const json& s = j.at("array");
        detail::require_known_keys(s, "array", {"d_over_lambda"});
        read_field(s, "array", "d_over_lambda", c.d_over_lambda, [](double v) { return v > 0.0; },
                   "must be positive");
    }
    if (j.contains("actions")) {
        const json& s = j.at("actions");
        detail::require_known_keys(s, "actions", {"file", "random_bu_per_slot"});
        read_field(s, "actions", "file", c.action_space_file, detail::any, "");
        read_field(s, "actions", "random_bu_per_slot", c.random_bu_per_slot, detail::any, "");
    }
    if (j.contains("rl")) {
        const json& s = j.at("rl");
        detail::require_known_keys(s, "rl",
                                   {"hidden", "learning_rate", "gamma", "epsilon_min", "epsilon_decay",
                                    "replay_capacity", "batch_size", "target_sync_period", "episodes",
                                    "scale_state_by_rate"});
        read_field(s, "rl", "hidden", c.hidden,
                   [](const std::vector<int>& v) {
                       if (v.empty()) return false;
                       for (int h : v) {
                           if (h < 1) return false;
                       }
                       return true;
                   },
                   "must be a non-empty list of positive sizes");
        read_field(s, "rl", "learning_rate", c.learning_rate, [](double v) { return v > 0.0; },
                   "must be positive");
        read_field(s, "rl", "gamma", c.gamma, [](double v) { return v >= 0.0 && v <= 1.0; },
                   "must be in [0, 1]");
        read_field(s, "rl", "epsilon_min", c.epsilon_min, [](double v) { return v >= 0.0 && v <= 1.0; },
                   "must be in [0, 1]");
        read_field(s, "rl", "epsilon_decay", c.epsilon_decay,
                   [](double v) { return v > 0.0 && v <= 1.0; }, "must be in (0, 1]");
        read_field(s, "rl", "replay_capacity", c.replay_capacity, [](int v) { return v >= 1; },
                   "must be >= 1");
        read_field(s, "rl", "batch_size", c.batch_size, [](int v) { return v >= 1; }, "must be >= 1");
        read_field(s, "rl", "target_sync_period", c.target_sync_period, [](int v) { return v >= 1; },
                   "must be >= 1");
        read_field(s, "rl", "episodes", c.episodes, [](int64_t v) { return v >= 1; }, "must be >= 1");
        read_field(s, "rl", "scale_state_by_rate", c.scale_state_by_rate, detail::any, "");
    }
    if (j.contains("eval")) {
        const json& s = j.at("eval");
        detail::require_known_keys(s, "eval", {"episodes"});
        read_field(s, "eval", "episodes", c.eval_episodes, [](int v) { return v >= 1; }, "must be >= 1");
    }

    if (c.batch_size > c.replay_capacity) {
        throw ConfigError("rl.batch_size: must not exceed rl.replay_capacity");
    }
    if (!(c.d_min_km < c.d_max_km)) throw ConfigError("sim.d_min_km: must be below sim.d_max_km");
    if (static_cast<double>(c.n_term) >= c.lambda_total) {
        throw ConfigError("sim.n_term: must be below the expected initial population");
    }
    return c;
}

/// Reads a config file; blank files mean "all defaults".
inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) text = "{}";
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    return run_config_from_json(j);
}

/// Full resolved config as JSON; round-trips through run_config_from_json.
inline json run_config_to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["sim"] = {{"n_sectors", c.n_sectors},       {"n_beams", c.n_beams},
                {"n_preambles", c.n_preambles},   {"lambda_total", c.lambda_total},
                {"rho", c.rho},                   {"n_term", c.n_term},
                {"max_slots", c.max_slots},       {"d_min_km", c.d_min_km},
                {"d_max_km", c.d_max_km}};
    j["link"] = {{"tx_power_dbm", c.link.tx_power_dbm},
                 {"tx_gain_dbi", c.link.tx_gain_dbi},
                 {"rx_gain_dbi", c.link.rx_gain_dbi},
                 {"shadow_sigma_db", c.link.shadow_sigma_db},
                 {"gamma_db", c.link.decode_threshold_db},
                 {"pl_intercept_db", c.link.pl_intercept_db},
                 {"pl_slope_db", c.link.pl_slope_db}};
    j["array"] = {{"d_over_lambda", c.d_over_lambda}};
    j["actions"] = {{"file", c.action_space_file}, {"random_bu_per_slot", c.random_bu_per_slot}};
    j["rl"] = {{"hidden", c.hidden},
               {"learning_rate", c.learning_rate},
               {"gamma", c.gamma},
               {"epsilon_min", c.epsilon_min},
               {"epsilon_decay", c.epsilon_decay},
               {"replay_capacity", c.replay_capacity},
               {"batch_size", c.batch_size},
               {"target_sync_period", c.target_sync_period},
               {"episodes", c.episodes},
               {"scale_state_by_rate", c.scale_state_by_rate}};
    j["eval"] = {{"episodes", c.eval_episodes}};
    return j;
}

/// Stable hash of the resolved config, for checkpoint provenance.
inline std::string config_hash(const RunConfig& c) {
    const std::string dump = run_config_to_json(c).dump();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(dump)));
    return std::string(buf);
}

inline ActionSpace resolve_action_space(const RunConfig& c) {
    if (c.action_space_file.empty()) return builtin_action_space();
    return load_action_space_file(c.action_space_file);
}

inline SimConfig make_sim_config(const RunConfig& c) {
    SimConfig s;
    s.n_sectors = c.n_sectors;
    s.n_beams = c.n_beams;
    s.n_preambles = c.n_preambles;
    s.sector_rates = rates_from_ratio(c.lambda_total, c.rho, c.n_sectors);
    s.n_term = c.n_term;
    s.max_slots = c.max_slots;
    s.d_min_km = c.d_min_km;
    s.d_max_km = c.d_max_km;
    s.link = c.link;
    s.d_over_lambda = c.d_over_lambda;
    s.actions = resolve_action_space(c);
    validate_sim_config(s);
    return s;
}

inline TrainConfig make_train_config(const RunConfig& c) {
    TrainConfig t;
    t.hidden = c.hidden;
    t.learning_rate = c.learning_rate;
    t.gamma = c.gamma;
    t.epsilon_min = c.epsilon_min;
    t.epsilon_decay = c.epsilon_decay;
    t.replay_capacity = static_cast<std::size_t>(c.replay_capacity);
    t.batch_size = static_cast<std::size_t>(c.batch_size);
    t.target_sync_period = c.target_sync_period;
    t.episodes = c.episodes;
    t.state_scale = c.scale_state_by_rate ? 1.0 / c.lambda_total : 1.0;
    return t;
}

}  // namespace beamra

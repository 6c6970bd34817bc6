#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "metrics.hpp"
#include "policies.hpp"
#include "rl.hpp"
#include "sim.hpp"

namespace beamra {

/// Writes via a temporary file and renames, so readers never observe a
/// partially written output.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---- network checkpoints ----------------------------------------------

struct Checkpoint {
    QNetwork net;
    uint64_t seed = 0;
    std::string config_hash;
};

inline void save_checkpoint(const std::filesystem::path& path, const QNetwork& net, uint64_t seed,
                            const std::string& cfg_hash) {
    json j;
    j["layer_sizes"] = net.layer_sizes;
    j["seed"] = seed;
    j["config_hash"] = cfg_hash;
    j["params"] = net.params;
    atomic_write_text(path, j.dump() + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("checkpoint " + path.string() + ": " + e.what());
    }
    Checkpoint cp;
    cp.net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    cp.net.params = j.at("params").get<std::vector<double>>();
    cp.seed = j.at("seed").get<uint64_t>();
    cp.config_hash = j.at("config_hash").get<std::string>();
    if (cp.net.layer_sizes.size() < 2) {
        throw std::runtime_error("checkpoint " + path.string() + ": bad layer_sizes");
    }
    if (cp.net.params.size() != QNetwork::param_count(cp.net.layer_sizes)) {
        throw std::runtime_error("checkpoint " + path.string() +
                                 ": parameter count does not match layer_sizes");
    }
    return cp;
}

/// Rejects a checkpoint whose shape cannot serve the given scenario.
inline void check_checkpoint_shape(const Checkpoint& cp, int state_dim, int n_actions) {
    if (cp.net.input_dim() != state_dim || cp.net.output_dim() != n_actions) {
        throw std::runtime_error("checkpoint shape mismatch: network is " +
                                 std::to_string(cp.net.input_dim()) + " -> " +
                                 std::to_string(cp.net.output_dim()) + ", scenario needs " +
                                 std::to_string(state_dim) + " -> " + std::to_string(n_actions));
    }
}

// ---- run artifacts ------------------------------------------------------

/// One JSON record per slot plus a trailer with the per-device outcome.
inline std::string episode_log_to_jsonl(const EpisodeLog& log) {
    std::string out;
    for (const SlotRecord& rec : log.slots) {
        json j;
        j["t"] = rec.t;
        j["state"] = rec.state;
        j["action_id"] = rec.action_id;
        j["reward"] = rec.reward;
        out += j.dump();
        out += "\n";
    }
    json trailer;
    trailer["device_delays"] = log.device_delays;
    trailer["unfinished"] = log.unfinished;
    trailer["truncated"] = log.truncated;
    out += trailer.dump();
    out += "\n";
    return out;
}

inline json delay_stats_to_json(const DelayStats& s) {
    json j;
    j["scheme"] = s.scheme;
    j["lambda"] = s.lambda;
    j["rho"] = s.rho;
    j["n_episodes"] = s.n_episodes;
    j["mean_delay_slots"] = s.mean_delay_slots;
    json cdf = json::array();
    for (const auto& [d, f] : s.cdf) cdf.push_back(json::array({d, f}));
    j["cdf"] = cdf;
    j["truncated_episodes"] = s.truncated_episodes;
    return j;
}

inline std::string training_log_to_csv(const TrainingLog& log) {
    std::string out = "episode,length,loss_mean,return,avg_action_value,epsilon\n";
    for (const EpisodeStats& e : log.episodes) {
        out += std::to_string(e.episode);
        out += ",";
        out += std::to_string(e.length);
        out += ",";
        out += format_double(e.loss_mean);
        out += ",";
        out += format_double(e.return_);
        out += ",";
        out += format_double(e.avg_action_value);
        out += ",";
        out += format_double(e.epsilon);
        out += "\n";
    }
    return out;
}

}  // namespace beamra

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "beam_geometry.hpp"
#include "channel.hpp"
#include "rng.hpp"

namespace beamra {

/// One access-seeking device. Positions are polar around the base
/// station and fixed for the whole episode.
struct Device {
    double theta = 0.0;
    double d_km = 0.0;
    int sector = 0;
    bool active = true;
    int arrival_slot = 0;
    int success_slot = -1;  // set exactly once, when the device gets through
};

struct SimConfig {
    int n_sectors = 6;
    int n_beams = 6;
    int n_preambles = 48;
    std::vector<double> sector_rates;  // expected arrivals per sector
    int n_term = 0;                    // episode ends once this few devices remain
    int max_slots = 200;               // safety cap; hitting it marks the episode truncated
    double d_min_km = 0.01;
    double d_max_km = 10.0;
    LinkParams link;
    double d_over_lambda = 0.25;
    ActionSpace actions;
};

inline void validate_sim_config(const SimConfig& cfg) {
    auto fail = [](const std::string& m) { throw std::invalid_argument("sim config: " + m); };
    if (cfg.n_sectors < 2) fail("n_sectors must be at least 2");
    if (cfg.n_beams < 1) fail("n_beams must be at least 1");
    if (cfg.n_preambles < 1) fail("n_preambles must be at least 1");
    if (cfg.sector_rates.size() != static_cast<std::size_t>(cfg.n_sectors)) {
        fail("sector_rates must have one entry per sector");
    }
    double total = 0.0;
    for (double r : cfg.sector_rates) {
        if (!(r >= 0.0)) fail("sector rates must be non-negative");
        total += r;
    }
    if (!(total > 0.0)) fail("total arrival rate must be positive");
    if (cfg.n_term < 0 || static_cast<double>(cfg.n_term) >= total) {
        fail("n_term must be in [0, expected initial population)");
    }
    if (cfg.max_slots < 1) fail("max_slots must be at least 1");
    if (!(cfg.d_min_km > 0.0 && cfg.d_min_km < cfg.d_max_km)) fail("need 0 < d_min_km < d_max_km");
    if (!(cfg.link.shadow_sigma_db >= 0.0)) fail("shadow_sigma_db must be non-negative");
    if (!(cfg.link.pl_slope_db > 0.0)) fail("path-loss slope must be positive");
    if (!(cfg.d_over_lambda > 0.0)) fail("d_over_lambda must be positive");
    const BeamSetValidation v = validate_action_space(cfg.actions);
    if (!v.ok) fail("invalid action space (" + v.constraint + "): " + v.message);
    for (const BeamSet& a : cfg.actions.actions) {
        if (a.size() != static_cast<std::size_t>(cfg.n_beams)) fail("every action must have n_beams beams");
    }
}

/// Per-sector rates from a total rate and a hot-sector distribution
/// ratio rho = rate_hot / ((n_sectors - 1) * rate_low). Sector 0 is hot.
inline std::vector<double> rates_from_ratio(double lambda_total, double rho, int n_sectors) {
    if (n_sectors < 2) throw std::invalid_argument("rates_from_ratio: need at least 2 sectors");
    if (!(rho > 0.0)) throw std::invalid_argument("rates_from_ratio: rho must be positive");
    std::vector<double> rates(static_cast<std::size_t>(n_sectors));
    rates[0] = lambda_total * rho / (rho + 1.0);
    const double low = lambda_total / ((n_sectors - 1) * (rho + 1.0));
    for (int j = 1; j < n_sectors; ++j) rates[static_cast<std::size_t>(j)] = low;
    return rates;
}

/// Live roster plus per-sector active counts; the per-sector counts are
/// the scheduler's observation.
struct EpisodeState {
    std::vector<Device> devices;
    int slot = 0;
    std::vector<int> counts;
    int active_total = 0;
};

// The termination threshold is checked after a transition, never at
// spawn: every episode runs at least one slot.
inline bool is_terminal(const EpisodeState& ep, const SimConfig& cfg) {
    return ep.slot >= 1 && (ep.active_total <= cfg.n_term || ep.slot >= cfg.max_slots);
}

inline bool is_truncated(const EpisodeState& ep, const SimConfig& cfg) {
    return ep.slot >= cfg.max_slots && ep.active_total > cfg.n_term;
}

/// Draws a fresh population: per-sector Poisson counts, angles uniform
/// within each sector's arc, distances uniform in [d_min, d_max]. An
/// all-empty draw is retried, so an episode always has work to do.
inline EpisodeState spawn_episode(const SimConfig& cfg, Rng& rng) {
    EpisodeState ep;
    ep.counts.assign(static_cast<std::size_t>(cfg.n_sectors), 0);
    std::vector<uint64_t> draws(static_cast<std::size_t>(cfg.n_sectors), 0);
    uint64_t total = 0;
    do {
        total = 0;
        for (int j = 0; j < cfg.n_sectors; ++j) {
            draws[static_cast<std::size_t>(j)] = rng.poisson(cfg.sector_rates[static_cast<std::size_t>(j)]);
            total += draws[static_cast<std::size_t>(j)];
        }
    } while (total == 0);

    const double width = two_pi / cfg.n_sectors;
    ep.devices.reserve(total);
    for (int j = 0; j < cfg.n_sectors; ++j) {
        const double lower = j * width - 0.5 * width;
        for (uint64_t k = 0; k < draws[static_cast<std::size_t>(j)]; ++k) {
            Device d;
            d.theta = normalize_angle(lower + rng.uniform() * width);
            d.d_km = cfg.d_min_km + rng.uniform() * (cfg.d_max_km - cfg.d_min_km);
            d.sector = sector_of(d.theta, cfg.n_sectors);
            ep.devices.push_back(d);
            ep.counts[static_cast<std::size_t>(d.sector)] += 1;
        }
    }
    ep.active_total = static_cast<int>(total);
    return ep;
}

/// The per-sector active counts as a real vector.
inline std::vector<double> observe(const EpisodeState& ep) {
    std::vector<double> s(ep.counts.size());
    for (std::size_t j = 0; j < ep.counts.size(); ++j) s[j] = static_cast<double>(ep.counts[j]);
    return s;
}

struct StepResult {
    std::vector<double> state;
    double reward = 0.0;
    bool terminal = false;
    bool truncated = false;
};

/// Runs one access slot under `action`:
///   1. every active device picks a preamble uniformly at random,
///   2. devices sharing both serving beam and preamble collide and fail,
///   3. each remaining (singleton) device is decode-tested against the
///      aggregate power of same-preamble devices in other beams, all
///      seen through the victim's serving beam, with fresh per-device
///      shadowing,
///   4. reward is minus the number of devices still waiting.
/// Preamble and shadowing draws each consume one value per active device
/// in roster order.
inline StepResult step(EpisodeState& ep, const BeamSet& action, const SimConfig& cfg,
                       Rng& preamble_rng, Rng& shadow_rng) {
    if (is_terminal(ep, cfg)) throw std::logic_error("step: episode is already terminal");

    std::vector<int> active;
    active.reserve(static_cast<std::size_t>(ep.active_total));
    for (std::size_t m = 0; m < ep.devices.size(); ++m) {
        if (ep.devices[m].active) active.push_back(static_cast<int>(m));
    }

    const std::size_t n = active.size();
    std::vector<uint64_t> preamble(n);
    std::vector<double> chi(n);
    std::vector<int> beam(n);
    for (std::size_t i = 0; i < n; ++i) {
        preamble[i] = preamble_rng.uniform_below(static_cast<uint64_t>(cfg.n_preambles));
    }
    for (std::size_t i = 0; i < n; ++i) {
        chi[i] = shadow_rng.normal() * cfg.link.shadow_sigma_db;
    }
    for (std::size_t i = 0; i < n; ++i) {
        beam[i] = serving_beam(action, ep.devices[static_cast<std::size_t>(active[i])].theta);
    }

    // group sizes per (beam, preamble) and transmitter lists per preamble
    std::unordered_map<uint64_t, int> group_size;
    std::unordered_map<uint64_t, std::vector<int>> by_preamble;
    group_size.reserve(2 * n);
    by_preamble.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const uint64_t key = static_cast<uint64_t>(beam[i]) * static_cast<uint64_t>(cfg.n_preambles) + preamble[i];
        group_size[key] += 1;
        by_preamble[preamble[i]].push_back(static_cast<int>(i));
    }

    std::vector<double> interferers;
    for (std::size_t i = 0; i < n; ++i) {
        const uint64_t key = static_cast<uint64_t>(beam[i]) * static_cast<uint64_t>(cfg.n_preambles) + preamble[i];
        if (group_size[key] >= 2) continue;  // same beam, same grant: unresolvable

        const Beam& rx_beam = action.beams[static_cast<std::size_t>(beam[i])];
        Device& dev = ep.devices[static_cast<std::size_t>(active[i])];

        interferers.clear();
        for (int other : by_preamble[preamble[i]]) {
            const std::size_t o = static_cast<std::size_t>(other);
            if (o == i) continue;
            const Device& q = ep.devices[static_cast<std::size_t>(active[o])];
            interferers.push_back(
                received_power_dbm(cfg.link, rx_beam, cfg.d_over_lambda, q.theta, q.d_km, chi[o]));
        }
        const double r = received_power_dbm(cfg.link, rx_beam, cfg.d_over_lambda, dev.theta, dev.d_km, chi[i]);
        const double itf = interference_power_dbm(interferers);
        if (std::isfinite(r) && decode(r, itf, cfg.link.decode_threshold_db)) {
            dev.active = false;
            dev.success_slot = ep.slot;
            ep.counts[static_cast<std::size_t>(dev.sector)] -= 1;
            ep.active_total -= 1;
        }
    }

    StepResult res;
    res.reward = -static_cast<double>(ep.active_total);
    ep.slot += 1;
    res.terminal = is_terminal(ep, cfg);
    res.truncated = is_truncated(ep, cfg);
    res.state = observe(ep);
    return res;
}

/// Episode driver with labeled substreams. Episode `i` draws from
/// substreams ("spawn", i), ("preamble", i) and ("shadow", i) of the run
/// seed, so independent episodes can be replayed or distributed across
/// workers without disturbing one another.
class SimEnv {
public:
    SimEnv(const SimConfig& cfg, uint64_t seed) : cfg_(&cfg), seed_(seed) {}

    std::vector<double> reset() { return reset_at(next_episode_++); }

    std::vector<double> reset_at(uint64_t episode_index) {
        episode_index_ = episode_index;
        next_episode_ = episode_index + 1;
        Rng spawn_rng = Rng::substream(seed_, "spawn", episode_index);
        preamble_rng_ = Rng::substream(seed_, "preamble", episode_index);
        shadow_rng_ = Rng::substream(seed_, "shadow", episode_index);
        ep_ = spawn_episode(*cfg_, spawn_rng);
        return observe(ep_);
    }

    StepResult step(int action_index) {
        const auto& actions = cfg_->actions.actions;
        if (action_index < 0 || static_cast<std::size_t>(action_index) >= actions.size()) {
            throw std::out_of_range("SimEnv::step: action index out of range");
        }
        return step_with(actions[static_cast<std::size_t>(action_index)]);
    }

    StepResult step_with(const BeamSet& action) {
        return beamra::step(ep_, action, *cfg_, preamble_rng_, shadow_rng_);
    }

    std::size_t state_dim() const { return static_cast<std::size_t>(cfg_->n_sectors); }
    std::size_t n_actions() const { return cfg_->actions.actions.size(); }
    const EpisodeState& episode() const { return ep_; }
    const SimConfig& config() const { return *cfg_; }
    uint64_t episode_index() const { return episode_index_; }

private:
    const SimConfig* cfg_;
    uint64_t seed_;
    uint64_t next_episode_ = 0;
    uint64_t episode_index_ = 0;
    EpisodeState ep_;
    Rng preamble_rng_{0};
    Rng shadow_rng_{0};
};

struct SlotRecord {
    int t = 0;
    std::vector<double> state;  // observation the action was chosen from
    int action_id = -1;         // -1 when the policy is not index-based
    double reward = 0.0;
};

struct EpisodeLog {
    std::vector<SlotRecord> slots;
    std::vector<int> device_delays;  // slots used by each device that got through, roster order
    int initial_count = 0;
    int unfinished = 0;
    bool truncated = false;

    int length() const { return static_cast<int>(slots.size()); }
};

/// Plays one full episode under a policy callable with signature
///   (const std::vector<double>& state, Rng&) -> std::pair<int, const BeamSet*>.
/// A device that succeeds in its k-th attempt is logged with delay k
/// (first-slot success counts as one slot used).
template <typename PolicyFn>
EpisodeLog run_episode(SimEnv& env, PolicyFn&& policy, Rng& policy_rng, uint64_t episode_index) {
    EpisodeLog log;
    std::vector<double> state = env.reset_at(episode_index);
    log.initial_count = env.episode().active_total;

    bool terminal = false;
    while (!terminal) {
        auto [action_id, beams] = policy(state, policy_rng);
        SlotRecord rec;
        rec.t = env.episode().slot;
        rec.state = state;
        rec.action_id = action_id;
        StepResult sr = env.step_with(*beams);
        rec.reward = sr.reward;
        log.slots.push_back(std::move(rec));
        state = std::move(sr.state);
        terminal = sr.terminal;
        log.truncated = sr.truncated;
    }

    for (const Device& d : env.episode().devices) {
        if (d.success_slot >= 0) {
            log.device_delays.push_back(d.success_slot + 1);
        } else {
            log.unfinished += 1;
        }
    }
    return log;
}

}  // namespace beamra

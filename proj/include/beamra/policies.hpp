#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "beam_geometry.hpp"
#include "metrics.hpp"
#include "rl.hpp"
#include "sim.hpp"

namespace beamra {

/// One of the three evaluated schemes behind a single interface:
/// a fixed equal-width layout, a uniformly random pick from the action
/// space, or the greedy choice of a trained network.
struct Policy {
    enum class Kind { Static, Random, Greedy };

    Kind kind = Kind::Static;
    BeamSet static_set;          // Static
    ActionSpace space;           // Random and Greedy
    bool redraw_per_slot = true; // Random: redraw each slot vs once per episode
    QNetwork net;                // Greedy
};

/// Fixed layout of `n_beams` equal beams; never consults the state.
inline Policy static_be(int n_beams) {
    if (n_beams < 1) throw std::invalid_argument("static_be: need at least one beam");
    Policy p;
    p.kind = Policy::Kind::Static;
    const double width = two_pi / n_beams;
    for (int i = 0; i < n_beams; ++i) {
        p.static_set.beams.push_back(Beam{normalize_angle(i * width), width});
    }
    return p;
}

/// Uniformly random member of `space` at every decision point.
inline Policy random_bu(ActionSpace space, bool redraw_per_slot = true) {
    if (space.actions.empty()) throw std::invalid_argument("random_bu: empty action space");
    Policy p;
    p.kind = Policy::Kind::Random;
    p.space = std::move(space);
    p.redraw_per_slot = redraw_per_slot;
    return p;
}

/// Greedy exploitation of a trained network over `space`.
inline Policy ddqn_greedy(QNetwork net, ActionSpace space) {
    if (space.actions.empty()) throw std::invalid_argument("ddqn_greedy: empty action space");
    if (net.output_dim() != static_cast<int>(space.actions.size())) {
        throw std::invalid_argument("ddqn_greedy: network output size does not match the action space");
    }
    Policy p;
    p.kind = Policy::Kind::Greedy;
    p.space = std::move(space);
    p.net = std::move(net);
    return p;
}

/// Per-episode decision state for a Policy; hands run_episode the
/// (action id, beam set) for each slot.
class PolicyDriver {
public:
    explicit PolicyDriver(const Policy& p) : p_(&p) {}

    void begin_episode() { episode_choice_.reset(); }

    std::pair<int, const BeamSet*> operator()(const std::vector<double>& state, Rng& rng) {
        switch (p_->kind) {
            case Policy::Kind::Static:
                return {-1, &p_->static_set};
            case Policy::Kind::Random: {
                if (!p_->redraw_per_slot) {
                    if (!episode_choice_) {
                        episode_choice_ = static_cast<int>(rng.uniform_below(p_->space.actions.size()));
                    }
                    return {*episode_choice_, &p_->space.actions[static_cast<std::size_t>(*episode_choice_)]};
                }
                const int a = static_cast<int>(rng.uniform_below(p_->space.actions.size()));
                return {a, &p_->space.actions[static_cast<std::size_t>(a)]};
            }
            case Policy::Kind::Greedy: {
                const int a = argmax(forward(p_->net, state));
                return {a, &p_->space.actions[static_cast<std::size_t>(a)]};
            }
        }
        throw std::logic_error("PolicyDriver: unknown policy kind");
    }

private:
    const Policy* p_;
    std::optional<int> episode_choice_;
};

/// Aggregated delay results of an evaluation run. Truncated episodes are
/// counted but contribute nothing to the delay statistics; devices still
/// waiting when a non-truncated episode ends are likewise excluded.
struct DelayStats {
    std::string scheme;
    double lambda = 0.0;
    double rho = 0.0;
    int n_episodes = 0;
    int truncated_episodes = 0;
    double mean_delay_slots = 0.0;
    std::vector<std::pair<int, double>> cdf;

    std::vector<int> pooled_delays;          // every succeeded device, aggregated episodes
    std::vector<double> episode_mean_delays; // per aggregated episode, for spread estimates
    int64_t total_delay_slots = 0;
    int64_t succeeded_devices = 0;

    /// Standard error of the per-episode mean delay.
    double mean_delay_stderr() const {
        const std::size_t n = episode_mean_delays.size();
        if (n < 2) return 0.0;
        double mean = 0.0;
        for (double m : episode_mean_delays) mean += m;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double m : episode_mean_delays) var += (m - mean) * (m - mean);
        var /= static_cast<double>(n - 1);
        return std::sqrt(var / static_cast<double>(n));
    }
};

/// Runs `n_episodes` independent episodes of `policy` and pools the
/// per-device delays. Episode i uses the simulation substreams for index
/// i plus a ("policy", i) substream, so results are byte-identical for
/// any `jobs` count; workers only partition the episode index range.
inline DelayStats evaluate(const Policy& policy, const SimConfig& cfg, int n_episodes, uint64_t seed,
                           int jobs = 1) {
    if (n_episodes < 1) throw std::invalid_argument("evaluate: need at least one episode");
    validate_sim_config(cfg);

    struct EpisodeOutcome {
        std::vector<int> delays;
        bool truncated = false;
    };
    std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(n_episodes));

    auto run_range = [&](int lo, int hi) {
        SimEnv env(cfg, seed);
        PolicyDriver driver(policy);
        for (int i = lo; i < hi; ++i) {
            Rng policy_rng = Rng::substream(seed, "policy", static_cast<uint64_t>(i));
            driver.begin_episode();
            EpisodeLog log = run_episode(env, driver, policy_rng, static_cast<uint64_t>(i));
            outcomes[static_cast<std::size_t>(i)] =
                EpisodeOutcome{std::move(log.device_delays), log.truncated};
        }
    };

    const int workers = std::max(1, std::min(jobs, n_episodes));
    if (workers == 1) {
        run_range(0, n_episodes);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        const int chunk = (n_episodes + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int lo = w * chunk;
            const int hi = std::min(n_episodes, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(run_range, lo, hi);
        }
        for (std::thread& t : pool) t.join();
    }

    DelayStats stats;
    stats.n_episodes = n_episodes;
    for (const EpisodeOutcome& oc : outcomes) {
        if (oc.truncated) {
            stats.truncated_episodes += 1;
            continue;
        }
        int64_t ep_total = 0;
        for (int d : oc.delays) {
            stats.pooled_delays.push_back(d);
            ep_total += d;
        }
        stats.total_delay_slots += ep_total;
        stats.succeeded_devices += static_cast<int64_t>(oc.delays.size());
        if (!oc.delays.empty()) {
            stats.episode_mean_delays.push_back(static_cast<double>(ep_total) /
                                                static_cast<double>(oc.delays.size()));
        }
    }
    if (stats.succeeded_devices > 0) {
        stats.mean_delay_slots =
            static_cast<double>(stats.total_delay_slots) / static_cast<double>(stats.succeeded_devices);
        stats.cdf = delay_cdf(stats.pooled_delays);
    }
    return stats;
}

}  // namespace beamra

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include <beamra/metrics.hpp>
#include <beamra/policies.hpp>
#include <beamra/sim.hpp>

using namespace beamra;
using std::numbers::pi;

namespace {

SimConfig small_cfg(double lambda, double rho) {
    SimConfig cfg;
    cfg.sector_rates = rates_from_ratio(lambda, rho, cfg.n_sectors);
    cfg.actions = builtin_action_space();
    return cfg;
}

}  // namespace

TEST_CASE("static_be builds the equal-width layout and ignores the state") {
    const Policy p = static_be(6);
    REQUIRE(p.static_set.size() == 6);
    for (int i = 0; i < 6; ++i) {
        CHECK_THAT(p.static_set.beams[static_cast<std::size_t>(i)].theta,
                   Catch::Matchers::WithinAbs(pi / 3.0, 1e-15));
        CHECK_THAT(p.static_set.beams[static_cast<std::size_t>(i)].phi,
                   Catch::Matchers::WithinAbs(normalize_angle(i * pi / 3.0), 1e-15));
    }
    CHECK(validate_beam_set(p.static_set).ok);

    PolicyDriver driver(p);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> state{rng.uniform() * 50.0, rng.uniform() * 50.0, 0.0, 0.0, 0.0, 0.0};
        const auto [id, beams] = driver(state, rng);
        CHECK(id == -1);
        CHECK(beams == &p.static_set);
    }
}

TEST_CASE("random_bu draws uniformly and independently of the state") {
    const Policy single = random_bu(ActionSpace{{static_be(6).static_set}});
    PolicyDriver d1(single);
    Rng rng(6);
    std::vector<double> state(6, 0.0);
    for (int i = 0; i < 20; ++i) CHECK(d1(state, rng).first == 0);

    const Policy p = random_bu(builtin_action_space());
    PolicyDriver driver(p);
    std::vector<int> freq(3, 0);
    const int n = 30000;
    for (int i = 0; i < n; ++i) {
        state[0] = static_cast<double>(i % 40);  // the state must not matter
        freq[static_cast<std::size_t>(driver(state, rng).first)] += 1;
    }
    const double sigma = std::sqrt(n * (1.0 / 3.0) * (2.0 / 3.0));
    for (int a = 0; a < 3; ++a) {
        CHECK(std::fabs(freq[static_cast<std::size_t>(a)] - n / 3.0) < 3.0 * sigma);
    }
}

TEST_CASE("per-episode cadence keeps one random action for the whole episode") {
    const SimConfig cfg = small_cfg(25.0, 2.0);
    const Policy p = random_bu(cfg.actions, /*redraw_per_slot=*/false);
    SimEnv env(cfg, 70);
    PolicyDriver driver(p);
    for (uint64_t i = 0; i < 10; ++i) {
        Rng policy_rng = Rng::substream(70, "policy", i);
        driver.begin_episode();
        const EpisodeLog log = run_episode(env, driver, policy_rng, i);
        REQUIRE(log.length() >= 1);
        const int first = log.slots[0].action_id;
        for (const SlotRecord& rec : log.slots) CHECK(rec.action_id == first);
    }
}

TEST_CASE("ddqn_greedy rejects a network that does not fit the action space") {
    Rng rng(1);
    QNetwork bad = QNetwork::glorot({6, 8, 5}, rng);
    CHECK_THROWS_AS(ddqn_greedy(std::move(bad), builtin_action_space()), std::invalid_argument);
}

TEST_CASE("single-device episodes finish with a delay of one slot") {
    SimConfig cfg = small_cfg(1e-6, 1.0);  // spawn retries until one device appears
    const DelayStats stats = evaluate(static_be(6), cfg, 100, 99);
    CHECK(stats.mean_delay_slots == 1.0);
    CHECK(stats.succeeded_devices >= 100);
    CHECK(stats.truncated_episodes == 0);
}

TEST_CASE("evaluation is deterministic and independent of the worker count") {
    const SimConfig cfg = small_cfg(30.0, 5.0);
    const Policy p = random_bu(cfg.actions);
    const DelayStats a = evaluate(p, cfg, 40, 123, 1);
    const DelayStats b = evaluate(p, cfg, 40, 123, 1);
    const DelayStats c = evaluate(p, cfg, 40, 123, 3);
    CHECK(a.mean_delay_slots == b.mean_delay_slots);
    CHECK(a.pooled_delays == b.pooled_delays);
    CHECK(a.mean_delay_slots == c.mean_delay_slots);
    CHECK(a.pooled_delays == c.pooled_delays);
    CHECK(a.episode_mean_delays == c.episode_mean_delays);
}

TEST_CASE("the pooled mean agrees with an independent per-episode recomputation") {
    const SimConfig cfg = small_cfg(20.0, 2.0);
    const Policy p = static_be(6);
    const uint64_t seed = 321;
    const int episodes = 20;
    const DelayStats stats = evaluate(p, cfg, episodes, seed);

    long long total = 0, succeeded = 0;
    SimEnv env(cfg, seed);
    PolicyDriver driver(p);
    for (int i = 0; i < episodes; ++i) {
        Rng policy_rng = Rng::substream(seed, "policy", static_cast<uint64_t>(i));
        driver.begin_episode();
        const EpisodeLog log = run_episode(env, driver, policy_rng, static_cast<uint64_t>(i));
        if (log.truncated) continue;
        for (int d : log.device_delays) total += d;
        succeeded += static_cast<long long>(log.device_delays.size());
    }
    REQUIRE(succeeded > 0);
    CHECK(stats.succeeded_devices == succeeded);
    CHECK(stats.total_delay_slots == total);
    CHECK(stats.mean_delay_slots == static_cast<double>(total) / static_cast<double>(succeeded));
}

TEST_CASE("the static scheme never consults the action space") {
    SimConfig cfg_a = small_cfg(30.0, 5.0);
    SimConfig cfg_b = cfg_a;
    for (BeamSet& a : cfg_b.actions.actions) a = rotate_action(a, 0.37);
    const DelayStats sa = evaluate(static_be(6), cfg_a, 30, 2024);
    const DelayStats sb = evaluate(static_be(6), cfg_b, 30, 2024);
    CHECK(sa.mean_delay_slots == sb.mean_delay_slots);
    CHECK(sa.pooled_delays == sb.pooled_delays);
}

TEST_CASE("ema smooths as a geometric recursion") {
    CHECK(ema({3.5, 3.5, 3.5, 3.5}, 0.99) == std::vector<double>{3.5, 3.5, 3.5, 3.5});
    CHECK(ema({1.0, 2.0, 3.0}, 0.0) == std::vector<double>{1.0, 2.0, 3.0});

    // unit step: closed form 1 - w^k after the jump
    std::vector<double> xs(50, 1.0);
    xs[0] = 0.0;
    const std::vector<double> ys = ema(xs, 0.99);
    for (std::size_t k = 1; k < xs.size(); ++k) {
        CHECK_THAT(ys[k], Catch::Matchers::WithinAbs(1.0 - std::pow(0.99, static_cast<double>(k)), 1e-12));
    }

    // bounded by the input range
    Rng rng(13);
    std::vector<double> noisy;
    for (int i = 0; i < 200; ++i) noisy.push_back(rng.uniform() * 10.0 - 5.0);
    double lo = noisy[0], hi = noisy[0];
    for (double v : noisy) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : ema(noisy, 0.9)) {
        CHECK(v >= lo);
        CHECK(v <= hi);
    }

    CHECK_THROWS_AS(ema({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ema({1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("avg_action_value is the grand mean over slots and actions") {
    CHECK(avg_action_value({{0.0, 0.0}, {0.0, 0.0}}) == 0.0);
    CHECK(avg_action_value({{-1.0, -2.0, -3.0}}) == -2.0);
    const double two_slots = avg_action_value({{-1.0, -2.0, -3.0}, {1.0, 2.0, 3.0}});
    CHECK_THAT(two_slots, Catch::Matchers::WithinAbs((-2.0 + 2.0) / 2.0, 1e-15));

    // permuting actions within a slot changes nothing
    CHECK(avg_action_value({{5.0, -1.0, 2.0}}) == avg_action_value({{-1.0, 2.0, 5.0}}));
}

TEST_CASE("delay_cdf is a non-decreasing step function reaching one") {
    CHECK(delay_cdf({5, 5, 5}) == std::vector<std::pair<int, double>>{{5, 1.0}});
    const auto cdf = delay_cdf({1, 2, 3, 4});
    REQUIRE(cdf.size() == 4);
    CHECK(cdf[0] == std::pair<int, double>{1, 0.25});
    CHECK(cdf[1] == std::pair<int, double>{2, 0.5});
    CHECK(cdf[2] == std::pair<int, double>{3, 0.75});
    CHECK(cdf[3] == std::pair<int, double>{4, 1.0});

    Rng rng(3);
    std::vector<int> delays;
    for (int i = 0; i < 500; ++i) delays.push_back(1 + static_cast<int>(rng.uniform_below(30)));
    const auto noisy = delay_cdf(delays);
    for (std::size_t i = 1; i < noisy.size(); ++i) {
        CHECK(noisy[i].first > noisy[i - 1].first);
        CHECK(noisy[i].second >= noisy[i - 1].second);
    }
    CHECK(noisy.back().second == 1.0);
}

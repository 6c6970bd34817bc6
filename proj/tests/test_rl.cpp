#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <beamra/rl.hpp>
#include <beamra/rng.hpp>

#include "toy_env.hpp"

using namespace beamra;

namespace {

QNetwork random_net(std::vector<int> sizes, uint64_t seed) {
    Rng rng = Rng::substream(seed, "net-init");
    return QNetwork::glorot(std::move(sizes), rng);
}

// loss plus the rectifier on/off pattern, so kink crossings can be skipped
double batch_loss(const QNetwork& net, std::span<const Experience* const> batch,
                  std::span<const double> ys, std::vector<bool>* pattern = nullptr) {
    if (pattern) pattern->clear();
    double loss = 0.0;
    std::vector<std::vector<double>> acts;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        detail::forward_cached(net, batch[i]->state, acts);
        if (pattern) {
            for (std::size_t l = 1; l + 1 < acts.size(); ++l) {
                for (double a : acts[l]) pattern->push_back(a > 0.0);
            }
        }
        const double q = acts.back()[static_cast<std::size_t>(batch[i]->action)];
        loss += (q - ys[i]) * (q - ys[i]);
    }
    return loss / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("forward of an all-zero network is zero") {
    const QNetwork net = QNetwork::zeros({4, 8, 3});
    const std::vector<double> out = forward(net, std::vector<double>{1.0, -2.0, 3.0, 4.0});
    CHECK(out == std::vector<double>{0.0, 0.0, 0.0});
    CHECK_THROWS_AS(forward(net, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("scaling the linear head scales the outputs") {
    QNetwork net = random_net({3, 16, 4}, 1);
    const std::size_t head_w = net.weight_offset(1);
    const std::size_t head_b = net.bias_offset(1);
    for (std::size_t i = head_b; i < head_b + 4; ++i) net.params[i] = 0.0;

    const std::vector<double> s{0.5, -1.0, 2.0};
    const std::vector<double> base = forward(net, s);
    for (std::size_t i = head_w; i < head_b; ++i) net.params[i] *= 3.0;
    const std::vector<double> scaled = forward(net, s);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK_THAT(scaled[i], Catch::Matchers::WithinRel(3.0 * base[i], 1e-12));
    }
}

TEST_CASE("initialization is deterministic per seed") {
    const QNetwork a = random_net({6, 64, 64, 3}, 9);
    const QNetwork b = random_net({6, 64, 64, 3}, 9);
    const QNetwork c = random_net({6, 64, 64, 3}, 10);
    CHECK(a.params == b.params);
    CHECK(a.params != c.params);
    const std::vector<double> s{3.0, 0.0, 1.0, 0.0, 2.0, 0.0};
    CHECK(forward(a, s) == forward(b, s));
}

TEST_CASE("td_targets masks terminals and decouples selection from valuation") {
    // single linear layer on a constant zero input: outputs are the biases
    QNetwork net = QNetwork::zeros({1, 2});
    QNetwork target = QNetwork::zeros({1, 2});
    net.params[net.bias_offset(0) + 0] = 0.0;
    net.params[net.bias_offset(0) + 1] = 5.0;  // net picks action 1
    target.params[target.bias_offset(0) + 0] = 3.0;
    target.params[target.bias_offset(0) + 1] = 7.0;  // target values it at 7

    Experience move{{0.0}, 0, 1.0, {0.0}, false};
    Experience stop{{0.0}, 0, -3.0, {0.0}, true};
    const std::vector<const Experience*> batch{&move, &stop};
    const std::vector<double> ys = td_targets(batch, net, target, 1.0);
    CHECK(ys[0] == 8.0);   // r + target value of the net's argmax
    CHECK(ys[1] == -3.0);  // terminal: no bootstrap
}

TEST_CASE("with identical networks the target reduces to the plain max") {
    const QNetwork net = random_net({3, 12, 4}, 2);
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Experience e;
        e.state = {rng.uniform(), rng.uniform(), rng.uniform()};
        e.next_state = {rng.uniform(), rng.uniform(), rng.uniform()};
        e.action = static_cast<int>(rng.uniform_below(4));
        e.reward = rng.uniform() * 4.0 - 2.0;
        e.terminal = false;
        const std::vector<const Experience*> batch{&e};
        const std::vector<double> ys = td_targets(batch, net, net, 0.9);
        const std::vector<double> q = forward(net, e.next_state);
        double maxq = q[0];
        for (double v : q) maxq = std::max(maxq, v);
        CHECK_THAT(ys[0], Catch::Matchers::WithinAbs(e.reward + 0.9 * maxq, 1e-12));
    }
}

TEST_CASE("analytic gradients agree with central finite differences") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        QNetwork net = random_net({3, 5, 4, 2}, 100 + static_cast<uint64_t>(trial));
        std::vector<Experience> store;
        for (int i = 0; i < 6; ++i) {
            Experience e;
            e.state = {rng.uniform() * 2.0 - 1.0, rng.uniform() * 2.0 - 1.0, rng.uniform() * 2.0 - 1.0};
            e.action = static_cast<int>(rng.uniform_below(2));
            e.terminal = true;
            store.push_back(e);
        }
        std::vector<const Experience*> batch;
        std::vector<double> ys;
        for (const Experience& e : store) {
            batch.push_back(&e);
            ys.push_back(rng.uniform() * 2.0 - 1.0);
        }

        std::vector<double> grads;
        loss_and_gradient(net, batch, ys, grads);

        const double h = 1e-5;
        std::vector<bool> pat_up, pat_down;
        for (std::size_t p = 0; p < net.params.size(); p += 3) {
            const double saved = net.params[p];
            net.params[p] = saved + h;
            const double up = batch_loss(net, batch, ys, &pat_up);
            net.params[p] = saved - h;
            const double down = batch_loss(net, batch, ys, &pat_down);
            net.params[p] = saved;
            if (pat_up != pat_down) continue;  // the step crossed a rectifier kink
            const double numeric = (up - down) / (2.0 * h);
            const double scale = std::max({1.0, std::fabs(numeric), std::fabs(grads[p])});
            CHECK(std::fabs(numeric - grads[p]) / scale < 1e-4);
        }
    }
}

TEST_CASE("first Adam step on a quadratic moves by the learning rate") {
    // L(w) = (w - 1)^2 from w = 101: gradient 200, first bias-corrected
    // step has magnitude alpha up to the epsilon guard
    std::vector<double> w{101.0};
    std::vector<double> g{2.0 * (w[0] - 1.0)};
    AdamState adam(1, 0.001);
    adam.update(w, g);
    CHECK(std::fabs(std::fabs(101.0 - w[0]) - 0.001) < 1e-12);
    CHECK(w[0] < 101.0);  // moved toward the minimum
}

TEST_CASE("a batch of identical samples matches the single-sample update") {
    const QNetwork init = random_net({2, 6, 3}, 5);
    Experience e{{0.4, -0.7}, 1, 0.8, {0.0, 0.0}, true};

    QNetwork n1 = init;
    AdamState a1(n1.params.size(), 0.01);
    const std::vector<const Experience*> single{&e};
    const double l1 = train_step(n1, init, a1, single, 1.0);

    QNetwork n4 = init;
    AdamState a4(n4.params.size(), 0.01);
    const std::vector<const Experience*> quad{&e, &e, &e, &e};
    const double l4 = train_step(n4, init, a4, quad, 1.0);

    CHECK_THAT(l4, Catch::Matchers::WithinRel(l1, 1e-12));
    for (std::size_t i = 0; i < n1.params.size(); ++i) {
        CHECK_THAT(n4.params[i], Catch::Matchers::WithinAbs(n1.params[i], 1e-12));
    }
}

TEST_CASE("select_action explores uniformly and exploits the argmax") {
    QNetwork net = QNetwork::zeros({2, 3});
    net.params[net.bias_offset(0) + 0] = 1.0;
    net.params[net.bias_offset(0) + 1] = 3.0;
    net.params[net.bias_offset(0) + 2] = 2.0;
    const std::vector<double> s{0.0, 0.0};

    Rng rng(31);
    std::vector<int> freq(3, 0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) freq[static_cast<std::size_t>(select_action(net, s, 1.0, rng))] += 1;
    const double expected = n / 3.0;
    const double sigma = std::sqrt(n * (1.0 / 3.0) * (2.0 / 3.0));
    for (int a = 0; a < 3; ++a) CHECK(std::fabs(freq[static_cast<std::size_t>(a)] - expected) < 3.0 * sigma);

    for (int i = 0; i < 100; ++i) CHECK(select_action(net, s, 0.0, rng) == 1);

    // exact tie between actions 0 and 2: lowest index wins
    net.params[net.bias_offset(0) + 0] = 5.0;
    net.params[net.bias_offset(0) + 1] = 4.0;
    net.params[net.bias_offset(0) + 2] = 5.0;
    CHECK(select_action(net, s, 0.0, rng) == 0);

    CHECK_THROWS_AS(select_action(net, s, 1.5, rng), std::invalid_argument);
}

TEST_CASE("replay memory is bounded and evicts strictly oldest-first") {
    ReplayMemory mem(5);
    for (int i = 0; i < 9; ++i) {
        Experience e;
        e.reward = static_cast<double>(i);
        mem.push(e);
        CHECK(mem.size() <= 5);
    }
    REQUIRE(mem.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(mem.at(static_cast<std::size_t>(i)).reward == static_cast<double>(4 + i));
    }
}

TEST_CASE("replay sampling is without replacement and uniform") {
    ReplayMemory mem(100);
    for (int i = 0; i < 100; ++i) {
        Experience e;
        e.reward = static_cast<double>(i);
        mem.push(e);
    }
    Rng rng(47);
    std::vector<int> freq(100, 0);
    const int rounds = 10000;
    for (int r = 0; r < rounds; ++r) {
        const auto batch = mem.sample(64, rng);
        std::vector<bool> seen(100, false);
        for (const Experience* e : batch) {
            const int idx = static_cast<int>(e->reward);
            CHECK_FALSE(seen[static_cast<std::size_t>(idx)]);
            seen[static_cast<std::size_t>(idx)] = true;
            freq[static_cast<std::size_t>(idx)] += 1;
        }
    }
    const double expected = rounds * 0.64;
    const double sigma = std::sqrt(rounds * 0.64 * 0.36);
    for (int i = 0; i < 100; ++i) {
        CHECK(std::fabs(freq[static_cast<std::size_t>(i)] - expected) < 4.0 * sigma);
    }
    CHECK_THROWS_AS(mem.sample(101, rng), std::invalid_argument);
}

TEST_CASE("greedy policy is pure and invariant to a shared head shift") {
    QNetwork net = random_net({2, 8, 3}, 21);
    const GreedyPolicy pi{&net};
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> s{rng.uniform() * 5.0, rng.uniform() * 5.0};
        const int a = pi(s);
        CHECK(pi(s) == a);
        QNetwork shifted = net;
        for (std::size_t b = shifted.bias_offset(1); b < shifted.params.size(); ++b) {
            shifted.params[b] += 11.5;
        }
        const GreedyPolicy pi2{&shifted};
        CHECK(pi2(s) == a);
    }

    QNetwork dominant = QNetwork::zeros({2, 3});
    dominant.params[dominant.bias_offset(0) + 2] = 9.0;
    const GreedyPolicy pi3{&dominant};
    for (int i = 0; i < 20; ++i) {
        CHECK(pi3(std::vector<double>{rng.uniform(), rng.uniform()}) == 2);
    }
}

TEST_CASE("the training loop follows the decay, warm-up and sync schedule") {
    toy::TwoStateEnv env;
    TrainConfig tc;
    tc.hidden = {16, 16};
    tc.episodes = 600;
    tc.batch_size = 64;
    tc.replay_capacity = 300;
    tc.target_sync_period = 16;

    std::vector<double> eps_at;  // eps_at[k] = epsilon after iteration k+1
    bool target_always_synced_on_period = true;
    bool target_differed_somewhere = false;
    auto observer = [&](int64_t iter, double eps, const QNetwork& net, const QNetwork& target) {
        eps_at.push_back(eps);
        if (iter % 16 == 0 && net.params != target.params) target_always_synced_on_period = false;
        if (iter % 16 == 8 && net.params != target.params) target_differed_somewhere = true;
    };
    const TrainResult result = train(env, tc, 2024, observer);

    REQUIRE(result.log.total_iterations >= 600);
    CHECK_THAT(eps_at[9], Catch::Matchers::WithinAbs(std::pow(0.99, 10), 1e-12));
    CHECK(result.log.epsilon_min_iteration == 459);
    CHECK(eps_at[458] == 0.01);
    CHECK(eps_at.back() == 0.01);
    CHECK(target_always_synced_on_period);
    CHECK(target_differed_somewhere);

    // no optimizer step can run before the replay holds one full batch
    int64_t iterations_seen = 0;
    for (const EpisodeStats& e : result.log.episodes) {
        if (iterations_seen + e.length <= 63) CHECK(e.loss_mean == 0.0);
        iterations_seen += e.length;
    }
    CHECK(iterations_seen == result.log.total_iterations);
}

TEST_CASE("training is reproducible from the seed") {
    auto run = [] {
        toy::TwoStateEnv env;
        TrainConfig tc;
        tc.hidden = {8, 8};
        tc.episodes = 200;
        tc.batch_size = 16;
        tc.replay_capacity = 128;
        return train(env, tc, 77);
    };
    const TrainResult a = run();
    const TrainResult b = run();
    CHECK(a.net.params == b.net.params);
    REQUIRE(a.log.episodes.size() == b.log.episodes.size());
    for (std::size_t i = 0; i < a.log.episodes.size(); ++i) {
        CHECK(a.log.episodes[i].loss_mean == b.log.episodes[i].loss_mean);
        CHECK(a.log.episodes[i].return_ == b.log.episodes[i].return_);
        CHECK(a.log.episodes[i].avg_action_value == b.log.episodes[i].avg_action_value);
        CHECK(a.log.episodes[i].epsilon == b.log.episodes[i].epsilon);
        CHECK(a.log.episodes[i].length == b.log.episodes[i].length);
    }
}

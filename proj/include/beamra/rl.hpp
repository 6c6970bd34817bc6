#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace beamra {

/// Fully connected value network: rectified hidden layers, linear output.
/// Parameters live in one flat vector, layer by layer, weights (row-major,
/// one row per output unit) followed by biases.
struct QNetwork {
    std::vector<int> layer_sizes;  // {in, hidden..., out}
    std::vector<double> params;

    static std::size_t param_count(const std::vector<int>& sizes) {
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            n += static_cast<std::size_t>(sizes[l]) * static_cast<std::size_t>(sizes[l + 1]) +
                 static_cast<std::size_t>(sizes[l + 1]);
        }
        return n;
    }

    static QNetwork zeros(std::vector<int> sizes) {
        if (sizes.size() < 2) throw std::invalid_argument("QNetwork: need at least input and output layers");
        QNetwork net;
        net.params.assign(param_count(sizes), 0.0);
        net.layer_sizes = std::move(sizes);
        return net;
    }

    /// Glorot-uniform weights, zero biases.
    static QNetwork glorot(std::vector<int> sizes, Rng& rng) {
        QNetwork net = zeros(std::move(sizes));
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
            const int in = net.layer_sizes[l];
            const int out = net.layer_sizes[l + 1];
            const double bound = std::sqrt(6.0 / (in + out));
            for (int i = 0; i < in * out; ++i) {
                net.params[off + static_cast<std::size_t>(i)] = (2.0 * rng.uniform() - 1.0) * bound;
            }
            off += static_cast<std::size_t>(in) * static_cast<std::size_t>(out) + static_cast<std::size_t>(out);
        }
        return net;
    }

    std::size_t n_layers() const { return layer_sizes.size() - 1; }
    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }

    std::size_t weight_offset(std::size_t layer) const {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) {
            off += static_cast<std::size_t>(layer_sizes[l]) * static_cast<std::size_t>(layer_sizes[l + 1]) +
                   static_cast<std::size_t>(layer_sizes[l + 1]);
        }
        return off;
    }
    std::size_t bias_offset(std::size_t layer) const {
        return weight_offset(layer) +
               static_cast<std::size_t>(layer_sizes[layer]) * static_cast<std::size_t>(layer_sizes[layer + 1]);
    }
};

namespace detail {

/// Forward pass writing every layer's activation into `acts` (acts[0] is
/// the input, acts.back() the linear output).
inline void forward_cached(const QNetwork& net, std::span<const double> input,
                           std::vector<std::vector<double>>& acts) {
    const std::size_t layers = net.n_layers();
    acts.resize(layers + 1);
    acts[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = net.layer_sizes[l];
        const int out = net.layer_sizes[l + 1];
        const double* w = net.params.data() + net.weight_offset(l);
        const double* b = net.params.data() + net.bias_offset(l);
        acts[l + 1].assign(static_cast<std::size_t>(out), 0.0);
        const double* x = acts[l].data();
        double* y = acts[l + 1].data();
        for (int o = 0; o < out; ++o) {
            double acc = b[o];
            const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
            for (int i = 0; i < in; ++i) acc += row[i] * x[i];
            y[o] = (l + 1 < layers) ? (acc > 0.0 ? acc : 0.0) : acc;
        }
    }
}

}  // namespace detail

/// Action values for one state.
inline std::vector<double> forward(const QNetwork& net, std::span<const double> state) {
    if (state.size() != static_cast<std::size_t>(net.input_dim())) {
        throw std::invalid_argument("forward: state length does not match the input layer");
    }
    std::vector<std::vector<double>> acts;
    detail::forward_cached(net, state, acts);
    return acts.back();
}

/// Argmax with ties broken toward the lowest index.
inline int argmax(std::span<const double> values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
}

/// Adam optimizer state over one flat parameter vector.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int64_t step_count = 0;
    std::vector<double> m, v;

    explicit AdamState(std::size_t n_params, double lr = 1e-3)
        : learning_rate(lr), m(n_params, 0.0), v(n_params, 0.0) {}

    void update(std::span<double> params, std::span<const double> grads) {
        if (params.size() != m.size() || grads.size() != m.size()) {
            throw std::invalid_argument("AdamState::update: size mismatch");
        }
        ++step_count;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            params[i] -= learning_rate * mhat / (std::sqrt(vhat) + epsilon);
        }
    }
};

struct Experience {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

/// Bounded FIFO store of experiences; once full, each push evicts the
/// oldest entry.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("ReplayMemory: capacity must be positive");
        buf_.reserve(capacity_);
    }

    void push(Experience e) {
        if (buf_.size() < capacity_) {
            buf_.push_back(std::move(e));
        } else {
            buf_[head_] = std::move(e);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return buf_.size(); }
    std::size_t capacity() const { return capacity_; }

    /// Entry by age: at(0) is the oldest stored experience.
    const Experience& at(std::size_t i) const { return buf_[(head_ + i) % buf_.size()]; }

    /// Uniform sample of `k` distinct entries (partial Fisher-Yates).
    std::vector<const Experience*> sample(std::size_t k, Rng& rng) const {
        if (k > buf_.size()) throw std::invalid_argument("ReplayMemory::sample: not enough entries");
        std::vector<std::size_t> idx(buf_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<const Experience*> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + rng.uniform_below(idx.size() - i);
            std::swap(idx[i], idx[j]);
            out.push_back(&at(idx[i]));
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Experience> buf_;
};

/// Double-Q targets: the prediction network chooses the next action, the
/// target network values it. Terminal transitions take the bare reward.
inline std::vector<double> td_targets(std::span<const Experience* const> batch, const QNetwork& net,
                                      const QNetwork& target_net, double gamma) {
    if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
    std::vector<double> ys;
    ys.reserve(batch.size());
    for (const Experience* e : batch) {
        if (e->terminal) {
            ys.push_back(e->reward);
        } else {
            const std::vector<double> next_q = forward(net, e->next_state);
            const int a_star = argmax(next_q);
            const std::vector<double> target_q = forward(target_net, e->next_state);
            ys.push_back(e->reward + gamma * target_q[static_cast<std::size_t>(a_star)]);
        }
    }
    return ys;
}

namespace detail {

/// Backpropagates d(loss)/d(output) for one sample, accumulating into
/// `grads` (flat, same layout as the parameters).
inline void backward_accumulate(const QNetwork& net, const std::vector<std::vector<double>>& acts,
                                std::vector<double>& dout, std::vector<double>& grads,
                                std::vector<double>& din) {
    const std::size_t layers = net.n_layers();
    for (std::size_t l = layers; l-- > 0;) {
        const int in = net.layer_sizes[l];
        const int out = net.layer_sizes[l + 1];
        const double* w = net.params.data() + net.weight_offset(l);
        double* gw = grads.data() + net.weight_offset(l);
        double* gb = grads.data() + net.bias_offset(l);
        const double* x = acts[l].data();
        din.assign(static_cast<std::size_t>(in), 0.0);
        for (int o = 0; o < out; ++o) {
            const double d = dout[static_cast<std::size_t>(o)];
            if (d == 0.0) continue;
            gb[o] += d;
            const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
            double* grow = gw + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
            for (int i = 0; i < in; ++i) {
                grow[i] += d * x[i];
                din[static_cast<std::size_t>(i)] += d * row[i];
            }
        }
        if (l > 0) {
            // rectifier gate of the layer below
            for (int i = 0; i < in; ++i) {
                if (acts[l][static_cast<std::size_t>(i)] <= 0.0) din[static_cast<std::size_t>(i)] = 0.0;
            }
            dout = din;
        }
    }
}

}  // namespace detail

/// Mean squared error between the taken actions' values and fixed
/// targets, with the full parameter gradient written into `grads`.
/// Gradients flow only through the taken action of each sample.
inline double loss_and_gradient(const QNetwork& net, std::span<const Experience* const> batch,
                                std::span<const double> targets, std::vector<double>& grads) {
    if (batch.empty() || batch.size() != targets.size()) {
        throw std::invalid_argument("loss_and_gradient: batch/target size mismatch");
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    grads.assign(net.params.size(), 0.0);
    std::vector<std::vector<double>> acts;
    std::vector<double> dout, din;
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Experience* e = batch[i];
        detail::forward_cached(net, e->state, acts);
        const double q = acts.back()[static_cast<std::size_t>(e->action)];
        const double delta = q - targets[i];
        loss += delta * delta * inv_b;
        dout.assign(acts.back().size(), 0.0);
        dout[static_cast<std::size_t>(e->action)] = 2.0 * delta * inv_b;
        detail::backward_accumulate(net, acts, dout, grads, din);
    }
    return loss;
}

/// Computes double-Q targets, backpropagates the mean-squared TD error
/// through the taken actions, and applies one Adam update. Returns the
/// pre-update loss.
inline double train_step(QNetwork& net, const QNetwork& target_net, AdamState& adam,
                         std::span<const Experience* const> batch, double gamma) {
    const std::vector<double> ys = td_targets(batch, net, target_net, gamma);
    std::vector<double> grads;
    const double loss = loss_and_gradient(net, batch, ys, grads);
    if (!std::isfinite(loss)) {
        throw std::runtime_error("train_step: non-finite loss (step " +
                                 std::to_string(adam.step_count + 1) + ")");
    }
    adam.update(net.params, grads);
    return loss;
}

/// Epsilon-greedy action choice: with probability epsilon a uniform
/// random action, otherwise the argmax of the action values (ties to the
/// lowest index). Draws one uniform for the branch and, only on the
/// random branch, one more for the action.
inline int select_action(const QNetwork& net, std::span<const double> state, double epsilon, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("select_action: epsilon must be in [0, 1]");
    }
    if (rng.uniform() < epsilon) {
        return static_cast<int>(rng.uniform_below(static_cast<uint64_t>(net.output_dim())));
    }
    const std::vector<double> q = forward(net, state);
    return argmax(q);
}

/// Deterministic greedy policy over a trained network.
struct GreedyPolicy {
    const QNetwork* net;

    int operator()(std::span<const double> state) const { return argmax(forward(*net, state)); }
};

struct TrainConfig {
    std::vector<int> hidden{64, 64};
    double learning_rate = 1e-3;
    double gamma = 1.0;
    double epsilon_min = 0.01;
    double epsilon_decay = 0.99;
    std::size_t replay_capacity = 1200;
    std::size_t batch_size = 64;
    int target_sync_period = 16;
    int64_t episodes = 20000;
    double state_scale = 1.0;  // multiplies every observation fed to the network
};

struct EpisodeStats {
    int64_t episode = 0;  // 1-based
    int length = 0;
    double loss_mean = 0.0;  // 0 when no optimizer step ran this episode
    double return_ = 0.0;
    double avg_action_value = 0.0;
    double epsilon = 0.0;
};

struct TrainingLog {
    std::vector<EpisodeStats> episodes;
    int64_t total_iterations = 0;
    int64_t epsilon_min_iteration = -1;  // first iteration with epsilon clamped to the minimum
    int64_t truncated_episodes = 0;
};

struct TrainResult {
    QNetwork net;
    TrainingLog log;
};

struct NullObserver {
    template <typename... Args>
    void operator()(Args&&...) const {}
};

/// The training loop. `Env` must provide reset() -> state vector,
/// step(int) -> StepResult-like {state, reward, terminal, truncated},
/// state_dim() and n_actions().
///
/// Per iteration (one environment slot): act epsilon-greedily, push the
/// transition, take one optimizer step once the replay holds a full
/// batch, decay epsilon, and copy the online weights into the target
/// network every `target_sync_period` iterations (global count). The
/// observer is called as obs(iteration, epsilon, net, target_net) at the
/// end of every iteration.
template <typename Env, typename Observer = NullObserver>
TrainResult train(Env& env, const TrainConfig& tc, uint64_t seed, Observer&& obs = {}) {
    Rng init_rng = Rng::substream(seed, "init");
    Rng egreedy_rng = Rng::substream(seed, "egreedy");
    Rng replay_rng = Rng::substream(seed, "replay");

    std::vector<int> sizes;
    sizes.push_back(static_cast<int>(env.state_dim()));
    for (int h : tc.hidden) sizes.push_back(h);
    sizes.push_back(static_cast<int>(env.n_actions()));

    TrainResult result{QNetwork::glorot(std::move(sizes), init_rng), {}};
    QNetwork& net = result.net;
    QNetwork target_net = net;
    AdamState adam(net.params.size(), tc.learning_rate);
    ReplayMemory replay(tc.replay_capacity);
    TrainingLog& log = result.log;

    double epsilon = 1.0;
    int64_t iteration = 0;
    const int n_actions = net.output_dim();

    for (int64_t episode = 1; episode <= tc.episodes; ++episode) {
        std::vector<double> state = env.reset();
        if (tc.state_scale != 1.0) {
            for (double& x : state) x *= tc.state_scale;
        }

        EpisodeStats stats;
        stats.episode = episode;
        double loss_sum = 0.0;
        int loss_count = 0;
        double q_sum = 0.0;
        double discount = 1.0;
        bool truncated = false;

        for (;;) {
            const std::vector<double> q_now = forward(net, state);
            for (double q : q_now) q_sum += q;

            int action;
            if (egreedy_rng.uniform() < epsilon) {
                action = static_cast<int>(egreedy_rng.uniform_below(static_cast<uint64_t>(n_actions)));
            } else {
                action = argmax(q_now);
            }

            auto sr = env.step(action);
            std::vector<double> next_state = std::move(sr.state);
            if (tc.state_scale != 1.0) {
                for (double& x : next_state) x *= tc.state_scale;
            }

            replay.push(Experience{state, action, sr.reward, next_state, sr.terminal});
            if (replay.size() >= tc.batch_size) {
                const auto batch = replay.sample(tc.batch_size, replay_rng);
                loss_sum += train_step(net, target_net, adam, batch, tc.gamma);
                loss_count += 1;
            }

            ++iteration;
            if (epsilon > tc.epsilon_min) {
                epsilon *= tc.epsilon_decay;
                if (epsilon < tc.epsilon_min) {
                    epsilon = tc.epsilon_min;
                    if (log.epsilon_min_iteration < 0) log.epsilon_min_iteration = iteration;
                }
            }
            if (iteration % tc.target_sync_period == 0) target_net = net;

            stats.length += 1;
            stats.return_ += discount * sr.reward;
            discount *= tc.gamma;
            truncated = sr.truncated;

            obs(iteration, epsilon, net, target_net);

            if (sr.terminal) break;
            state = std::move(next_state);
        }

        stats.loss_mean = loss_count > 0 ? loss_sum / loss_count : 0.0;
        stats.avg_action_value = q_sum / (static_cast<double>(stats.length) * n_actions);
        stats.epsilon = epsilon;
        log.episodes.push_back(stats);
        if (truncated) log.truncated_episodes += 1;
    }
    log.total_iterations = iteration;
    return result;
}

}  // namespace beamra

// Minimax deep Q-learning for the DoS games: a centralized learner over joint
// actions and a distributed pair of per-side learners.
#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rse/error.hpp"
#include "rse/game_closed.hpp"
#include "rse/game_open.hpp"
#include "rse/neural.hpp"
#include "rse/random.hpp"

namespace rse {

// `action` is a joint index for the centralized learner and an own-side index
// for either distributed agent.
struct TransitionRecord {
    Vector state;
    std::size_t action = 0;
    double reward = 0.0;
    Vector next_state;
};

/// Bounded FIFO replay memory with uniform sampling (with replacement).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw InvalidArgument("replay capacity must be positive");
        records_.reserve(capacity_);
    }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return records_.size(); }

    void push(TransitionRecord record) {
        if (records_.size() < capacity_) {
            records_.push_back(std::move(record));
        } else {
            records_[head_] = std::move(record);
            head_ = (head_ + 1) % capacity_;
        }
    }

    // i = 0 is the oldest stored record.
    const TransitionRecord &at(std::size_t i) const {
        if (i >= records_.size()) throw InvalidArgument("replay index out of range");
        return records_[(head_ + i) % records_.size()];
    }

    std::vector<std::size_t> sample_indices(std::size_t batch, Rng &rng) const {
        if (records_.size() < batch || batch == 0)
            throw BufferTooSmall("replay holds " + std::to_string(records_.size()) + " records, batch needs " +
                                 std::to_string(batch));
        std::vector<std::size_t> idx(batch);
        for (auto &i : idx) i = rng.below(records_.size());
        return idx;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<TransitionRecord> records_;
};

// ---------------------------------------------------------------------------
// Action selection and TD targets

/// Pure max-min value of a Q table indexed [alpha][beta].
inline double maxmin_value(const std::vector<std::vector<double>> &q) {
    const auto [a, b] = maxmin_cell(q);
    return q[a][b];
}

// Flat joint row (index alpha * 2^n + beta) to a [alpha][beta] table.
inline std::vector<std::vector<double>> joint_table(std::span<const double> row, std::size_t n) {
    const std::size_t sides = side_action_count(n);
    if (row.size() != sides * sides) throw DimensionMismatch("joint Q row has wrong length");
    std::vector<std::vector<double>> q(sides, std::vector<double>(sides));
    for (std::size_t a = 0; a < sides; ++a)
        for (std::size_t b = 0; b < sides; ++b) q[a][b] = row[a * sides + b];
    return q;
}

/// y = r + rho * max_beta min_alpha q_next[alpha][beta]
inline double minimax_target(double reward, double rho, const std::vector<std::vector<double>> &q_next) {
    return reward + rho * maxmin_value(q_next);
}

/// Greedy joint action for one state's Q row (length 2^(2n)).
inline JointAction greedy_joint(std::span<const double> q_row, std::size_t n) {
    const auto [a, b] = maxmin_cell(joint_table(q_row, n));
    return JointAction{decode_side(a, n), decode_side(b, n)};
}

inline std::size_t argmin_index(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[best]) best = i;
    return best;
}

inline std::size_t argmax_index(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

/// One uniform draw u: explore when u < epsilon, picking action floor(u/epsilon * count).
inline std::size_t epsilon_greedy(std::size_t greedy, std::size_t count, double epsilon, Rng &rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon must lie in [0, 1]");
    const double u = rng.uniform();
    if (u < epsilon) return std::min(count - 1, static_cast<std::size_t>(u / epsilon * static_cast<double>(count)));
    return greedy;
}

// ---------------------------------------------------------------------------
// Configuration and results

struct LearnerConfig {
    double rho = 0.8;
    double eta = 0.1;            // centralized network, and the device network in distributed mode
    double eta_attacker = 0.01;  // attacker network (distributed)
    double epsilon = 0.9;
    // Exploration anneals linearly from `epsilon` to `epsilon_final` over
    // `epsilon_decay_steps` steps; 0 decay steps keeps it constant.
    double epsilon_final = 0.9;
    std::size_t epsilon_decay_steps = 0;
    std::size_t sync_period = 100;
    std::size_t batch_size = 32;
    std::size_t replay_capacity = 10000;
    std::size_t max_episodes = 40;
    std::size_t episode_length = 500;
    double convergence_threshold = 1e-4;
    std::size_t convergence_window = 200;
    std::vector<std::size_t> hidden_layers{64};
    // Per-sample TD error is clipped to +-td_error_clip in the gradient (infinity: off).
    double td_error_clip = std::numeric_limits<double>::infinity();
    std::size_t log_every = 10;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho", "discount must lie in (0, 1)");
        if (!(eta > 0.0)) throw ValidationError("eta", "must be > 0");
        if (!(eta_attacker > 0.0)) throw ValidationError("eta_attacker", "must be > 0");
        if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon", "must lie in (0, 1]");
        if (!(epsilon_final >= 0.0 && epsilon_final <= 1.0)) throw ValidationError("epsilon_final", "must lie in [0, 1]");
        if (sync_period == 0) throw ValidationError("sync_period", "must be > 0");
        if (batch_size == 0) throw ValidationError("batch_size", "must be > 0");
        if (replay_capacity < batch_size) throw ValidationError("replay_capacity", "must be >= batch_size");
        if (max_episodes == 0) throw ValidationError("max_episodes", "must be > 0");
        if (episode_length == 0) throw ValidationError("episode_length", "must be > 0");
        if (!(convergence_threshold > 0.0)) throw ValidationError("convergence_threshold", "must be > 0");
        if (convergence_window == 0) throw ValidationError("convergence_window", "must be > 0");
        if (!(td_error_clip > 0.0)) throw ValidationError("td_error_clip", "must be > 0");
        if (log_every == 0) throw ValidationError("log_every", "must be > 0");
        for (std::size_t h : hidden_layers)
            if (h == 0) throw ValidationError("hidden_layers", "sizes must be > 0");
    }

    std::size_t step_cap() const noexcept { return max_episodes * episode_length; }

    double epsilon_at(std::size_t step) const noexcept {
        if (epsilon_decay_steps == 0) return epsilon;
        const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(epsilon_decay_steps));
        return epsilon + (epsilon_final - epsilon) * frac;
    }
};

/// Chosen joint action per probe state.
struct PolicyTable {
    std::vector<std::string> state_ids;
    std::vector<JointAction> actions;
};

// Own-side policy of one distributed agent, keyed by visited state id.
using SidePolicy = std::map<std::string, std::size_t>;

struct LogRecord {
    std::size_t step = 0;
    std::size_t episode = 0;
    std::string state_id;
    JointAction action;
    double reward = 0.0;
    double loss_device = std::numeric_limits<double>::quiet_NaN();
    double loss_attacker = std::numeric_limits<double>::quiet_NaN();
    Vector q_probe;
};

struct EpisodeLog {
    std::vector<std::string> q_columns;
    std::vector<LogRecord> records;  // every `log_every` steps plus the last one
    // Per step; NaN before the replay memory holds a full batch.
    std::vector<double> device_losses;
    std::vector<double> attacker_losses;
    std::vector<std::size_t> joint_actions;
    std::size_t steps = 0;
    bool converged = false;
    // Q-table cells scanned to choose one greedy behavior action.
    std::size_t argext_evaluations_per_step = 0;
};

// ---------------------------------------------------------------------------
// Environments

template <class E>
concept GameEnvironment = requires(const E &env, const typename E::State &s, const JointAction &a) {
    { env.devices() } -> std::convertible_to<std::size_t>;
    { env.initial_state() } -> std::same_as<typename E::State>;
    { env.transition(s, a) } -> std::same_as<std::pair<typename E::State, double>>;
    { env.features(s) } -> std::same_as<Vector>;
    { env.feature_size() } -> std::convertible_to<std::size_t>;
    { env.state_id(s) } -> std::same_as<std::string>;
    { env.needs_reset(s) } -> std::same_as<bool>;
    { env.probe_states() } -> std::same_as<std::vector<typename E::State>>;
};

enum class FeatureTransform { raw, log };

/// Open-loop game over the error covariance. Features are the upper triangle of P,
/// optionally compressed entrywise by sign(p) * ln(1 + |p|).
class OpenLoopEnv {
public:
    using State = ErrorCovariance;

    OpenLoopEnv(DiscountedGame game, FeatureTransform transform = FeatureTransform::raw,
                double reset_trace = std::numeric_limits<double>::infinity())
        : game_(std::move(game)), steady_(steady_state_covariance(game_.model)), transform_(transform),
          reset_trace_(reset_trace) {}

    const DiscountedGame &game() const noexcept { return game_; }
    const ErrorCovariance &steady_state() const noexcept { return steady_; }
    std::size_t devices() const noexcept { return game_.devices(); }
    State initial_state() const { return steady_; }

    std::pair<State, double> transition(const State &s, const JointAction &a) const {
        StepResult r = step(s, a, game_);
        return {std::move(r.next), r.reward};
    }

    std::size_t feature_size() const noexcept {
        const std::size_t m = game_.model.state_dim();
        return m * (m + 1) / 2;
    }

    Vector features(const State &s) const {
        const Matrix &p = s.matrix();
        Vector f;
        f.reserve(feature_size());
        for (std::size_t i = 0; i < p.rows(); ++i)
            for (std::size_t j = i; j < p.cols(); ++j) {
                const double v = p(i, j);
                f.push_back(transform_ == FeatureTransform::log ? std::copysign(std::log1p(std::abs(v)), v) : v);
            }
        return f;
    }

    // Under sustained loss an unstable process diverges; the episode restarts from
    // the steady state once trace(P) exceeds the reset threshold.
    bool needs_reset(const State &s) const { return s.trace() > reset_trace_; }

    std::string state_id(const State &s) const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "tr=%.9g", s.trace());
        return buf;
    }

    /// The steady state followed by one step under each arrival mask except all-ones,
    /// ordered by mask index descending (for n = 2: (1,0), (0,1), (0,0)).
    std::vector<State> probe_states() const {
        std::vector<State> probes{steady_};
        const std::size_t n = devices();
        for (std::size_t m = side_action_count(n) - 1; m-- > 0;)
            probes.push_back(masked_update(steady_, decode_side(m, n), game_.model));
        return probes;
    }

private:
    DiscountedGame game_;
    ErrorCovariance steady_;
    FeatureTransform transform_;
    double reset_trace_;
};

/// Closed-loop game over the shared belief matrix.
class ClosedLoopEnv {
public:
    using State = BeliefMatrix;

    ClosedLoopEnv(PowerSchedule powers, PerModel per, CostSchedule costs, BeliefMatrix initial,
                  std::vector<BeliefMatrix> probes)
        : powers_(std::move(powers)), per_(std::move(per)), costs_(std::move(costs)), initial_(std::move(initial)),
          probes_(std::move(probes)) {
        powers_.validate(initial_.devices());
        costs_.validate(initial_.devices());
        for (const auto &p : probes_)
            if (p.matrix().rows() != initial_.matrix().rows() || p.matrix().cols() != initial_.matrix().cols())
                throw DimensionMismatch("probe belief shape differs from the initial belief");
    }

    std::size_t devices() const noexcept { return initial_.devices(); }
    State initial_state() const { return initial_; }

    std::pair<State, double> transition(const State &s, const JointAction &a) const {
        BeliefStepResult r = belief_game_step(s, a, powers_, per_, costs_);
        return {std::move(r.next), r.reward};
    }

    std::size_t feature_size() const noexcept { return initial_.matrix().rows() * initial_.matrix().cols(); }

    Vector features(const State &s) const {
        const auto e = s.matrix().entries();
        return Vector(e.begin(), e.end());
    }

    std::string state_id(const State &s) const {
        std::string id = "B=";
        char buf[32];
        const auto e = s.matrix().entries();
        for (std::size_t k = 0; k < e.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%s%.9g", k ? "/" : "", e[k]);
            id += buf;
        }
        return id;
    }

    std::vector<State> probe_states() const { return probes_; }
    bool needs_reset(const State &) const { return false; }

    const PowerSchedule &powers() const noexcept { return powers_; }
    const CostSchedule &costs() const noexcept { return costs_; }

private:
    PowerSchedule powers_;
    PerModel per_;
    CostSchedule costs_;
    BeliefMatrix initial_;
    std::vector<BeliefMatrix> probes_;
};

// ---------------------------------------------------------------------------
// Learners

namespace detail {

inline std::vector<std::size_t> network_shape(std::size_t inputs, const std::vector<std::size_t> &hidden,
                                              std::size_t outputs) {
    std::vector<std::size_t> sizes{inputs};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(outputs);
    return sizes;
}

// SGD step on the squared TD error, with the per-sample error optionally clipped in
// the gradient. Returns the unclipped mean squared error before the update.
inline double clipped_train_step(QNetwork &net, const TrainBatch &batch, double eta, double clip) {
    if (!std::isfinite(clip)) return net.train_step(batch, eta);
    TrainBatch clipped = batch;
    double loss = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const double q = net.forward(batch.inputs[s])[batch.action_indices[s]];
        const double err = batch.targets[s] - q;
        loss += err * err;
        clipped.targets[s] = q + std::clamp(err, -clip, clip);
    }
    net.train_step(clipped, eta);
    loss /= static_cast<double>(batch.size());
    if (!std::isfinite(loss)) throw NonFinite("training loss is not finite; learning rate too large?");
    return loss;
}

inline double max_abs_change(const Vector &a, const Vector &b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// Tracks the probe-state Q rows and reports when their max-abs change stayed below
// the threshold for `window` consecutive steps.
class ConvergenceMonitor {
public:
    ConvergenceMonitor(double threshold, std::size_t window) : threshold_(threshold), window_(window) {}

    bool update(const Vector &probe_q) {
        if (!previous_.empty() && max_abs_change(previous_, probe_q) < threshold_)
            ++calm_;
        else
            calm_ = 0;
        previous_ = probe_q;
        return calm_ >= window_;
    }

private:
    double threshold_;
    std::size_t window_;
    std::size_t calm_ = 0;
    Vector previous_;
};

} // namespace detail

struct CentralizedResult {
    QNetwork net;
    PolicyTable policy;
    EpisodeLog log;
};

struct DistributedResult {
    QNetwork device_net;
    QNetwork attacker_net;
    PolicyTable policy;
    SidePolicy device_policy;
    SidePolicy attacker_policy;
    EpisodeLog log;
};

/// Centralized: greedy joint action per probe state from the shared network.
template <GameEnvironment Env>
PolicyTable extract_ne(const Env &env, const QNetwork &net) {
    PolicyTable table;
    for (const auto &s : env.probe_states()) {
        table.state_ids.push_back(env.state_id(s));
        table.actions.push_back(greedy_joint(net.forward(env.features(s)), env.devices()));
    }
    return table;
}

/// Distributed: (argmin over the device network, argmax over the attacker network).
template <GameEnvironment Env>
PolicyTable extract_ne(const Env &env, const QNetwork &device_net, const QNetwork &attacker_net) {
    PolicyTable table;
    const std::size_t n = env.devices();
    for (const auto &s : env.probe_states()) {
        const Vector f = env.features(s);
        table.state_ids.push_back(env.state_id(s));
        table.actions.push_back(JointAction{decode_side(argmin_index(device_net.forward(f)), n),
                                            decode_side(argmax_index(attacker_net.forward(f)), n)});
    }
    return table;
}

/// Centralized Minimax-DQN. One shared network maps a state to 2^(2n) joint Q-values;
/// targets use the max-min of the target network at the next state.
template <GameEnvironment Env>
CentralizedResult run_centralized(const Env &env, const LearnerConfig &cfg) {
    cfg.validate();
    const std::size_t n = env.devices();
    const std::size_t sides = side_action_count(n);
    const std::size_t joint = joint_action_count(n);
    Rng rng(cfg.seed);
    QNetwork online(detail::network_shape(env.feature_size(), cfg.hidden_layers, joint), rng);
    QNetwork target = sync_target(online);
    ReplayBuffer memory(cfg.replay_capacity);

    const auto probes = env.probe_states();
    std::vector<Vector> probe_features;
    for (const auto &p : probes) probe_features.push_back(env.features(p));

    EpisodeLog log;
    log.argext_evaluations_per_step = sides * sides;
    for (std::size_t p = 0; p < probes.size(); ++p)
        for (std::size_t k = 0; k < joint; ++k) {
            const JointAction a = decode_action(k, n);
            log.q_columns.push_back("q_p" + std::to_string(p) + "_a" + bits_to_string(a.alpha) + "_b" +
                                    bits_to_string(a.beta));
        }

    auto probe_rows = [&] {
        Vector q;
        for (const auto &f : probe_features) {
            const Vector row = online.forward(f);
            q.insert(q.end(), row.begin(), row.end());
        }
        return q;
    };

    detail::ConvergenceMonitor monitor(cfg.convergence_threshold, cfg.convergence_window);
    const std::size_t cap = cfg.step_cap();
    auto state = env.initial_state();
    for (std::size_t k = 0; k < cap; ++k) {
        const std::size_t episode = k / cfg.episode_length;
        if ((k > 0 && k % cfg.episode_length == 0) || env.needs_reset(state)) state = env.initial_state();

        const Vector features = env.features(state);
        const JointAction greedy = greedy_joint(online.forward(features), n);
        const std::size_t chosen = epsilon_greedy(action_index(greedy), joint, cfg.epsilon_at(k), rng);
        const JointAction action = decode_action(chosen, n);
        auto [next, reward] = env.transition(state, action);
        Vector next_features = env.features(next);
        memory.push(TransitionRecord{features, chosen, reward, next_features});

        double loss = std::numeric_limits<double>::quiet_NaN();
        if (memory.size() >= cfg.batch_size) {
            TrainBatch batch;
            for (std::size_t i : memory.sample_indices(cfg.batch_size, rng)) {
                const TransitionRecord &rec = memory.at(i);
                batch.inputs.push_back(rec.state);
                batch.action_indices.push_back(rec.action);
                batch.targets.push_back(
                    minimax_target(rec.reward, cfg.rho, joint_table(target.forward(rec.next_state), n)));
            }
            loss = detail::clipped_train_step(online, batch, cfg.eta, cfg.td_error_clip);
        }
        if ((k + 1) % cfg.sync_period == 0) target = sync_target(online);

        log.device_losses.push_back(loss);
        log.joint_actions.push_back(chosen);
        const Vector q = probe_rows();
        const bool done = monitor.update(q);
        if (k % cfg.log_every == 0 || done || k + 1 == cap)
            log.records.push_back(LogRecord{k, episode, env.state_id(state), action, reward, loss,
                                            std::numeric_limits<double>::quiet_NaN(), q});
        log.steps = k + 1;
        state = std::move(next);
        if (done) {
            log.converged = true;
            break;
        }
    }

    PolicyTable policy = extract_ne(env, online);
    return CentralizedResult{std::move(online), std::move(policy), std::move(log)};
}

/// Distributed Minimax-DQN. The attacker network maps a state to 2^n values over beta
/// and is trained toward r + rho max_beta Q_a(s'); the device network maps to 2^n
/// values over alpha and is trained toward r + rho min_alpha Q_s(s'). Each agent has
/// its own replay memory and target network and only trains the slot it played.
template <GameEnvironment Env>
DistributedResult run_distributed(const Env &env, const LearnerConfig &cfg) {
    cfg.validate();
    const std::size_t n = env.devices();
    const std::size_t sides = side_action_count(n);
    Rng rng(cfg.seed);
    QNetwork device(detail::network_shape(env.feature_size(), cfg.hidden_layers, sides), rng);
    QNetwork attacker(detail::network_shape(env.feature_size(), cfg.hidden_layers, sides), rng);
    QNetwork device_target = sync_target(device);
    QNetwork attacker_target = sync_target(attacker);
    ReplayBuffer device_memory(cfg.replay_capacity);
    ReplayBuffer attacker_memory(cfg.replay_capacity);
    SidePolicy device_policy;
    SidePolicy attacker_policy;

    const auto probes = env.probe_states();
    std::vector<Vector> probe_features;
    for (const auto &p : probes) probe_features.push_back(env.features(p));

    EpisodeLog log;
    log.argext_evaluations_per_step = 2 * sides;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        for (std::size_t k = 0; k < sides; ++k)
            log.q_columns.push_back("qd_p" + std::to_string(p) + "_a" + bits_to_string(decode_side(k, n)));
        for (std::size_t k = 0; k < sides; ++k)
            log.q_columns.push_back("qa_p" + std::to_string(p) + "_b" + bits_to_string(decode_side(k, n)));
    }

    auto probe_rows = [&] {
        Vector q;
        for (const auto &f : probe_features) {
            const Vector d = device.forward(f);
            const Vector a = attacker.forward(f);
            q.insert(q.end(), d.begin(), d.end());
            q.insert(q.end(), a.begin(), a.end());
        }
        return q;
    };

    auto train = [&](QNetwork &net, const QNetwork &tgt, const ReplayBuffer &memory, double eta, bool maximize) {
        TrainBatch batch;
        for (std::size_t i : memory.sample_indices(cfg.batch_size, rng)) {
            const TransitionRecord &rec = memory.at(i);
            const Vector next_q = tgt.forward(rec.next_state);
            const double ext = maximize ? next_q[argmax_index(next_q)] : next_q[argmin_index(next_q)];
            batch.inputs.push_back(rec.state);
            batch.action_indices.push_back(rec.action);
            batch.targets.push_back(rec.reward + cfg.rho * ext);
        }
        return detail::clipped_train_step(net, batch, eta, cfg.td_error_clip);
    };

    detail::ConvergenceMonitor monitor(cfg.convergence_threshold, cfg.convergence_window);
    const std::size_t cap = cfg.step_cap();
    auto state = env.initial_state();
    for (std::size_t k = 0; k < cap; ++k) {
        const std::size_t episode = k / cfg.episode_length;
        if ((k > 0 && k % cfg.episode_length == 0) || env.needs_reset(state)) state = env.initial_state();

        const Vector features = env.features(state);
        const std::string id = env.state_id(state);
        const std::size_t beta = epsilon_greedy(argmax_index(attacker_target.forward(features)), sides, cfg.epsilon_at(k), rng);
        const std::size_t alpha = epsilon_greedy(argmin_index(device_target.forward(features)), sides, cfg.epsilon_at(k), rng);
        const JointAction action{decode_side(alpha, n), decode_side(beta, n)};
        auto [next, reward] = env.transition(state, action);
        const Vector next_features = env.features(next);
        attacker_memory.push(TransitionRecord{features, beta, reward, next_features});
        device_memory.push(TransitionRecord{features, alpha, reward, next_features});

        // Own-side greedy choice at the visited state, before and after training.
        const std::size_t att_before = argmax_index(attacker.forward(features));
        const std::size_t dev_before = argmin_index(device.forward(features));
        double loss_a = std::numeric_limits<double>::quiet_NaN();
        double loss_d = std::numeric_limits<double>::quiet_NaN();
        if (attacker_memory.size() >= cfg.batch_size) {
            loss_a = train(attacker, attacker_target, attacker_memory, cfg.eta_attacker, true);
            loss_d = train(device, device_target, device_memory, cfg.eta, false);
        }
        const std::size_t att_after = argmax_index(attacker.forward(features));
        const std::size_t dev_after = argmin_index(device.forward(features));
        // Policy entries move only at the visited state, and only when its argext moved.
        if (auto [it, fresh] = attacker_policy.try_emplace(id, att_after); !fresh && att_after != att_before)
            it->second = att_after;
        if (auto [it, fresh] = device_policy.try_emplace(id, dev_after); !fresh && dev_after != dev_before)
            it->second = dev_after;

        if ((k + 1) % cfg.sync_period == 0) {
            attacker_target = sync_target(attacker);
            device_target = sync_target(device);
        }

        log.device_losses.push_back(loss_d);
        log.attacker_losses.push_back(loss_a);
        log.joint_actions.push_back(action_index(action));
        const Vector q = probe_rows();
        const bool done = monitor.update(q);
        if (k % cfg.log_every == 0 || done || k + 1 == cap)
            log.records.push_back(LogRecord{k, episode, id, action, reward, loss_d, loss_a, q});
        log.steps = k + 1;
        state = std::move(next);
        if (done) {
            log.converged = true;
            break;
        }
    }

    PolicyTable policy = extract_ne(env, device, attacker);
    return DistributedResult{std::move(device),        std::move(attacker),       std::move(policy),
                             std::move(device_policy), std::move(attacker_policy), std::move(log)};
}

} // namespace rse

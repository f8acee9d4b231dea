#include <gtest/gtest.h>

#include <set>

#include "rse/drl.hpp"
#include "support.hpp"

using namespace rse;
using rse::test::example_game;

namespace {

// Brute-force pure max-min: attacker picks beta first, devices respond.
double enumerate_maxmin(const std::vector<std::vector<double>> &q) {
    double best = -INFINITY;
    for (std::size_t b = 0; b < q.front().size(); ++b) {
        double worst = INFINITY;
        for (const auto &row : q) worst = std::min(worst, row[b]);
        best = std::max(best, worst);
    }
    return best;
}

LearnerConfig short_config() {
    LearnerConfig cfg;
    cfg.hidden_layers = {16};
    cfg.batch_size = 16;
    cfg.replay_capacity = 500;
    cfg.episode_length = 200;
    cfg.max_episodes = 5;
    cfg.sync_period = 50;
    cfg.eta = 0.01;
    cfg.log_every = 5;
    return cfg;
}

OpenLoopEnv example_env(double rho = 0.8) { return OpenLoopEnv(example_game(rho), FeatureTransform::raw, 100.0); }

ClosedLoopEnv example_closed_env() {
    const PowerSchedule p = test::example_powers();
    const BeliefMatrix b0(Matrix{{1.0, 0.0}, {1.0, 0.0}});
    const BeliefMatrix b1(Matrix{{0.950212931632136, 0.04978706836786395}, {0.8646647167633873, 0.1353352832366127}});
    return ClosedLoopEnv(p, PerModel::exponential(), costs_from_powers(p), b0, {b0, b1});
}

// A network whose output is the constant `row` (all weights zero).
QNetwork constant_net(std::size_t inputs, const Vector &row) {
    std::vector<double> params(inputs * row.size(), 0.0);
    params.insert(params.end(), row.begin(), row.end());
    return QNetwork::from_parameters({inputs, row.size()}, params);
}

} // namespace

TEST(MinimaxTarget, Example) {
    EXPECT_DOUBLE_EQ(minimax_target(2.0, 0.5, {{1.0, 3.0}, {2.0, 0.0}}), 2.5);
}

TEST(MinimaxTarget, MatchesEnumerationOnRandomTables) {
    Rng rng(61);
    for (int c = 0; c < 100; ++c) {
        const std::size_t na = 1 + rng.below(4), nb = 1 + rng.below(4);
        std::vector<std::vector<double>> q(na, std::vector<double>(nb));
        for (auto &row : q)
            for (auto &v : row) v = 10.0 * rng.uniform() - 5.0;
        const double r = rng.uniform(), rho = rng.uniform();
        EXPECT_DOUBLE_EQ(minimax_target(r, rho, q), r + rho * enumerate_maxmin(q));
    }
}

TEST(JointTable, LayoutFollowsActionIndex) {
    Vector row(16);
    for (std::size_t k = 0; k < 16; ++k) row[k] = static_cast<double>(k);
    const auto q = joint_table(row, 2);
    for (std::size_t k = 0; k < 16; ++k) {
        const JointAction a = decode_action(k, 2);
        EXPECT_EQ(q[side_index(a.alpha)][side_index(a.beta)], row[k]);
    }
    EXPECT_THROW(joint_table(Vector(15), 2), DimensionMismatch);
}

TEST(GreedyJoint, OracleRootRowGivesNoAttack) {
    const OracleResult r = tabular_oracle(example_game(), 4, 1e-8);
    Vector row(16);
    for (std::size_t k = 0; k < 16; ++k) {
        const JointAction a = decode_action(k, 2);
        row[k] = r.root_q[side_index(a.alpha)][side_index(a.beta)];
    }
    EXPECT_EQ(greedy_joint(row, 2), (JointAction{{false, false}, {false, false}}));
}

TEST(GreedyJoint, DominantCellAndTies) {
    // Column beta=10 is the only one whose minimum is high; its minimum sits at alpha=01.
    Vector row(16, -1.0);
    for (std::size_t a = 0; a < 4; ++a) row[a * 4 + 2] = 5.0;
    row[1 * 4 + 2] = 4.0;
    EXPECT_EQ(greedy_joint(row, 2), (JointAction{{false, true}, {true, false}}));
    EXPECT_EQ(greedy_joint(Vector(16, 0.0), 2), (JointAction{{false, false}, {false, false}}));
    EXPECT_EQ(argmin_index(Vector{1.0, 0.0, 0.0}), 1u);
    EXPECT_EQ(argmax_index(Vector{2.0, 3.0, 3.0}), 1u);
}

TEST(EpsilonGreedy, ZeroIsGreedy) {
    Rng rng(62);
    for (int k = 0; k < 1000; ++k) EXPECT_EQ(epsilon_greedy(7, 16, 0.0, rng), 7u);
}

TEST(EpsilonGreedy, OneIsUniform) {
    Rng rng(63);
    std::vector<int> counts(4, 0);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) ++counts[epsilon_greedy(0, 4, 1.0, rng)];
    for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / draws, 0.25, 0.01);
}

TEST(EpsilonGreedy, DeterministicAndValidated) {
    Rng a(64), b(64);
    for (int k = 0; k < 100; ++k) EXPECT_EQ(epsilon_greedy(2, 16, 0.5, a), epsilon_greedy(2, 16, 0.5, b));
    EXPECT_THROW(epsilon_greedy(0, 4, 1.5, a), InvalidArgument);
    EXPECT_THROW(epsilon_greedy(0, 4, -0.1, a), InvalidArgument);
}

TEST(ReplayBuffer, KeepsNewestUpToCapacity) {
    ReplayBuffer buf(10);
    for (std::size_t k = 0; k < 15; ++k) buf.push(TransitionRecord{{}, k, 0.0, {}});
    EXPECT_EQ(buf.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(buf.at(i).action, i + 5);
    EXPECT_THROW(buf.at(10), InvalidArgument);
    EXPECT_THROW(ReplayBuffer(0), InvalidArgument);
}

TEST(ReplayBuffer, SamplesUniformly) {
    ReplayBuffer buf(8);
    for (std::size_t k = 0; k < 8; ++k) buf.push(TransitionRecord{{}, k, 0.0, {}});
    Rng rng(65);
    std::vector<int> counts(8, 0);
    for (int k = 0; k < 10000; ++k)
        for (std::size_t i : buf.sample_indices(8, rng)) ++counts[i];
    for (int c : counts) EXPECT_NEAR(c / 80000.0, 0.125, 0.005);
}

TEST(ReplayBuffer, TooSmallForBatch) {
    ReplayBuffer buf(100);
    Rng rng(66);
    for (int k = 0; k < 5; ++k) buf.push(TransitionRecord{});
    EXPECT_THROW(buf.sample_indices(6, rng), BufferTooSmall);
    EXPECT_THROW(buf.sample_indices(0, rng), BufferTooSmall);
    EXPECT_EQ(buf.sample_indices(5, rng).size(), 5u);
}

TEST(LearnerConfig, Validation) {
    auto field_of = [](auto mutate) {
        LearnerConfig cfg;
        mutate(cfg);
        try {
            cfg.validate();
        } catch (const ValidationError &e) {
            return e.field();
        }
        return std::string("none");
    };
    EXPECT_EQ(field_of([](LearnerConfig &) {}), "none");
    EXPECT_EQ(field_of([](LearnerConfig &c) { c.rho = 1.0; }), "rho");
    EXPECT_EQ(field_of([](LearnerConfig &c) { c.eta = 0.0; }), "eta");
    EXPECT_EQ(field_of([](LearnerConfig &c) { c.epsilon = 0.0; }), "epsilon");
    EXPECT_EQ(field_of([](LearnerConfig &c) { c.epsilon_final = 1.2; }), "epsilon_final");
    EXPECT_EQ(field_of([](LearnerConfig &c) { c.replay_capacity = 8; }), "replay_capacity");
    EXPECT_EQ(field_of([](LearnerConfig &c) { c.hidden_layers = {8, 0}; }), "hidden_layers");
    EXPECT_EQ(field_of([](LearnerConfig &c) { c.td_error_clip = 0.0; }), "td_error_clip");
}

TEST(LearnerConfig, EpsilonSchedule) {
    LearnerConfig cfg;
    EXPECT_EQ(cfg.epsilon_at(0), 0.9);
    EXPECT_EQ(cfg.epsilon_at(100000), 0.9);
    cfg.epsilon_final = 0.0;
    cfg.epsilon_decay_steps = 100;
    EXPECT_DOUBLE_EQ(cfg.epsilon_at(50), 0.45);
    EXPECT_EQ(cfg.epsilon_at(100), 0.0);
    EXPECT_EQ(cfg.epsilon_at(500), 0.0);
}

TEST(OpenLoopEnv, ProbesFeaturesAndReset) {
    const OpenLoopEnv env = example_env();
    const auto probes = env.probe_states();
    ASSERT_EQ(probes.size(), 4u);
    EXPECT_EQ(probes[0], env.steady_state());
    EXPECT_EQ(probes[1], masked_update(env.steady_state(), Mask{true, false}, env.game().model));
    EXPECT_EQ(probes[3], masked_update(env.steady_state(), Mask{false, false}, env.game().model));
    const Vector f = env.features(env.steady_state());
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[1], env.steady_state().matrix()(0, 1));
    EXPECT_FALSE(env.needs_reset(env.steady_state()));
    EXPECT_TRUE(env.needs_reset(ErrorCovariance(Matrix{{60.0, 0.0}, {0.0, 50.0}})));
    const OpenLoopEnv logged(example_game(), FeatureTransform::log);
    EXPECT_NEAR(logged.features(env.steady_state())[0], std::log1p(f[0]), 1e-15);
}

TEST(ClosedLoopEnv, FeaturesAndValidation) {
    const ClosedLoopEnv env = example_closed_env();
    EXPECT_EQ(env.feature_size(), 4u);
    EXPECT_EQ(env.features(env.initial_state()), (Vector{1.0, 0.0, 1.0, 0.0}));
    EXPECT_EQ(env.state_id(env.initial_state()), "B=1/0/1/0");
    const auto [next, r] = env.transition(env.initial_state(), JointAction{{false, false}, {false, false}});
    EXPECT_EQ(r, 0.0);
    EXPECT_NEAR(next.matrix()(0, 0), 0.950212931632136, 1e-15);
    const PowerSchedule p = test::example_powers();
    EXPECT_THROW(ClosedLoopEnv(p, PerModel::exponential(), costs_from_powers(p), BeliefMatrix(Matrix{{1.0, 0.0}, {1.0, 0.0}}),
                               {BeliefMatrix(Matrix{{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}})}),
                 DimensionMismatch);
}

TEST(ExtractNe, ForcedNetworks) {
    const OpenLoopEnv env = example_env();
    Vector row(16, 0.0);
    row[action_index(JointAction{{true, false}, {false, true}})] = 10.0;
    for (std::size_t k = 0; k < 16; ++k) row[k] -= k == 9 ? 0.0 : 1.0;
    const PolicyTable central = extract_ne(env, constant_net(3, row));
    ASSERT_EQ(central.actions.size(), 4u);
    for (const auto &a : central.actions) EXPECT_EQ(a, greedy_joint(row, 2));

    const PolicyTable split = extract_ne(env, constant_net(3, {3.0, 1.0, -2.0, 0.0}), constant_net(3, {0.0, 4.0, 1.0, 4.0}));
    for (const auto &a : split.actions) EXPECT_EQ(a, (JointAction{{true, false}, {false, true}}));
    EXPECT_EQ(split.state_ids.front(), env.state_id(env.steady_state()));
}

TEST(Learners, ArgextCardinality) {
    LearnerConfig cfg = short_config();
    cfg.max_episodes = 1;
    cfg.episode_length = 40;
    EXPECT_EQ(run_centralized(example_env(), cfg).log.argext_evaluations_per_step, 16u);
    EXPECT_EQ(run_distributed(example_env(), cfg).log.argext_evaluations_per_step, 2u * 4);
}

TEST(Learners, SameSeedReproducesRun) {
    LearnerConfig cfg = short_config();
    cfg.max_episodes = 2;
    const CentralizedResult a = run_centralized(example_env(), cfg);
    const CentralizedResult b = run_centralized(example_env(), cfg);
    EXPECT_EQ(a.net, b.net);
    EXPECT_EQ(a.log.joint_actions, b.log.joint_actions);
    ASSERT_EQ(a.log.records.size(), b.log.records.size());
    for (std::size_t k = 0; k < a.log.records.size(); ++k) EXPECT_EQ(a.log.records[k].q_probe, b.log.records[k].q_probe);

    const DistributedResult c = run_distributed(example_closed_env(), cfg);
    const DistributedResult d = run_distributed(example_closed_env(), cfg);
    EXPECT_EQ(c.device_net, d.device_net);
    EXPECT_EQ(c.attacker_net, d.attacker_net);
    EXPECT_EQ(c.log.joint_actions, d.log.joint_actions);

    cfg.seed = 2;
    EXPECT_NE(run_centralized(example_env(), cfg).log.joint_actions, a.log.joint_actions);
}

TEST(Learners, ExploresManyJointActions) {
    LearnerConfig cfg = short_config();
    const CentralizedResult r = run_centralized(example_env(), cfg);
    ASSERT_GE(r.log.joint_actions.size(), 1000u);
    const std::set<std::size_t> seen(r.log.joint_actions.begin(), r.log.joint_actions.begin() + 1000);
    EXPECT_GE(seen.size(), 10u);
}

TEST(Learners, LogShapeAndLossTiming) {
    LearnerConfig cfg = short_config();
    cfg.max_episodes = 1;
    const CentralizedResult r = run_centralized(example_env(), cfg);
    EXPECT_EQ(r.log.steps, 200u);
    EXPECT_EQ(r.log.q_columns.size(), 4u * 16);
    EXPECT_EQ(r.log.q_columns.front(), "q_p0_a00_b00");
    EXPECT_TRUE(std::isnan(r.log.device_losses[cfg.batch_size - 2]));
    EXPECT_TRUE(std::isfinite(r.log.device_losses[cfg.batch_size - 1]));
    EXPECT_EQ(r.log.records.back().step, 199u);
    for (const auto &rec : r.log.records) EXPECT_EQ(rec.q_probe.size(), r.log.q_columns.size());
}

TEST(Learners, PoliciesAreWellFormed) {
    LearnerConfig cfg = short_config();
    const DistributedResult r = run_distributed(example_env(), cfg);
    EXPECT_EQ(r.policy.actions.size(), 4u);
    for (const auto &a : r.policy.actions) {
        EXPECT_EQ(a.alpha.size(), 2u);
        EXPECT_EQ(a.beta.size(), 2u);
    }
    EXPECT_FALSE(r.device_policy.empty());
    for (const auto &[id, a] : r.device_policy) EXPECT_LT(a, 4u);
    for (const auto &[id, b] : r.attacker_policy) EXPECT_LT(b, 4u);
}

// With a near-zero discount the game is the one-step game, whose equilibrium the
// oracle gives exactly.
TEST(Learners, MyopicCentralizedMatchesOracle) {
    const double rho = 0.01;
    const OracleResult oracle = tabular_oracle(example_game(rho), 2, 1e-10);
    LearnerConfig cfg = short_config();
    cfg.rho = rho;
    cfg.hidden_layers = {32};
    cfg.max_episodes = 20;
    const CentralizedResult r = run_centralized(example_env(rho), cfg);
    EXPECT_EQ(r.policy.actions.front(), oracle.ne);
}

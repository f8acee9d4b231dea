#include <gtest/gtest.h>

#include "rse/game_closed.hpp"
#include "support.hpp"

using namespace rse;
using rse::test::example_powers;

namespace {

JointAction ja(std::initializer_list<bool> alpha, std::initializer_list<bool> beta) {
    return JointAction{Mask(alpha), Mask(beta)};
}

BeliefMatrix fresh(std::size_t n, std::size_t m) {
    std::vector<double> row(m + 1, 0.0);
    row[0] = 1.0;
    return BeliefMatrix::uniform_rows(n, row);
}

BeliefMatrix random_belief(std::size_t n, std::size_t m, Rng &rng) {
    Matrix b(n, m + 1);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j <= m; ++j) sum += b(i, j) = rng.uniform() + 1e-3;
        for (std::size_t j = 0; j <= m; ++j) b(i, j) /= sum;
        double fix = 1.0;
        for (std::size_t j = 1; j <= m; ++j) fix -= b(i, j);
        b(i, 0) = fix;
    }
    return BeliefMatrix(b);
}

double row_sum(const Matrix &b, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < b.cols(); ++j) s += b(i, j);
    return s;
}

const PerModel kAlwaysDelivered("zero", [](double) { return 0.0; });
const PerModel kNeverDelivered("one", [](double) { return 1.0; });

} // namespace

TEST(Sinr, Examples) {
    EXPECT_DOUBLE_EQ(sinr(0.3, 0.0, 0.1), 3.0);
    EXPECT_DOUBLE_EQ(sinr(0.3, 0.5, 0.1), 0.5);
    EXPECT_EQ(sinr(0.0, 0.5, 0.1), 0.0);
    EXPECT_THROW(sinr(0.3, 0.0, 0.0), InvalidArgument);
    EXPECT_THROW(sinr(-0.1, 0.0, 0.1), InvalidArgument);
}

TEST(Costs, FromPowers) {
    const CostSchedule c = costs_from_powers(example_powers());
    EXPECT_NEAR(c.c[0], 0.4, 1e-15);
    EXPECT_NEAR(c.c[1], 0.6, 1e-15);
    EXPECT_EQ(c.c_beta, (Vector{0.5, 0.5}));
}

TEST(PowerSchedule, Validation) {
    PowerSchedule p = example_powers();
    EXPECT_NO_THROW(p.validate(2));
    EXPECT_THROW(p.validate(3), DimensionMismatch);
    p.n0 = 0.0;
    EXPECT_THROW(p.validate(2), ValidationError);
    p = example_powers();
    p.b1[1] = -1.0;
    EXPECT_THROW(p.validate(2), ValidationError);
}

TEST(PerModel, Validation) {
    EXPECT_THROW(PerModel("rising", [](double x) { return std::min(1.0, 0.1 * x); }), ValidationError);
    EXPECT_THROW(PerModel("big", [](double) { return 1.5; }), ValidationError);
    EXPECT_NO_THROW(PerModel::constant(0.3));
    EXPECT_EQ(PerModel::exponential()(0.0), 1.0);
}

TEST(PacketSuccess, Examples) {
    const PerModel per = PerModel::exponential();
    const Vector t = packet_success(ja({0, 0}, {0, 0}), example_powers(), per);
    EXPECT_NEAR(t[0], 0.950212931632136, 1e-15);
    EXPECT_NEAR(t[1], 0.8646647167633873, 1e-15);

    const Vector attacked = packet_success(ja({0, 0}, {1, 0}), example_powers(), per);
    EXPECT_NEAR(attacked[0], 0.3934693402873666, 1e-15);
    EXPECT_NEAR(attacked[1], t[1], 1e-15);

    EXPECT_EQ(packet_success(ja({1, 0}, {1, 1}), example_powers(), kAlwaysDelivered), (Vector{1.0, 1.0}));
    EXPECT_EQ(packet_success(ja({1, 0}, {0, 0}), example_powers(), kNeverDelivered), (Vector{0.0, 0.0}));
}

TEST(PacketSuccess, MonotoneInActions) {
    const PerModel per = PerModel::exponential();
    const PowerSchedule p = example_powers();
    for (std::size_t k = 0; k < 16; ++k) {
        const JointAction a = decode_action(k, 2);
        const Vector t = packet_success(a, p, per);
        for (std::size_t i = 0; i < 2; ++i) {
            EXPECT_GE(t[i], 0.0);
            EXPECT_LE(t[i], 1.0);
            JointAction secured = a, jammed = a;
            secured.alpha[i] = true;
            jammed.beta[i] = true;
            EXPECT_GE(packet_success(secured, p, per)[i], t[i]);
            EXPECT_LE(packet_success(jammed, p, per)[i], t[i]);
        }
    }
}

TEST(BeliefMatrix, Validation) {
    EXPECT_THROW(BeliefMatrix(Matrix{{0.5, 0.4}}), InvalidArgument);
    EXPECT_THROW(BeliefMatrix(Matrix{{1.2, -0.2}}), InvalidArgument);
    EXPECT_THROW(BeliefMatrix(Matrix{{1.0}}), DimensionMismatch);
    EXPECT_NO_THROW(BeliefMatrix(Matrix{{0.25, 0.75}, {1.0, 0.0}}));
}

TEST(BeliefStep, FromFreshBelief) {
    const Vector t = packet_success(ja({0, 0}, {0, 0}), example_powers(), PerModel::exponential());
    const BeliefMatrix b1 = belief_step(fresh(2, 1), t);
    const Matrix expected{{0.950212931632136, 0.04978706836786395}, {0.8646647167633873, 0.1353352832366127}};
    EXPECT_LE(max_abs_diff(b1.matrix(), expected), 1e-15);
}

TEST(BeliefStep, ShiftsAndSaturates) {
    const BeliefMatrix b(Matrix{{0.1, 0.2, 0.3, 0.4}});
    const Matrix out = belief_step(b, Vector{0.5}).matrix();
    EXPECT_LE(max_abs_diff(out, Matrix{{0.5, 0.05, 0.1, 0.35}}), 1e-15);
    EXPECT_EQ(belief_step(BeliefMatrix(Matrix{{0.0, 1.0}}), Vector{0.0}).matrix(), (Matrix{{0.0, 1.0}}));
    EXPECT_THROW(belief_step(b, Vector{1.5}), InvalidArgument);
    EXPECT_THROW(belief_step(b, Vector{0.5, 0.5}), DimensionMismatch);
}

TEST(BeliefStep, StaysStochasticOnThousandCases) {
    Rng rng(41);
    for (int c = 0; c < 1000; ++c) {
        const std::size_t n = 1 + rng.below(4), m = 1 + rng.below(5);
        const BeliefMatrix b = random_belief(n, m, rng);
        Vector t(n);
        for (auto &v : t) v = rng.uniform();
        const Matrix out = belief_step(b, t).matrix();
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(row_sum(out, i), 1.0, 1e-12);
            EXPECT_EQ(out(i, 0), t[i]);
            for (std::size_t j = 0; j <= m; ++j) {
                EXPECT_GE(out(i, j), 0.0);
                EXPECT_LE(out(i, j), 1.0);
            }
        }
        const double r = belief_reward(b, decode_action(0, n), CostSchedule{Vector(n), Vector(n)});
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, static_cast<double>(n * m));
    }
}

TEST(BeliefReward, Examples) {
    const CostSchedule costs = costs_from_powers(example_powers());
    EXPECT_EQ(belief_reward(fresh(2, 1), ja({0, 0}, {0, 0}), costs), 0.0);
    const BeliefMatrix b1(Matrix{{0.950212931632136, 0.04978706836786395}, {0.8646647167633873, 0.1353352832366127}});
    EXPECT_NEAR(belief_reward(b1, ja({0, 0}, {0, 0}), costs), 0.18512235160447665, 1e-15);
    EXPECT_NEAR(belief_reward(fresh(2, 1), ja({1, 1}, {1, 0}), costs), 0.4 + 0.6 - 0.5, 1e-15);
    EXPECT_NEAR(belief_reward(BeliefMatrix(Matrix{{0.0, 0.0, 1.0}}), ja({0}, {0}), CostSchedule{{0.0}, {0.0}}), 2.0,
                1e-15);
}

TEST(BeliefGameStep, RewardUsesBeliefActedOn) {
    const PowerSchedule p = example_powers();
    const CostSchedule costs = costs_from_powers(p);
    const BeliefMatrix b0 = fresh(2, 1);
    const BeliefStepResult s1 = belief_game_step(b0, ja({0, 0}, {0, 0}), p, PerModel::exponential(), costs);
    EXPECT_EQ(s1.reward, 0.0);
    const BeliefStepResult s2 = belief_game_step(s1.next, ja({0, 0}, {0, 0}), p, PerModel::exponential(), costs);
    EXPECT_NEAR(s2.reward, 0.18512235160447665, 1e-15);
}

TEST(BeliefGameStep, AlwaysDelivered) {
    const PowerSchedule p = example_powers();
    const CostSchedule none{Vector(2), Vector(2)};
    Rng rng(42);
    const BeliefMatrix b = random_belief(2, 3, rng);
    const BeliefStepResult s = belief_game_step(b, ja({0, 0}, {0, 0}), p, kAlwaysDelivered, none);
    EXPECT_EQ(s.next, fresh(2, 3));
    EXPECT_NEAR(s.reward, belief_reward(b, ja({0, 0}, {0, 0}), none), 1e-15);
}

TEST(BeliefGameStep, NeverDelivered) {
    const PowerSchedule p = example_powers();
    const CostSchedule none{Vector(1), Vector(1)};
    PowerSchedule one{{0.3}, {0.7}, {0.5}, 0.1};
    const BeliefStepResult s = belief_game_step(fresh(1, 1), ja({0}, {0}), one, kNeverDelivered, none);
    EXPECT_EQ(s.next.matrix(), (Matrix{{0.0, 1.0}}));
    EXPECT_EQ(s.reward, 0.0);
    const BeliefStepResult s2 = belief_game_step(s.next, ja({0}, {0}), one, kNeverDelivered, none);
    EXPECT_EQ(s2.reward, 1.0);
    EXPECT_THROW(belief_game_step(fresh(2, 1), ja({0}, {0}), p, kNeverDelivered, none), DimensionMismatch);
}

// Closed-loop DoS game over the attacker's belief about each device's holding time.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "rse/error.hpp"
#include "rse/game_open.hpp"
#include "rse/numerics.hpp"

namespace rse {

struct PowerSchedule {
    Vector a0;  // transmit power on the open (state-0) channel
    Vector a1;  // transmit power on the secure (state-1) channel
    Vector b1;  // attack power per channel
    double n0 = 0.1;

    void validate(std::size_t n) const {
        if (a0.size() != n || a1.size() != n || b1.size() != n)
            throw DimensionMismatch("power vectors must have one entry per device");
        for (const Vector *v : {&a0, &a1, &b1})
            for (double p : *v)
                if (!(p >= 0.0)) throw ValidationError("powers", "must be >= 0");
        if (!(n0 > 0.0)) throw ValidationError("powers.n0", "noise power must be > 0");
    }
};

// Extra secure-channel power a1 - a0 for the devices, b1 for the attacker.
inline CostSchedule costs_from_powers(const PowerSchedule &p) {
    CostSchedule costs{Vector(p.a0.size()), p.b1};
    for (std::size_t i = 0; i < p.a0.size(); ++i) costs.c[i] = p.a1[i] - p.a0[i];
    return costs;
}

/// Packet error rate as a non-increasing function of SINR.
class PerModel {
public:
    PerModel(std::string name, std::function<double(double)> f) : name_(std::move(name)), f_(std::move(f)) {
        if (!(f_(0.0) <= 1.0)) throw ValidationError("per", "f(0) must be <= 1");
        double prev = f_(0.0);
        for (int k = 1; k <= 2000; ++k) {
            const double v = f_(0.025 * k);
            if (v > prev) throw ValidationError("per", "f must be non-increasing");
            prev = v;
        }
    }

    static PerModel exponential() {
        return PerModel("exp", [](double x) { return std::exp(-x); });
    }

    static PerModel constant(double value) {
        return PerModel("const", [value](double) { return value; });
    }

    double operator()(double sinr) const { return f_(sinr); }
    const std::string &name() const noexcept { return name_; }

private:
    std::string name_;
    std::function<double(double)> f_;
};

/// Row i is the distribution of device i's holding time over {0, ..., m}.
class BeliefMatrix {
public:
    explicit BeliefMatrix(Matrix b) : b_(std::move(b)) {
        if (b_.cols() < 2) throw DimensionMismatch("belief needs at least two holding-time columns");
        for (std::size_t i = 0; i < b_.rows(); ++i) {
            double sum = 0.0;
            for (double v : b_.row(i)) {
                if (v < 0.0 || v > 1.0) throw InvalidArgument("belief entries must lie in [0, 1]");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("belief row " + std::to_string(i) + " must sum to 1");
        }
    }

    // Every device with the given holding-time distribution.
    static BeliefMatrix uniform_rows(std::size_t n, std::span<const double> row) {
        Matrix b(n, row.size());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < row.size(); ++j) b(i, j) = row[j];
        return BeliefMatrix(std::move(b));
    }

    const Matrix &matrix() const noexcept { return b_; }
    std::size_t devices() const noexcept { return b_.rows(); }
    std::size_t max_holding() const noexcept { return b_.cols() - 1; }

    friend bool operator==(const BeliefMatrix &, const BeliefMatrix &) = default;

private:
    Matrix b_;
};

inline double sinr(double a_power, double b_power, double n0) {
    if (!(n0 > 0.0)) throw InvalidArgument("noise power must be positive");
    if (a_power < 0.0 || b_power < 0.0) throw InvalidArgument("powers must be non-negative");
    return a_power / (b_power + n0);
}

/// t_i = 1 - f(SINR_i), with the transmit power chosen by alpha_i and the jamming
/// power by beta_i.
inline Vector packet_success(const JointAction &a, const PowerSchedule &powers, const PerModel &per) {
    const std::size_t n = a.devices();
    if (powers.a0.size() != n) throw DimensionMismatch("power schedule size != device count");
    Vector t(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double tx = a.alpha[i] ? powers.a1[i] : powers.a0[i];
        const double jam = a.beta[i] ? powers.b1[i] : 0.0;
        t[i] = 1.0 - per(sinr(tx, jam, powers.n0));
    }
    return t;
}

/// Holding-time propagation: a received packet resets to 0 with probability t_i,
/// otherwise the distribution shifts right and saturates at m.
inline BeliefMatrix belief_step(const BeliefMatrix &belief, std::span<const double> t) {
    const Matrix &b = belief.matrix();
    const std::size_t n = b.rows();
    const std::size_t cols = b.cols();
    if (t.size() != n) throw DimensionMismatch("success probabilities length != device count");
    Matrix out(n, cols);
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] < 0.0 || t[i] > 1.0) throw InvalidArgument("success probability must lie in [0, 1]");
        const double miss = 1.0 - t[i];
        out(i, 0) = t[i];
        for (std::size_t j = 1; j + 1 < cols; ++j) out(i, j) = miss * b(i, j - 1);
        out(i, cols - 1) = miss * (b(i, cols - 2) + b(i, cols - 1));
    }
    return BeliefMatrix(std::move(out));
}

/// Expected total holding time plus action costs.
inline double belief_reward(const BeliefMatrix &belief, const JointAction &a, const CostSchedule &costs) {
    const Matrix &b = belief.matrix();
    double holding = 0.0;
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) holding += b(i, j) * static_cast<double>(j);
    return holding + action_cost(a, costs);
}

struct BeliefStepResult {
    BeliefMatrix next;
    double reward;
};

/// Propagates the belief under `a`. The payoff is evaluated on the belief the players
/// acted on (r_k = r(B_k, alpha_k, beta_k)).
inline BeliefStepResult belief_game_step(const BeliefMatrix &belief, const JointAction &a, const PowerSchedule &powers,
                                         const PerModel &per, const CostSchedule &costs) {
    if (a.devices() != belief.devices()) throw DimensionMismatch("joint action size != belief rows");
    const double reward = belief_reward(belief, a, costs);
    return {belief_step(belief, packet_success(a, powers, per)), reward};
}

} // namespace rse

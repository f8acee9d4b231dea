// Open-loop DoS game: both players observe the estimator's error covariance.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rse/error.hpp"
#include "rse/estimation.hpp"
#include "rse/numerics.hpp"

namespace rse {

/// alpha[i] = 1: device i transmits on the secure (state-1) channel.
/// beta[i] = 1: the attacker jams channel i.
struct JointAction {
    Mask alpha;
    Mask beta;

    std::size_t devices() const noexcept { return alpha.size(); }
    friend bool operator==(const JointAction &, const JointAction &) = default;
};

inline std::string bits_to_string(const Mask &bits) {
    std::string s;
    for (bool b : bits) s.push_back(b ? '1' : '0');
    return s;
}

inline std::string to_string(const JointAction &a) {
    return "(" + bits_to_string(a.alpha) + "," + bits_to_string(a.beta) + ")";
}

inline std::size_t side_action_count(std::size_t n) { return std::size_t{1} << n; }
inline std::size_t joint_action_count(std::size_t n) { return std::size_t{1} << (2 * n); }

// Bits are read most-significant first: (0,1) -> 1, (1,0) -> 2.
inline std::size_t side_index(const Mask &bits) {
    std::size_t idx = 0;
    for (bool b : bits) idx = (idx << 1) | (b ? 1u : 0u);
    return idx;
}

inline Mask decode_side(std::size_t index, std::size_t n) {
    if (index >= side_action_count(n))
        throw InvalidArgument("side action index " + std::to_string(index) + " out of range for n=" + std::to_string(n));
    Mask bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = (index >> (n - 1 - i)) & 1u;
    return bits;
}

/// Joint index: alpha bits followed by beta bits, most-significant first; for n = 2
/// this is the 4-bit number alpha1 alpha2 beta1 beta2.
inline std::size_t action_index(const JointAction &a) {
    if (a.alpha.size() != a.beta.size()) throw DimensionMismatch("alpha and beta lengths differ");
    return (side_index(a.alpha) << a.devices()) | side_index(a.beta);
}

inline JointAction decode_action(std::size_t index, std::size_t n) {
    if (index >= joint_action_count(n))
        throw InvalidArgument("joint action index " + std::to_string(index) + " out of range for n=" + std::to_string(n));
    return JointAction{decode_side(index >> n, n), decode_side(index & (side_action_count(n) - 1), n)};
}

/// Packet i is lost only when the device used the open channel and it was attacked.
inline Mask arrival_mask(const JointAction &a) {
    if (a.alpha.size() != a.beta.size()) throw DimensionMismatch("alpha and beta lengths differ");
    Mask gamma(a.devices());
    for (std::size_t i = 0; i < gamma.size(); ++i) gamma[i] = a.alpha[i] || !a.beta[i];
    return gamma;
}

struct CostSchedule {
    Vector c;       // secure-channel cost per device
    Vector c_beta;  // attack cost per channel

    void validate(std::size_t n) const {
        if (c.size() != n || c_beta.size() != n) throw DimensionMismatch("cost vectors must have one entry per device");
        for (double v : c)
            if (!(v >= 0.0)) throw ValidationError("costs.device", "must be >= 0");
        for (double v : c_beta)
            if (!(v >= 0.0)) throw ValidationError("costs.attacker", "must be >= 0");
    }
};

// sum_i (c_i alpha_i - c_beta_i beta_i)
inline double action_cost(const JointAction &a, const CostSchedule &costs) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.devices(); ++i) {
        if (a.alpha[i]) total += costs.c[i];
        if (a.beta[i]) total -= costs.c_beta[i];
    }
    return total;
}

struct DiscountedGame {
    SystemModel model;
    CostSchedule costs;
    double rho;

    DiscountedGame(SystemModel m, CostSchedule c, double discount)
        : model(std::move(m)), costs(std::move(c)), rho(discount) {
        if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho", "discount must lie in (0, 1)");
        costs.validate(model.devices());
    }

    std::size_t devices() const noexcept { return model.devices(); }
};

struct StepResult {
    ErrorCovariance next;
    double reward;
};

/// Transition P' = F(P, gamma(a)) and payoff trace(P') + costs. Devices minimize the
/// payoff, the attacker maximizes it.
inline StepResult step(const ErrorCovariance &state, const JointAction &a, const DiscountedGame &game) {
    if (a.devices() != game.devices()) throw DimensionMismatch("joint action size != device count");
    ErrorCovariance next = masked_update(state, arrival_mask(a), game.model);
    const double reward = next.trace() + action_cost(a, game.costs);
    return {std::move(next), reward};
}

// Q table indexed [alpha][beta]. Returns (alpha, beta) side indices of the pure
// max-min cell: max over beta of min over alpha, lowest index wins ties.
inline std::pair<std::size_t, std::size_t> maxmin_cell(const std::vector<std::vector<double>> &q) {
    const std::size_t na = q.size();
    const std::size_t nb = na ? q.front().size() : 0;
    std::size_t best_a = 0, best_b = 0;
    double best = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        std::size_t arg_a = 0;
        for (std::size_t a = 1; a < na; ++a)
            if (q[a][b] < q[arg_a][b]) arg_a = a;
        if (b == 0 || q[arg_a][b] > best) {
            best = q[arg_a][b];
            best_a = arg_a;
            best_b = b;
        }
    }
    return {best_a, best_b};
}

// ---------------------------------------------------------------------------
// Tabular minimax oracle on the reachable covariance graph.

struct OracleResult {
    std::vector<ErrorCovariance> states;  // states[0] is the steady state
    std::vector<std::size_t> depth;
    std::vector<double> values;
    std::vector<std::vector<double>> root_q;  // [alpha][beta] at the steady state
    JointAction ne;
    std::vector<double> sweep_changes;
};

struct OracleGraph {
    std::vector<ErrorCovariance> states;
    std::vector<std::size_t> depth;
    // next[s][mask index], trace_next[s][mask index]; mask index = side_index(gamma)
    std::vector<std::vector<std::size_t>> next;
    std::vector<std::vector<double>> trace_next;
};

/// States reachable from the steady state in <= depth applications of F over all
/// arrival masks, merged when within 1e-8 max-abs. Transitions out of the frontier
/// that would create a new state self-loop.
inline OracleGraph build_oracle_graph(const DiscountedGame &game, std::size_t depth) {
    const std::size_t n = game.devices();
    const std::size_t masks = side_action_count(n);
    OracleGraph g;
    g.states.push_back(steady_state_covariance(game.model));
    g.depth.push_back(0);

    auto find = [&](const ErrorCovariance &x) -> std::ptrdiff_t {
        for (std::size_t i = 0; i < g.states.size(); ++i)
            if (max_abs_diff(g.states[i].matrix(), x.matrix()) <= 1e-8) return static_cast<std::ptrdiff_t>(i);
        return -1;
    };

    for (std::size_t s = 0; s < g.states.size(); ++s) {
        g.next.emplace_back(masks);
        g.trace_next.emplace_back(masks);
        for (std::size_t m = 0; m < masks; ++m) {
            ErrorCovariance x = masked_update(g.states[s], decode_side(m, n), game.model);
            g.trace_next[s][m] = x.trace();
            std::ptrdiff_t j = find(x);
            if (j < 0) {
                if (g.depth[s] >= depth) {
                    j = static_cast<std::ptrdiff_t>(s);
                } else {
                    g.states.push_back(std::move(x));
                    g.depth.push_back(g.depth[s] + 1);
                    j = static_cast<std::ptrdiff_t>(g.states.size() - 1);
                }
            }
            g.next[s][m] = static_cast<std::size_t>(j);
        }
    }
    return g;
}

/// Minimax value iteration V(s) <- max_beta min_alpha [r + rho V(s')] on the truncated
/// graph until the sweep change is <= tol.
inline OracleResult tabular_oracle(const DiscountedGame &game, std::size_t depth, double tol,
                                   std::size_t max_sweeps = 100000) {
    if (depth < 1) throw InvalidArgument("oracle depth must be >= 1");
    if (!(tol > 0.0)) throw InvalidArgument("oracle tolerance must be positive");
    const std::size_t n = game.devices();
    const std::size_t sides = side_action_count(n);
    OracleGraph g = build_oracle_graph(game, depth);
    const std::size_t count = g.states.size();

    // Per (alpha, beta): mask index and action cost.
    std::vector<std::vector<std::size_t>> mask_of(sides, std::vector<std::size_t>(sides));
    std::vector<std::vector<double>> cost_of(sides, std::vector<double>(sides));
    for (std::size_t a = 0; a < sides; ++a)
        for (std::size_t b = 0; b < sides; ++b) {
            const JointAction ja{decode_side(a, n), decode_side(b, n)};
            mask_of[a][b] = side_index(arrival_mask(ja));
            cost_of[a][b] = action_cost(ja, game.costs);
        }

    auto q_table = [&](std::size_t s, const std::vector<double> &v) {
        std::vector<std::vector<double>> q(sides, std::vector<double>(sides));
        for (std::size_t a = 0; a < sides; ++a)
            for (std::size_t b = 0; b < sides; ++b) {
                const std::size_t m = mask_of[a][b];
                q[a][b] = g.trace_next[s][m] + cost_of[a][b] + game.rho * v[g.next[s][m]];
            }
        return q;
    };

    OracleResult result;
    std::vector<double> v(count, 0.0);
    bool converged = false;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        std::vector<double> nv(count);
        double change = 0.0;
        for (std::size_t s = 0; s < count; ++s) {
            const auto q = q_table(s, v);
            const auto [a, b] = maxmin_cell(q);
            nv[s] = q[a][b];
            change = std::max(change, std::abs(nv[s] - v[s]));
        }
        v = std::move(nv);
        result.sweep_changes.push_back(change);
        if (change <= tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NoConvergence("oracle value iteration exceeded sweep limit");

    result.root_q = q_table(0, v);
    const auto [a, b] = maxmin_cell(result.root_q);
    result.ne = JointAction{decode_side(a, n), decode_side(b, n)};
    result.values = std::move(v);
    result.states = std::move(g.states);
    result.depth = std::move(g.depth);
    return result;
}

} // namespace rse

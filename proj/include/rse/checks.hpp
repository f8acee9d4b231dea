// Fast randomized invariant checks, run by `rse verify`.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rse/drl.hpp"
#include "rse/estimation.hpp"
#include "rse/game_closed.hpp"
#include "rse/neural.hpp"
#include "rse/random.hpp"

namespace rse {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng &rng, double scale = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = scale * (2.0 * rng.uniform() - 1.0);
    return m;
}

// B B^T + shift I
inline Matrix random_spd(std::size_t n, Rng &rng, double shift = 0.1) {
    const Matrix b = random_matrix(n, n, rng);
    return symmetrize(b * b.transpose() + Matrix::identity(n) * shift);
}

inline Mask random_mask(std::size_t n, Rng &rng) {
    Mask m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = rng.below(2) == 1;
    return m;
}

} // namespace detail

inline std::vector<CheckResult> run_quick_checks(const SystemModel &model, std::uint64_t seed = 7) {
    std::vector<CheckResult> out;
    Rng rng(seed);
    char buf[160];

    {
        const ErrorCovariance p = steady_state_covariance(model);
        const double d = max_abs_diff(masked_update(p, all_arrived(model.devices()), model).matrix(), p.matrix());
        std::snprintf(buf, sizeof buf, "max |F(P,1) - P| = %.3g", d);
        out.push_back({"steady state is a fixed point", d <= 1e-9, buf});
    }
    {
        // Penrose identities X G X = X and G X G = G on the kept block.
        double worst = 0.0;
        for (int c = 0; c < 100; ++c) {
            const std::size_t n = 1 + rng.below(5);
            const Matrix g = detail::random_spd(n, rng);
            const Matrix x = masked_pseudo_inverse(g, detail::random_mask(n, rng));
            worst = std::max(worst, max_abs_diff(x * g * x, x));
        }
        std::snprintf(buf, sizeof buf, "max |XGX - X| = %.3g over 100 cases", worst);
        out.push_back({"masked pseudo-inverse", worst <= 1e-8, buf});
    }
    {
        bool ok = true;
        for (int c = 0; c < 50 && ok; ++c) {
            const ErrorCovariance x(detail::random_spd(model.state_dim(), rng, 0.0));
            const ErrorCovariance next = masked_update(x, detail::random_mask(model.devices(), rng), model);
            ok = is_symmetric_psd(next.matrix(), covariance_tolerance(next.matrix()));
        }
        out.push_back({"update preserves PSD", ok, "50 random states and masks"});
    }
    {
        double worst = 0.0;
        for (int c = 0; c < 1000; ++c) {
            const std::size_t n = 1 + rng.below(4), cols = 2 + rng.below(4);
            Matrix b(n, cols);
            for (std::size_t i = 0; i < n; ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < cols; ++j) sum += b(i, j) = rng.uniform() + 1e-3;
                for (std::size_t j = 0; j < cols; ++j) b(i, j) /= sum;
                double fix = 1.0;
                for (std::size_t j = 1; j < cols; ++j) fix -= b(i, j);
                b(i, 0) = std::max(0.0, fix);
            }
            Vector t(n);
            for (auto &v : t) v = rng.uniform();
            const Matrix next = belief_step(BeliefMatrix(b), t).matrix();
            for (std::size_t i = 0; i < n; ++i) {
                double sum = 0.0;
                for (double v : next.row(i)) sum += v;
                worst = std::max(worst, std::abs(sum - 1.0));
            }
        }
        std::snprintf(buf, sizeof buf, "max |row sum - 1| = %.3g over 1000 cases", worst);
        out.push_back({"belief rows stay stochastic", worst <= 1e-9, buf});
    }
    {
        bool ok = true;
        for (int c = 0; c < 100 && ok; ++c) {
            const std::size_t sides = side_action_count(1 + rng.below(2));
            std::vector<std::vector<double>> q(sides, std::vector<double>(sides));
            for (auto &row : q)
                for (auto &v : row) v = std::floor(10.0 * (2.0 * rng.uniform() - 1.0));
            double best = -INFINITY;
            for (std::size_t b = 0; b < sides; ++b) {
                double worst_a = INFINITY;
                for (std::size_t a = 0; a < sides; ++a) worst_a = std::min(worst_a, q[a][b]);
                best = std::max(best, worst_a);
            }
            ok = minimax_target(1.5, 0.5, q) == 1.5 + 0.5 * best;
        }
        out.push_back({"minimax target matches enumeration", ok, "100 random tables"});
    }
    {
        double worst = 0.0;
        for (int c = 0; c < 20; ++c) {
            const std::size_t in = 1 + rng.below(4), hidden = 2 + rng.below(6), outs = 1 + rng.below(4);
            QNetwork net({in, hidden, outs}, rng);
            TrainBatch batch;
            for (int s = 0; s < 4; ++s) {
                Vector x(in);
                for (auto &v : x) v = 2.0 * rng.uniform() - 1.0;
                batch.inputs.push_back(x);
                batch.action_indices.push_back(rng.below(outs));
                batch.targets.push_back(2.0 * rng.uniform() - 1.0);
            }
            worst = std::max(worst, gradient_check(net, batch));
        }
        std::snprintf(buf, sizeof buf, "max relative error %.3g over 20 nets", worst);
        out.push_back({"network gradient", worst < 1e-4, buf});
    }
    {
        ReplayBuffer memory(16);
        bool ok = true;
        for (std::size_t k = 0; k < 40; ++k) {
            memory.push(TransitionRecord{{}, k, 0.0, {}});
            ok = ok && memory.size() <= memory.capacity();
        }
        ok = ok && memory.at(0).action == 24;
        out.push_back({"replay capacity bound", ok, "40 pushes into capacity 16"});
    }
    {
        bool ok = true;
        for (int c = 0; c < 1000 && ok; ++c) {
            const std::size_t greedy = rng.below(4);
            ok = epsilon_greedy(greedy, 4, 0.0, rng) == greedy;
        }
        out.push_back({"epsilon 0 is greedy", ok, "1000 draws"});
    }
    return out;
}

} // namespace rse

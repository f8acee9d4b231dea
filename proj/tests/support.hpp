// Shared fixtures for the unit tests.
#pragma once

#include <cmath>
#include <vector>

#include "rse/estimation.hpp"
#include "rse/game_closed.hpp"
#include "rse/game_open.hpp"
#include "rse/random.hpp"

namespace rse::test {

inline SystemModel example_model() {
    return SystemModel(Matrix{{2.0, 1.0}, {0.7, 0.8}}, Matrix{{1.0, 0.0}, {0.0, 2.0}},
                       Matrix{{0.6, 0.0}, {0.0, 0.6}}, Matrix{{0.7, 0.0}, {0.0, 0.4}}, Matrix::identity(2));
}

inline DiscountedGame example_game(double rho = 0.8) {
    return DiscountedGame(example_model(), CostSchedule{{7.0, 5.0}, {6.0, 6.0}}, rho);
}

inline PowerSchedule example_powers() { return PowerSchedule{{0.3, 0.2}, {0.7, 0.8}, {0.5, 0.5}, 0.1}; }

// Steady-state covariance produced by an independent numpy iteration.
inline Matrix reference_steady_state() {
    return Matrix{{0.5297422959493647, 0.02010328123926814}, {0.02010328123926814, 0.08799615698341988}};
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng &rng, double scale = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = scale * (2.0 * rng.uniform() - 1.0);
    return m;
}

// B B^T + shift I
inline Matrix random_psd(std::size_t n, Rng &rng, double shift = 0.0) {
    const Matrix b = random_matrix(n, n, rng);
    return symmetrize(b * b.transpose() + Matrix::identity(n) * shift);
}

inline Mask random_mask(std::size_t n, Rng &rng) {
    Mask m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = rng.below(2) == 1;
    return m;
}

// Random observable model: A scaled to spectral-ish radius < 1.5, C with full column rank.
inline SystemModel random_observable_model(std::size_t m, std::size_t n, Rng &rng) {
    for (;;) {
        Matrix a = random_matrix(m, m, rng, 1.2 / std::sqrt(static_cast<double>(m)));
        Matrix c = random_matrix(n, m, rng);
        Matrix q = random_psd(m, rng, 0.1);
        Vector rd(n);
        for (auto &v : rd) v = 0.1 + rng.uniform();
        SystemModel model = SystemModel::unchecked(a, c, q, Matrix::diagonal(rd), Matrix::identity(m));
        if (model.observable()) return SystemModel(a, c, q, Matrix::diagonal(rd), Matrix::identity(m));
    }
}

} // namespace rse::test

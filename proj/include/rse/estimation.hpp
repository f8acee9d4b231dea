// Remote state estimation: the linear process, innovation transmission and the
// Kalman recursion with per-channel packet arrival.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rse/error.hpp"
#include "rse/numerics.hpp"
#include "rse/random.hpp"

namespace rse {

namespace detail {

// Numeric rank by Gaussian elimination with full pivoting.
inline std::size_t numeric_rank(Matrix m, double rel_tol = 1e-9) {
    const double scale = std::max(1.0, max_abs(m));
    std::size_t rank = 0;
    std::vector<bool> used_col(m.cols(), false);
    std::vector<bool> used_row(m.rows(), false);
    for (std::size_t step = 0; step < std::min(m.rows(), m.cols()); ++step) {
        double best = 0.0;
        std::size_t br = 0, bc = 0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (used_row[r]) continue;
            for (std::size_t c = 0; c < m.cols(); ++c)
                if (!used_col[c] && std::abs(m(r, c)) > best) {
                    best = std::abs(m(r, c));
                    br = r;
                    bc = c;
                }
        }
        if (best <= rel_tol * scale) break;
        used_row[br] = used_col[bc] = true;
        ++rank;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (used_row[r]) continue;
            const double f = m(r, bc) / m(br, bc);
            for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) -= f * m(br, c);
        }
    }
    return rank;
}

// Lower-triangular L with L L^T = m for symmetric PSD m; columns with a
// vanishing pivot are left zero so singular covariances (e.g. Q = 0) work.
inline Matrix psd_cholesky(const Matrix &m) {
    const std::size_t n = m.rows();
    Matrix l(n, n);
    const double tol = 1e-12 * std::max(1.0, max_abs(m));
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= tol) continue;
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

inline Vector gaussian(Rng &rng, const Matrix &chol) {
    Vector z(chol.rows());
    for (auto &v : z) v = rng.normal();
    return chol * z;
}

} // namespace detail

inline double covariance_tolerance(const Matrix &p) { return 1e-9 * std::max(1.0, max_abs(p)); }

// Symmetric PSD error covariance. Symmetry and the eigenvalue floor are checked
// relative to the matrix scale, since P grows by orders of magnitude under
// consecutive losses of an unstable process.
class ErrorCovariance {
public:
    explicit ErrorCovariance(Matrix p) : p_(std::move(p)) {
        if (!p_.is_square()) throw DimensionMismatch("error covariance must be square, got " + p_.shape());
        const double tol = covariance_tolerance(p_);
        if (!is_symmetric(p_, tol)) throw InvalidArgument("error covariance is not symmetric");
        if (min_eigenvalue(p_) < -tol) throw InvalidArgument("error covariance is not PSD");
    }

    const Matrix &matrix() const noexcept { return p_; }
    std::size_t dim() const noexcept { return p_.rows(); }
    double trace() const { return rse::trace(p_); }

    friend bool operator==(const ErrorCovariance &, const ErrorCovariance &) = default;

private:
    Matrix p_;
};

/// Process x' = A x + w, w ~ N(0, Q) observed by n scalar devices y_i = C_i x + v_i,
/// v_i ~ N(0, R_i). Construction validates shapes, Q/Pi0 PSD, R positive diagonal,
/// and observability of (A, C).
class SystemModel {
public:
    SystemModel(Matrix a, Matrix c, Matrix q, Matrix r, Matrix pi0)
        : a_(std::move(a)), c_(std::move(c)), q_(std::move(q)), r_(std::move(r)), pi0_(std::move(pi0)) {
        const std::size_t m = a_.rows();
        if (!a_.is_square()) throw DimensionMismatch("A must be square, got " + a_.shape());
        if (c_.cols() != m || c_.rows() == 0) throw DimensionMismatch("C must be n x " + std::to_string(m));
        if (q_.rows() != m || q_.cols() != m) throw DimensionMismatch("Q must be " + a_.shape());
        if (pi0_.rows() != m || pi0_.cols() != m) throw DimensionMismatch("Pi0 must be " + a_.shape());
        const std::size_t n = c_.rows();
        if (r_.rows() != n || r_.cols() != n) throw DimensionMismatch("R must be n x n with n = rows(C)");
        if (!is_symmetric_psd(q_)) throw InvalidArgument("Q must be symmetric PSD");
        if (!is_symmetric_psd(pi0_)) throw InvalidArgument("Pi0 must be symmetric PSD");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j && !(r_(i, i) > 0.0)) throw InvalidArgument("R diagonal entries must be positive");
                if (i != j && r_(i, j) != 0.0) throw InvalidArgument("R must be diagonal");
            }
        if (!observable()) throw InvalidArgument("(A, C) is not observable");
    }

    // Noise-free variant used by tests for degenerate processes (R = 0); skips
    // the positivity and observability checks.
    static SystemModel unchecked(Matrix a, Matrix c, Matrix q, Matrix r, Matrix pi0) {
        return SystemModel(std::move(a), std::move(c), std::move(q), std::move(r), std::move(pi0), Unchecked{});
    }

    const Matrix &A() const noexcept { return a_; }
    const Matrix &C() const noexcept { return c_; }
    const Matrix &Q() const noexcept { return q_; }
    const Matrix &R() const noexcept { return r_; }
    const Matrix &Pi0() const noexcept { return pi0_; }
    std::size_t state_dim() const noexcept { return a_.rows(); }
    std::size_t devices() const noexcept { return c_.rows(); }

    bool observable() const {
        const std::size_t m = state_dim();
        const std::size_t n = devices();
        Matrix obs(n * m, m);
        Matrix block = c_;
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) obs(k * n + i, j) = block(i, j);
            block = block * a_;
        }
        return detail::numeric_rank(obs) == m;
    }

private:
    struct Unchecked {};
    SystemModel(Matrix a, Matrix c, Matrix q, Matrix r, Matrix pi0, Unchecked)
        : a_(std::move(a)), c_(std::move(c)), q_(std::move(q)), r_(std::move(r)), pi0_(std::move(pi0)) {}

    Matrix a_, c_, q_, r_, pi0_;
};

struct EstimatorState {
    Vector x_hat;       // updated estimate
    Vector x_hat_pred;  // prediction A * previous x_hat
    ErrorCovariance P;
};

struct Trajectory {
    std::vector<Vector> states;
    std::vector<Vector> measurements;
};

/// Draws x_0 ~ N(0, Pi0) (or uses `x0` when given), then x_{k+1} = A x_k + w_k and
/// y_k = C x_k + v_k for k = 0..steps-1. All randomness comes from `seed`.
inline Trajectory simulate_process(const SystemModel &model, std::size_t steps, std::uint64_t seed,
                                   std::optional<Vector> x0 = std::nullopt) {
    if (steps < 1) throw InvalidArgument("simulate_process needs steps >= 1");
    Rng rng(seed);
    const Matrix lq = detail::psd_cholesky(model.Q());
    const Matrix lpi = detail::psd_cholesky(model.Pi0());
    Vector r_sd(model.devices());
    for (std::size_t i = 0; i < r_sd.size(); ++i) r_sd[i] = std::sqrt(std::max(0.0, model.R()(i, i)));

    Vector x = x0 ? *x0 : detail::gaussian(rng, lpi);
    if (x.size() != model.state_dim()) throw DimensionMismatch("x0 length does not match state dimension");

    Trajectory traj;
    traj.states.reserve(steps);
    traj.measurements.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        Vector y = model.C() * x;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += r_sd[i] * rng.normal();
        traj.states.push_back(x);
        traj.measurements.push_back(std::move(y));
        Vector next = model.A() * x;
        const Vector w = detail::gaussian(rng, lq);
        for (std::size_t j = 0; j < next.size(); ++j) next[j] += w[j];
        x = std::move(next);
    }
    return traj;
}

/// Per-device innovation z_i = y_i - C_i * x_pred, where x_pred is the prediction
/// the estimator fed back for this slot.
inline Vector innovation(std::span<const double> y, std::span<const double> x_pred, const SystemModel &model) {
    if (y.size() != model.devices()) throw DimensionMismatch("measurement length != device count");
    if (x_pred.size() != model.state_dim()) throw DimensionMismatch("prediction length != state dimension");
    Vector z = model.C() * x_pred;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = y[i] - z[i];
    return z;
}

// h(X) = A X A^T + Q
inline Matrix predict_covariance(const Matrix &x, const SystemModel &model) {
    return symmetrize(model.A() * x * model.A().transpose() + model.Q());
}

// g~(X) = X - X C^T (C X C^T + R)^-1 C X
inline Matrix update_covariance(const Matrix &x, const SystemModel &model) {
    const Matrix &c = model.C();
    const Matrix xct = x * c.transpose();
    const Matrix s = c * xct + model.R();
    return symmetrize(x - xct * invert(s) * xct.transpose());
}

namespace detail {

inline void check_mask(const Mask &gamma, const SystemModel &model) {
    if (gamma.size() != model.devices())
        throw DimensionMismatch("arrival mask length " + std::to_string(gamma.size()) + " != device count " +
                                std::to_string(model.devices()));
}

// Rows of C (and rows/cols of R) zeroed where the packet was lost.
inline Matrix masked_rows(const Matrix &m, const Mask &gamma) {
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        if (!gamma[i])
            for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = 0.0;
    return out;
}

inline Matrix masked_noise(const Matrix &r, const Mask &gamma) {
    Matrix out = r;
    for (std::size_t i = 0; i < r.rows(); ++i)
        for (std::size_t j = 0; j < r.cols(); ++j)
            if (!gamma[i] || !gamma[j]) out(i, j) = 0.0;
    return out;
}

} // namespace detail

/// Gain K~ = H C~^T (C~ H C~^T + R~)^+ for a predicted covariance H, with
/// C~ = gamma C and R~ = gamma R gamma^T.
inline Matrix masked_gain(const Matrix &predicted, const Mask &gamma, const SystemModel &model) {
    detail::check_mask(gamma, model);
    const Matrix ct = detail::masked_rows(model.C(), gamma);
    const Matrix hct = predicted * ct.transpose();
    const Matrix gram = ct * hct + detail::masked_noise(model.R(), gamma);
    return hct * masked_pseudo_inverse(gram, gamma);
}

/// F(X, gamma) = (I - K~ C~) h(X): one prediction plus an update that uses only the
/// channels whose packets arrived.
inline ErrorCovariance masked_update(const ErrorCovariance &x, const Mask &gamma, const SystemModel &model) {
    detail::check_mask(gamma, model);
    const Matrix h = predict_covariance(x.matrix(), model);
    bool any = false;
    for (bool g : gamma) any = any || g;
    if (!any) return ErrorCovariance(h);
    const Matrix k = masked_gain(h, gamma, model);
    const Matrix ct = detail::masked_rows(model.C(), gamma);
    const Matrix ikc = Matrix::identity(model.state_dim()) - k * ct;
    return ErrorCovariance(symmetrize(ikc * h));
}

inline Mask all_arrived(std::size_t n) { return Mask(n, true); }

/// Steady-state (updated) error covariance: the fixed point of X = F(X, all-ones),
/// i.e. X = g~(h(X)), iterated from Pi0 until the max-abs change is <= tol.
/// Its prediction counterpart is h of the result.
inline ErrorCovariance steady_state_covariance(const SystemModel &model, double tol = 1e-10,
                                               std::size_t max_iter = 10000) {
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    const Mask ones = all_arrived(model.devices());
    ErrorCovariance x(model.Pi0());
    for (std::size_t it = 0; it < max_iter; ++it) {
        ErrorCovariance next = masked_update(x, ones, model);
        const double change = max_abs_diff(next.matrix(), x.matrix());
        x = std::move(next);
        if (change <= tol) return x;
    }
    throw NoConvergence("Riccati iteration did not converge in " + std::to_string(max_iter) + " iterations");
}

/// Limit of the prediction covariance P_k^-, the fixed point of X = h(g~(X)).
inline ErrorCovariance steady_state_prediction_covariance(const SystemModel &model, double tol = 1e-10,
                                                          std::size_t max_iter = 10000) {
    return ErrorCovariance(predict_covariance(steady_state_covariance(model, tol, max_iter).matrix(), model));
}

inline Vector predict_state(std::span<const double> x_hat, const SystemModel &model) { return model.A() * x_hat; }

/// One estimator slot. `received` holds the innovations that arrived (relative to
/// the prediction A * state.x_hat) and must be zero where gamma is false.
inline EstimatorState kalman_step(const EstimatorState &state, std::span<const double> received, const Mask &gamma,
                                  const SystemModel &model) {
    detail::check_mask(gamma, model);
    if (received.size() != model.devices()) throw DimensionMismatch("received innovation length != device count");
    for (std::size_t i = 0; i < gamma.size(); ++i)
        if (!gamma[i] && received[i] != 0.0)
            throw InvalidArgument("received innovation must be zero on lost channel " + std::to_string(i));

    Vector pred = predict_state(state.x_hat, model);
    const Matrix h = predict_covariance(state.P.matrix(), model);
    const Vector correction = masked_gain(h, gamma, model) * received;
    Vector updated = pred;
    for (std::size_t j = 0; j < updated.size(); ++j) updated[j] += correction[j];
    return EstimatorState{std::move(updated), std::move(pred), masked_update(state.P, gamma, model)};
}

/// Smallest k <= 1000 with |trace(F^k(P0, all-ones)) - trace(P_bar)| <= tol.
inline std::size_t recovery_horizon(const ErrorCovariance &p0, const SystemModel &model, double tol,
                                    const ErrorCovariance &steady) {
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    const Mask ones = all_arrived(model.devices());
    const double target = steady.trace();
    ErrorCovariance x = p0;
    for (std::size_t k = 0; k <= 1000; ++k) {
        if (std::abs(x.trace() - target) <= tol) return k;
        x = masked_update(x, ones, model);
    }
    throw NoConvergence("covariance did not recover within 1000 steps");
}

inline std::size_t recovery_horizon(const ErrorCovariance &p0, const SystemModel &model, double tol) {
    return recovery_horizon(p0, model, tol, steady_state_covariance(model));
}

} // namespace rse

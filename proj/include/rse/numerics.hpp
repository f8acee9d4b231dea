// Small dense linear algebra for the estimator and the games.
// Matrices here are a few rows at most, so everything is row-major std::vector storage.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rse/error.hpp"

namespace rse {

using Vector = std::vector<double>;
using Mask = std::vector<bool>;

inline constexpr double kPivotTolerance = 1e-12;

class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        check_finite();
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_)
            throw DimensionMismatch("matrix entries length " + std::to_string(data_.size()) +
                                    " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
        check_finite();
    }

    // Nested row lists: Matrix{{1, 2}, {3, 4}}.
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto &r : rows) {
            if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
            data_.insert(data_.end(), r.begin(), r.end());
        }
        check_finite();
    }

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> entries() const noexcept { return data_; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    Matrix &operator+=(const Matrix &o) {
        require_same_shape(o, "+");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Matrix &operator-=(const Matrix &o) {
        require_same_shape(o, "-");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }

    Matrix &operator*=(double s) {
        for (auto &v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix &b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix &b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix &a, const Matrix &b) {
        if (a.cols_ != b.rows_)
            throw DimensionMismatch("matrix product " + a.shape() + " * " + b.shape());
        Matrix out(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
            }
        return out;
    }

    friend Vector operator*(const Matrix &a, std::span<const double> x) {
        if (a.cols_ != x.size())
            throw DimensionMismatch("matrix-vector product " + a.shape() + " * " +
                                    std::to_string(x.size()));
        Vector out(a.rows_, 0.0);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t j = 0; j < a.cols_; ++j) out[i] += a(i, j) * x[j];
        return out;
    }

    friend bool operator==(const Matrix &, const Matrix &) = default;

    std::string shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

private:
    void check_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) throw NonFinite("matrix entry is not finite");
    }

    void require_same_shape(const Matrix &o, const char *op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw DimensionMismatch(std::string("matrix ") + op + " " + shape() + " vs " + o.shape());
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double trace(const Matrix &m) {
    if (!m.is_square()) throw DimensionMismatch("trace of non-square " + m.shape());
    double t = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
    return t;
}

inline double max_abs(const Matrix &m) {
    double best = 0.0;
    for (double v : m.entries()) best = std::max(best, std::abs(v));
    return best;
}

inline double max_abs_diff(const Matrix &a, const Matrix &b) { return max_abs(a - b); }

// (X + X^T) / 2
inline Matrix symmetrize(const Matrix &m) {
    if (!m.is_square()) throw DimensionMismatch("symmetrize of non-square " + m.shape());
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j) {
            const double avg = 0.5 * (m(i, j) + m(j, i));
            out(i, j) = avg;
            out(j, i) = avg;
        }
    return out;
}

inline bool is_symmetric(const Matrix &m, double tol) {
    if (!m.is_square()) return false;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol) return false;
    return true;
}

/// Gauss-Jordan inversion with partial pivoting.
/// Throws SingularMatrix when the best available pivot magnitude is at or below 1e-12.
inline Matrix invert(const Matrix &m) {
    if (!m.is_square()) throw DimensionMismatch("invert of non-square " + m.shape());
    const std::size_t n = m.rows();
    Matrix a = m;
    Matrix inv = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (std::abs(a(pivot, col)) <= kPivotTolerance)
            throw SingularMatrix("pivot underflow in column " + std::to_string(col));
        if (pivot != col)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a(pivot, c), a(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        const double p = a(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            a(col, c) /= p;
            inv(col, c) /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

/// Pseudo-inverse of a masked Gram matrix: the mask-false rows/cols are zero in the
/// result and the mask-true block is the inverse of the retained submatrix.
inline Matrix masked_pseudo_inverse(const Matrix &g, const Mask &mask) {
    if (!g.is_square()) throw DimensionMismatch("masked pseudo-inverse of non-square " + g.shape());
    if (mask.size() != g.rows())
        throw DimensionMismatch("mask length " + std::to_string(mask.size()) + " vs " + g.shape());
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) keep.push_back(i);

    Matrix out(g.rows(), g.cols());
    if (keep.empty()) return out;
    if (keep.size() == g.rows()) return invert(g);

    Matrix sub(keep.size(), keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t j = 0; j < keep.size(); ++j) sub(i, j) = g(keep[i], keep[j]);
    const Matrix sub_inv = invert(sub);
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t j = 0; j < keep.size(); ++j) out(keep[i], keep[j]) = sub_inv(i, j);
    return out;
}

// Cyclic Jacobi sweeps; only used for the PSD check on small symmetric matrices.
inline Vector symmetric_eigenvalues(const Matrix &m) {
    if (!m.is_square()) throw DimensionMismatch("eigenvalues of non-square " + m.shape());
    const std::size_t n = m.rows();
    Matrix a = symmetrize(m);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    Vector eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

inline double min_eigenvalue(const Matrix &m) { return symmetric_eigenvalues(m).front(); }

inline bool is_symmetric_psd(const Matrix &m, double tol = 1e-9) {
    return is_symmetric(m, tol) && min_eigenvalue(m) >= -tol;
}

} // namespace rse

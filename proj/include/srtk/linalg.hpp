#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "srtk/core.hpp"

namespace srtk::linalg {

// Row-major dense matrix, just enough for the metric suite.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Mat mat_mul(const Mat& x, const Mat& y) {
    if (x.cols != y.rows) throw ShapeError("mat_mul: inner dims mismatch");
    Mat out(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const double v = x(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < y.cols; ++j) out(i, j) += v * y(k, j);
        }
    return out;
}

inline Mat transpose(const Mat& x) {
    Mat out(x.cols, x.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
    return out;
}

struct EighResult {
    std::vector<double> values;  // unordered
    Mat vectors;                 // eigenvectors in columns
};

// Cyclic Jacobi for symmetric matrices. Quadratic convergence; plenty for
// the feature dimensions this toolkit targets.
inline EighResult eigh(const Mat& sym, int max_sweeps = 64) {
    if (sym.rows != sym.cols) throw ShapeError("eigh: matrix must be square");
    const int n = sym.rows;
    Mat a = sym;
    Mat v = Mat::identity(n);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off <= 1e-30 * static_cast<double>(n) * n) break;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (int j = 0; j < n; ++j) {
                    const double apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - s * aqj;
                    a(q, j) = s * apj + c * aqj;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
    }
    EighResult res;
    res.values.resize(n);
    for (int i = 0; i < n; ++i) res.values[i] = a(i, i);
    res.vectors = std::move(v);
    return res;
}

// Gaussian elimination with partial pivoting. Returns nullopt when a pivot
// underflows the given tolerance (matrix numerically singular).
inline std::optional<std::vector<double>> solve(const Mat& m,
                                                const std::vector<double>& b,
                                                double pivot_tol = 1e-12) {
    if (m.rows != m.cols || b.size() != static_cast<std::size_t>(m.rows))
        throw ShapeError("solve: dimension mismatch");
    const int n = m.rows;
    Mat a = m;
    std::vector<double> x = b;
    double scale = 0.0;
    for (double v : a.a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return std::nullopt;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) <= pivot_tol * scale) return std::nullopt;
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
            std::swap(x[piv], x[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            x[r] -= f * x[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = x[r];
        for (int j = r + 1; j < n; ++j) s -= a(r, j) * x[j];
        x[r] = s / a(r, r);
    }
    return x;
}

// x^T pinv(M) x via eigendecomposition, for singular averaged covariances.
inline double quadform_pinv(const Mat& m, const std::vector<double>& x,
                            double rel_tol = 1e-10) {
    const auto eg = eigh(m);
    const int n = m.rows;
    double lmax = 0.0;
    for (double l : eg.values) lmax = std::max(lmax, std::abs(l));
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        if (std::abs(eg.values[k]) <= rel_tol * lmax) continue;
        double proj = 0.0;
        for (int i = 0; i < n; ++i) proj += eg.vectors(i, k) * x[i];
        acc += proj * proj / eg.values[k];
    }
    return acc;
}

}  // namespace srtk::linalg

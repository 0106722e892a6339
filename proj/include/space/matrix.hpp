#pragma once

// Dense row-major matrix of doubles. Everything the toy transformer needs,
// nothing more: no views, no broadcasting, no lazy evaluation.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "space/errors.hpp"

namespace space {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }
};

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

inline void require_finite(const Matrix& m, const char* where) {
    for (double v : m.data) {
        if (!std::isfinite(v)) {
            throw ShapeError(std::string(where) + ": non-finite entry");
        }
    }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul " + shape_str(a) + " x " + shape_str(b));
    }
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* crow = c.data.data() + i * c.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    require_finite(c, "matmul");
    return c;
}

// a * b^T without materializing the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw ShapeError("matmul_nt " + shape_str(a) + " x " + shape_str(b) + "^T");
    }
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + j * b.cols;
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) {
                acc += arow[k] * brow[k];
            }
            c(i, j) = acc;
        }
    }
    require_finite(c, "matmul_nt");
    return c;
}

// a^T * b.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw ShapeError("matmul_tn " + shape_str(a) + "^T x " + shape_str(b));
    }
    Matrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.data.data() + k * a.cols;
        const double* brow = b.data.data() + k * b.cols;
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            double* crow = c.data.data() + i * c.cols;
            for (std::size_t j = 0; j < b.cols; ++j) {
                crow[j] += aki * brow[j];
            }
        }
    }
    require_finite(c, "matmul_tn");
    return c;
}

inline void softmax_row_inplace(std::span<double> row) {
    double mx = row[0];
    for (double v : row) {
        if (v > mx) mx = v;
    }
    double sum = 0.0;
    for (double& v : row) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : row) {
        v /= sum;
    }
}

// Row-wise softmax, stabilized by row-max subtraction.
inline Matrix softmax_rows(const Matrix& m) {
    require_finite(m, "softmax_rows input");
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows; ++i) {
        softmax_row_inplace(out.row(i));
    }
    return out;
}

inline constexpr double kProbEps = 1e-12;

// -log p[target] with p clamped away from zero.
inline double cross_entropy(std::span<const double> probs_row, std::size_t target) {
    if (target >= probs_row.size()) {
        throw IndexError("cross_entropy target " + std::to_string(target) + " >= vocab " +
                         std::to_string(probs_row.size()));
    }
    double p = probs_row[target];
    if (p < kProbEps) p = kProbEps;
    return -std::log(p);
}

}  // namespace space

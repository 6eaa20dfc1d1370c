#pragma once

#include <cmath>
#include <vector>

#include "swt/common.hpp"

namespace swt {

// Dense row-major matrix of doubles. Covariance matrices, variance matrices
// and eigenvector matrices are all carried by this type.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) {
            throw DimensionError("Matrix: negative dimension");
        }
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return values_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return values_[static_cast<size_t>(i) * cols_ + j]; }

    double* row(int i) { return values_.data() + static_cast<size_t>(i) * cols_; }
    const double* row(int i) const { return values_.data() + static_cast<size_t>(i) * cols_; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const {
        double s = 0.0;
        for (double v : values_) s = std::max(s, std::abs(v));
        return s;
    }

    bool all_finite() const {
        for (double v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    bool is_symmetric(double tol = 1e-12) const {
        if (rows_ != cols_) return false;
        for (int i = 0; i < rows_; ++i) {
            for (int j = i + 1; j < cols_; ++j) {
                if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
            }
        }
        return true;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> values_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix subtract(const Matrix& a, const Matrix& b);
double frobenius_distance(const Matrix& a, const Matrix& b);

}  // namespace swt

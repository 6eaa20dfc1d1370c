#include "swt/matrix.hpp"

namespace swt {

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("multiply: inner dimensions disagree");
    }
    Matrix out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        double* out_row = out.row(i);
        const double* a_row = a.row(i);
        for (int k = 0; k < a.cols(); ++k) {
            const double av = a_row[k];
            if (av == 0.0) continue;
            const double* b_row = b.row(k);
            for (int j = 0; j < b.cols(); ++j) {
                out_row[j] += av * b_row[j];
            }
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            out(j, i) = m(i, j);
        }
    }
    return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("subtract: shape mismatch");
    }
    Matrix out = a;
    for (size_t i = 0; i < out.values().size(); ++i) {
        out.values()[i] -= b.values()[i];
    }
    return out;
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("frobenius_distance: shape mismatch");
    }
    double s = 0.0;
    for (size_t i = 0; i < a.values().size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace swt

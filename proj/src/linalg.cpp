#include "swt/linalg.hpp"

#include <algorithm>
#include <numeric>

namespace swt {

void validate_feature_map(const FeatureMap& x, const char* op) {
    if (x.channels <= 0 || x.height <= 0 || x.width <= 0) {
        throw DimensionError(std::string(op) + ": feature map dimensions must be positive");
    }
    if (x.data.size() != static_cast<size_t>(x.channels) * x.pixels()) {
        throw DimensionError(std::string(op) + ": data length does not match C*H*W");
    }
    if (!x.all_finite()) {
        throw NumericError(std::string(op) + ": feature map contains non-finite values");
    }
}

MeanVector compute_mean(const FeatureMap& x) {
    validate_feature_map(x, "compute_mean");
    const int n = x.pixels();
    MeanVector mu(x.channels, 0.0);
    for (int c = 0; c < x.channels; ++c) {
        const double* p = x.channel(c);
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += p[i];
        mu[c] = s / n;
    }
    return mu;
}

Matrix compute_covariance(const FeatureMap& x, const MeanVector& mu) {
    validate_feature_map(x, "compute_covariance");
    if (static_cast<int>(mu.size()) != x.channels) {
        throw DimensionError("compute_covariance: mean length does not match channel count");
    }
    const int c = x.channels;
    const int n = x.pixels();
    Matrix cov(c, c);
    // Upper triangle computed once, mirrored for exact symmetry.
    for (int i = 0; i < c; ++i) {
        const double* xi = x.channel(i);
        for (int j = i; j < c; ++j) {
            const double* xj = x.channel(j);
            double s = 0.0;
            for (int p = 0; p < n; ++p) {
                s += (xi[p] - mu[i]) * (xj[p] - mu[j]);
            }
            const double v = s / n;
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }
    return cov;
}

namespace {

double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            if (i != j) s += a(i, j) * a(i, j);
        }
    }
    return std::sqrt(s);
}

}  // namespace

EigenDecomposition sym_eigen(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw DimensionError("sym_eigen: matrix must be square and non-empty");
    }
    if (!m.all_finite()) {
        throw NumericError("sym_eigen: matrix contains non-finite values");
    }
    if (!m.is_symmetric(1e-9 * std::max(1.0, m.max_abs()))) {
        throw NumericError("sym_eigen: matrix is not symmetric");
    }
    const int n = m.rows();
    Matrix a = m;
    Matrix q = Matrix::identity(n);
    const double norm = std::max(m.frobenius_norm(), 0.0);

    bool converged = norm == 0.0;
    for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
        if (offdiag_frobenius(a) <= kJacobiTolerance * norm) {
            converged = true;
            break;
        }
        for (int p = 0; p < n - 1; ++p) {
            for (int r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0) continue;
                const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // A <- J^T A J restricted to rows/cols p, r.
                const double app = a(p, p), arr = a(r, r);
                a(p, p) = app - t * apr;
                a(r, r) = arr + t * apr;
                a(p, r) = 0.0;
                a(r, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == r) continue;
                    const double akp = a(k, p), akr = a(k, r);
                    a(k, p) = c * akp - s * akr;
                    a(p, k) = a(k, p);
                    a(k, r) = s * akp + c * akr;
                    a(r, k) = a(k, r);
                }
                for (int k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - s * qkr;
                    q(k, r) = s * qkp + c * qkr;
                }
            }
        }
        if (offdiag_frobenius(a) <= kJacobiTolerance * norm) converged = true;
    }
    if (!converged) {
        throw NumericError("sym_eigen: Jacobi sweeps did not converge");
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&a](int i, int j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (int i = 0; i < n; ++i) {
            out.eigenvectors(i, j) = q(i, order[j]);
        }
    }
    return out;
}

Matrix inverse_sqrt(const Matrix& m, RankMode mode) {
    EigenDecomposition eig = sym_eigen(m);
    const int n = m.rows();
    const double lambda_max = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.front();
    const double tol = kRankTolerance * std::max(lambda_max, 0.0);

    std::vector<double> w(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double lambda = eig.eigenvalues[i];
        if (lambda < -1e-6 * std::max(1.0, lambda_max)) {
            throw NumericError("inverse_sqrt: matrix has a significantly negative eigenvalue");
        }
        if (lambda <= tol) {
            if (mode == RankMode::strict) {
                throw NumericError("inverse_sqrt: matrix is numerically rank deficient");
            }
            w[i] = 0.0;  // pseudo-inverse on the null space
        } else {
            w[i] = 1.0 / std::sqrt(lambda);
        }
    }

    // R = Q diag(w) Q^T, upper triangle mirrored for exact symmetry.
    Matrix r(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) {
                s += eig.eigenvectors(i, k) * w[k] * eig.eigenvectors(j, k);
            }
            r(i, j) = s;
            r(j, i) = s;
        }
    }
    return r;
}

FeatureMap whiten(const FeatureMap& x, RankMode mode) {
    validate_feature_map(x, "whiten");
    const MeanVector mu = compute_mean(x);
    const Matrix cov = compute_covariance(x, mu);
    const Matrix r = inverse_sqrt(cov, mode);

    const int c = x.channels;
    const int n = x.pixels();
    FeatureMap out(c, x.height, x.width);
    for (int i = 0; i < c; ++i) {
        double* dst = out.channel(i);
        const double* ri = r.row(i);
        for (int k = 0; k < c; ++k) {
            const double w = ri[k];
            if (w == 0.0) continue;
            const double* src = x.channel(k);
            const double mk = mu[k];
            for (int p = 0; p < n; ++p) {
                dst[p] += w * (src[p] - mk);
            }
        }
    }
    return out;
}

FeatureMap standardize(const FeatureMap& x) {
    validate_feature_map(x, "standardize");
    const int n = x.pixels();
    FeatureMap out(x.channels, x.height, x.width);
    for (int c = 0; c < x.channels; ++c) {
        const double* src = x.channel(c);
        double* dst = out.channel(c);
        double mean = 0.0;
        for (int p = 0; p < n; ++p) mean += src[p];
        mean /= n;
        double var = 0.0;
        for (int p = 0; p < n; ++p) {
            const double d = src[p] - mean;
            var += d * d;
        }
        var /= n;
        const double scale = 1.0 / std::sqrt(std::max(var, kStandardizeEpsilon));
        for (int p = 0; p < n; ++p) {
            dst[p] = scale * (src[p] - mean);
        }
    }
    return out;
}

Matrix standardized_covariance(const FeatureMap& x) {
    const FeatureMap xs = standardize(x);
    const int c = x.channels;
    const int n = x.pixels();
    Matrix cov(c, c);
    for (int i = 0; i < c; ++i) {
        const double* xi = xs.channel(i);
        for (int j = i; j < c; ++j) {
            const double* xj = xs.channel(j);
            double s = 0.0;
            for (int p = 0; p < n; ++p) s += xi[p] * xj[p];
            const double v = s / n;
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }
    return cov;
}

bool is_valid_covariance(const Matrix& m, std::string* why) {
    if (m.rows() != m.cols()) {
        if (why) *why = "not square";
        return false;
    }
    if (!m.is_symmetric(1e-12)) {
        if (why) *why = "asymmetric beyond 1e-12";
        return false;
    }
    EigenDecomposition eig = sym_eigen(m);
    for (double lambda : eig.eigenvalues) {
        if (lambda < -1e-9) {
            if (why) *why = "eigenvalue below -1e-9";
            return false;
        }
    }
    return true;
}

}  // namespace swt

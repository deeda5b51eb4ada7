#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "sft/config.hpp"

namespace sft {

// Small dense real matrix; enough numerics for blockwise C*-algebra work.
class DenseMat {
  public:
    DenseMat() = default;
    DenseMat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static DenseMat identity(std::size_t n) {
        DenseMat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

    friend DenseMat operator+(const DenseMat& x, const DenseMat& y) {
        DenseMat r(x.rows_, x.cols_);
        for (std::size_t i = 0; i < x.a_.size(); ++i) r.a_[i] = x.a_[i] + y.a_[i];
        return r;
    }
    friend DenseMat operator-(const DenseMat& x, const DenseMat& y) {
        DenseMat r(x.rows_, x.cols_);
        for (std::size_t i = 0; i < x.a_.size(); ++i) r.a_[i] = x.a_[i] - y.a_[i];
        return r;
    }
    friend DenseMat operator*(double s, const DenseMat& x) {
        DenseMat r = x;
        for (auto& v : r.a_) v *= s;
        return r;
    }
    friend DenseMat operator*(const DenseMat& x, const DenseMat& y) {
        DenseMat r(x.rows_, y.cols_);
        for (std::size_t i = 0; i < x.rows_; ++i)
            for (std::size_t k = 0; k < x.cols_; ++k) {
                double v = x(i, k);
                if (v == 0.0) continue;
                for (std::size_t j = 0; j < y.cols_; ++j) r(i, j) += v * y(k, j);
            }
        return r;
    }

    DenseMat transpose() const {
        DenseMat r(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    double max_abs() const {
        double m = 0;
        for (double v : a_) m = std::max(m, std::fabs(v));
        return m;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi.
// Returns eigenvalues ascending; columns of vecs are eigenvectors.
struct SymEig {
    std::vector<double> values;
    DenseMat vectors;
};

inline SymEig sym_eig(DenseMat a) {
    const std::size_t n = a.rows();
    DenseMat v = DenseMat::identity(n);
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    // sort ascending
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    SymEig r;
    r.values.resize(n);
    r.vectors = DenseMat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        r.values[j] = a(idx[j], idx[j]);
        for (std::size_t i = 0; i < n; ++i) r.vectors(i, j) = v(i, idx[j]);
    }
    return r;
}

// Largest singular value.
inline double spectral_norm(const DenseMat& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    DenseMat g = m.cols() <= m.rows() ? m.transpose() * m : m * m.transpose();
    auto e = sym_eig(g);
    double top = e.values.empty() ? 0.0 : e.values.back();
    return top > 0 ? std::sqrt(top) : 0.0;
}

// Symmetric square root inverse on the support: sum f(lambda) P_lambda with
// f = 1/sqrt clipped below eps.
inline DenseMat sym_isqrt(const DenseMat& a, double eps) {
    auto e = sym_eig(a);
    std::size_t n = a.rows();
    DenseMat r(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        if (e.values[k] <= eps) continue;
        double f = 1.0 / std::sqrt(e.values[k]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                r(i, j) += f * e.vectors(i, k) * e.vectors(j, k);
    }
    return r;
}

} // namespace sft

#pragma once

#include <cstddef>
#include <vector>

#include "sft/bigint.hpp"
#include "sft/rational.hpp"

namespace sft {

// Dense square-or-rectangular matrix over an exact scalar (BigInt or Rational).
template <class T>
class Mat {
  public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    T& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    friend Mat operator+(const Mat& x, const Mat& y) {
        Mat r(x.rows_, x.cols_);
        for (std::size_t i = 0; i < x.a_.size(); ++i) r.a_[i] = x.a_[i] + y.a_[i];
        return r;
    }
    friend Mat operator-(const Mat& x, const Mat& y) {
        Mat r(x.rows_, x.cols_);
        for (std::size_t i = 0; i < x.a_.size(); ++i) r.a_[i] = x.a_[i] - y.a_[i];
        return r;
    }
    friend Mat operator*(const Mat& x, const Mat& y) {
        Mat r(x.rows_, y.cols_);
        for (std::size_t i = 0; i < x.rows_; ++i)
            for (std::size_t k = 0; k < x.cols_; ++k) {
                const T& v = x(i, k);
                if (v == T(0)) continue;
                for (std::size_t j = 0; j < y.cols_; ++j) r(i, j) += v * y(k, j);
            }
        return r;
    }
    friend Mat operator*(const T& s, const Mat& x) {
        Mat r = x;
        for (auto& v : r.a_) v = s * v;
        return r;
    }

    friend bool operator==(const Mat& x, const Mat& y) {
        return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.a_ == y.a_;
    }
    friend bool operator!=(const Mat& x, const Mat& y) { return !(x == y); }

    bool is_zero() const {
        for (const auto& v : a_)
            if (!(v == T(0))) return false;
        return true;
    }

    Mat transpose() const {
        Mat r(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    Mat pow(std::uint64_t e) const {
        Mat r = identity(rows_), b = *this;
        while (e) {
            if (e & 1) r = r * b;
            if (e >>= 1) b = b * b;
        }
        return r;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> a_;
};

using IntMat = Mat<BigInt>;
using RatMat = Mat<Rational>;

inline RatMat to_rational(const IntMat& m) {
    RatMat r(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = Rational(m(i, j));
    return r;
}

// Row-reduce in place over the rationals; returns rank. Columns of the
// kernel basis come out of kernel() below.
inline std::size_t row_reduce(RatMat& m, std::vector<std::size_t>* pivot_cols = nullptr) {
    std::size_t rank = 0;
    for (std::size_t col = 0; col < m.cols() && rank < m.rows(); ++col) {
        std::size_t piv = rank;
        while (piv < m.rows() && m(piv, col).is_zero()) ++piv;
        if (piv == m.rows()) continue;
        if (piv != rank)
            for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(piv, j), m(rank, j));
        Rational inv = Rational(1) / m(rank, col);
        for (std::size_t j = col; j < m.cols(); ++j) m(rank, j) *= inv;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (i == rank || m(i, col).is_zero()) continue;
            Rational f = m(i, col);
            for (std::size_t j = col; j < m.cols(); ++j) m(i, j) -= f * m(rank, j);
        }
        if (pivot_cols) pivot_cols->push_back(col);
        ++rank;
    }
    return rank;
}

inline std::size_t rank_of(RatMat m) { return row_reduce(m); }

// Basis of {x : M x = 0}, one column per basis vector.
inline RatMat kernel(RatMat m) {
    std::vector<std::size_t> piv;
    row_reduce(m, &piv);
    std::vector<bool> is_piv(m.cols(), false);
    for (auto c : piv) is_piv[c] = true;
    std::vector<std::size_t> free_cols;
    for (std::size_t c = 0; c < m.cols(); ++c)
        if (!is_piv[c]) free_cols.push_back(c);
    RatMat basis(m.cols(), free_cols.size());
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
        std::size_t fc = free_cols[k];
        basis(fc, k) = Rational(1);
        for (std::size_t i = 0; i < piv.size(); ++i) basis(piv[i], k) = -m(i, fc);
    }
    return basis;
}

// Solve M x = b exactly; returns false when inconsistent. On success x is one
// solution (free variables set to zero).
inline bool solve(const RatMat& m, const std::vector<Rational>& b, std::vector<Rational>& x) {
    RatMat aug(m.rows(), m.cols() + 1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) aug(i, j) = m(i, j);
        aug(i, m.cols()) = b[i];
    }
    std::vector<std::size_t> piv;
    std::size_t rank = row_reduce(aug, &piv);
    for (std::size_t i = 0; i < rank; ++i)
        if (piv[i] == m.cols()) return false; // pivot in the augmented column
    for (std::size_t i = rank; i < m.rows(); ++i)
        if (!aug(i, m.cols()).is_zero()) return false;
    x.assign(m.cols(), Rational(0));
    for (std::size_t i = 0; i < rank; ++i) x[piv[i]] = aug(i, m.cols());
    return true;
}

} // namespace sft

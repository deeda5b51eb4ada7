#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "sft/config.hpp"

namespace sft {

// Signed arbitrary-precision integer, base 2^32 little-endian magnitude.
// Path counts grow like lambda^len, so fixed-width words overflow quickly;
// everything exact in the library routes through this type.
class BigInt {
  public:
    BigInt() = default;
    BigInt(std::int64_t v) { // NOLINT: implicit by design
        if (v < 0) { neg_ = true; }
        std::uint64_t a = neg_ ? (~static_cast<std::uint64_t>(v) + 1) : static_cast<std::uint64_t>(v);
        while (a) { mag_.push_back(static_cast<std::uint32_t>(a)); a >>= 32; }
    }

    static BigInt from_string(const std::string& s) {
        BigInt r;
        std::size_t i = 0;
        bool neg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) { neg = s[i] == '-'; ++i; }
        if (i == s.size()) throw input_error("BigInt: empty literal");
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') throw input_error("BigInt: bad digit in literal");
            r.mul_small(10);
            r.add_small(static_cast<std::uint32_t>(s[i] - '0'));
        }
        r.neg_ = neg && !r.is_zero();
        return r;
    }

    bool is_zero() const { return mag_.empty(); }
    bool is_neg() const { return neg_; }
    bool is_one() const { return !neg_ && mag_.size() == 1 && mag_[0] == 1; }
    bool odd() const { return !mag_.empty() && (mag_[0] & 1u); }

    int sign() const { return is_zero() ? 0 : (neg_ ? -1 : 1); }

    friend BigInt operator-(const BigInt& a) {
        BigInt r = a;
        if (!r.is_zero()) r.neg_ = !r.neg_;
        return r;
    }

    friend BigInt operator+(const BigInt& a, const BigInt& b) {
        if (a.neg_ == b.neg_) {
            BigInt r;
            r.mag_ = add_mag(a.mag_, b.mag_);
            r.neg_ = a.neg_ && !r.mag_.empty();
            return r;
        }
        int c = cmp_mag(a.mag_, b.mag_);
        if (c == 0) return BigInt();
        BigInt r;
        if (c > 0) { r.mag_ = sub_mag(a.mag_, b.mag_); r.neg_ = a.neg_; }
        else { r.mag_ = sub_mag(b.mag_, a.mag_); r.neg_ = b.neg_; }
        return r;
    }
    friend BigInt operator-(const BigInt& a, const BigInt& b) { return a + (-b); }

    friend BigInt operator*(const BigInt& a, const BigInt& b) {
        if (a.is_zero() || b.is_zero()) return BigInt();
        BigInt r;
        r.mag_.assign(a.mag_.size() + b.mag_.size(), 0);
        for (std::size_t i = 0; i < a.mag_.size(); ++i) {
            std::uint64_t carry = 0;
            for (std::size_t j = 0; j < b.mag_.size(); ++j) {
                std::uint64_t cur = static_cast<std::uint64_t>(a.mag_[i]) * b.mag_[j] +
                                    r.mag_[i + j] + carry;
                r.mag_[i + j] = static_cast<std::uint32_t>(cur);
                carry = cur >> 32;
            }
            std::size_t k = i + b.mag_.size();
            while (carry) {
                std::uint64_t cur = r.mag_[k] + carry;
                r.mag_[k] = static_cast<std::uint32_t>(cur);
                carry = cur >> 32;
                ++k;
            }
        }
        r.trim();
        r.neg_ = (a.neg_ != b.neg_) && !r.mag_.empty();
        return r;
    }

    // Truncated toward zero, like C++ integer division.
    static void divmod(const BigInt& a, const BigInt& b, BigInt& q, BigInt& r) {
        if (b.is_zero()) throw input_error("BigInt: division by zero");
        int c = cmp_mag(a.mag_, b.mag_);
        if (c < 0) { q = BigInt(); r = a; return; }
        q = BigInt();
        r = BigInt();
        q.mag_.assign(a.mag_.size(), 0);
        // bitwise long division on magnitudes
        for (std::size_t bit = a.mag_.size() * 32; bit-- > 0;) {
            r.shl1();
            if (a.mag_[bit / 32] & (1u << (bit % 32))) {
                if (r.mag_.empty()) r.mag_.push_back(1);
                else r.mag_[0] |= 1u;
            }
            if (cmp_mag(r.mag_, b.mag_) >= 0) {
                r.mag_ = sub_mag(r.mag_, b.mag_);
                q.mag_[bit / 32] |= 1u << (bit % 32);
            }
        }
        q.trim(); r.trim();
        q.neg_ = (a.neg_ != b.neg_) && !q.mag_.empty();
        r.neg_ = a.neg_ && !r.mag_.empty();
    }

    friend BigInt operator/(const BigInt& a, const BigInt& b) {
        BigInt q, r;
        divmod(a, b, q, r);
        return q;
    }
    friend BigInt operator%(const BigInt& a, const BigInt& b) {
        BigInt q, r;
        divmod(a, b, q, r);
        return r;
    }

    BigInt& operator+=(const BigInt& o) { *this = *this + o; return *this; }
    BigInt& operator-=(const BigInt& o) { *this = *this - o; return *this; }
    BigInt& operator*=(const BigInt& o) { *this = *this * o; return *this; }

    friend bool operator==(const BigInt& a, const BigInt& b) {
        return a.neg_ == b.neg_ && a.mag_ == b.mag_;
    }
    friend bool operator!=(const BigInt& a, const BigInt& b) { return !(a == b); }
    friend bool operator<(const BigInt& a, const BigInt& b) {
        if (a.neg_ != b.neg_) return a.neg_;
        int c = cmp_mag(a.mag_, b.mag_);
        return a.neg_ ? c > 0 : c < 0;
    }
    friend bool operator>(const BigInt& a, const BigInt& b) { return b < a; }
    friend bool operator<=(const BigInt& a, const BigInt& b) { return !(b < a); }
    friend bool operator>=(const BigInt& a, const BigInt& b) { return !(a < b); }

    static BigInt gcd(BigInt a, BigInt b) {
        a.neg_ = false; b.neg_ = false;
        while (!b.is_zero()) {
            BigInt q, r;
            divmod(a, b, q, r);
            a = b;
            b = r;
        }
        return a;
    }

    static BigInt pow(const BigInt& base, std::uint64_t e) {
        BigInt r(1), b = base;
        while (e) {
            if (e & 1) r = r * b;
            b = b * b;
            e >>= 1;
        }
        return r;
    }

    BigInt abs() const {
        BigInt r = *this;
        r.neg_ = false;
        return r;
    }

    // Fits in int64? (used by callers that want fast paths)
    bool fits_i64() const {
        if (mag_.size() > 2) return false;
        std::uint64_t v = to_u64_mag();
        return neg_ ? v <= (1ull << 63) : v < (1ull << 63);
    }
    std::int64_t to_i64() const {
        std::uint64_t v = to_u64_mag();
        return neg_ ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
    }

    double to_double() const {
        double r = 0;
        for (std::size_t i = mag_.size(); i-- > 0;) r = r * 4294967296.0 + mag_[i];
        return neg_ ? -r : r;
    }

    std::string to_string() const {
        if (is_zero()) return "0";
        BigInt t = abs();
        std::string s;
        while (!t.is_zero()) {
            std::uint32_t rem = t.divmod_small(1'000'000'000u);
            std::string chunk = std::to_string(rem);
            if (!t.is_zero()) chunk.insert(0, 9 - chunk.size(), '0');
            s.insert(0, chunk);
        }
        if (neg_) s.insert(0, 1, '-');
        return s;
    }

  private:
    bool neg_ = false;
    std::vector<std::uint32_t> mag_;

    void trim() {
        while (!mag_.empty() && mag_.back() == 0) mag_.pop_back();
        if (mag_.empty()) neg_ = false;
    }
    void shl1() {
        std::uint32_t carry = 0;
        for (auto& w : mag_) {
            std::uint32_t nc = w >> 31;
            w = (w << 1) | carry;
            carry = nc;
        }
        if (carry) mag_.push_back(carry);
    }
    void mul_small(std::uint32_t m) {
        std::uint64_t carry = 0;
        for (auto& w : mag_) {
            std::uint64_t cur = static_cast<std::uint64_t>(w) * m + carry;
            w = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        while (carry) { mag_.push_back(static_cast<std::uint32_t>(carry)); carry >>= 32; }
        trim();
    }
    void add_small(std::uint32_t a) {
        std::uint64_t carry = a;
        for (std::size_t i = 0; carry && i < mag_.size(); ++i) {
            std::uint64_t cur = mag_[i] + carry;
            mag_[i] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        if (carry) mag_.push_back(static_cast<std::uint32_t>(carry));
    }
    std::uint32_t divmod_small(std::uint32_t d) {
        std::uint64_t rem = 0;
        for (std::size_t i = mag_.size(); i-- > 0;) {
            std::uint64_t cur = (rem << 32) | mag_[i];
            mag_[i] = static_cast<std::uint32_t>(cur / d);
            rem = cur % d;
        }
        trim();
        return static_cast<std::uint32_t>(rem);
    }
    std::uint64_t to_u64_mag() const {
        std::uint64_t v = 0;
        if (mag_.size() > 1) v = static_cast<std::uint64_t>(mag_[1]) << 32;
        if (!mag_.empty()) v |= mag_[0];
        return v;
    }

    static int cmp_mag(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
        if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
        for (std::size_t i = a.size(); i-- > 0;)
            if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
        return 0;
    }
    static std::vector<std::uint32_t> add_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b) {
        std::vector<std::uint32_t> r(std::max(a.size(), b.size()), 0);
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::uint64_t cur = carry;
            if (i < a.size()) cur += a[i];
            if (i < b.size()) cur += b[i];
            r[i] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        if (carry) r.push_back(static_cast<std::uint32_t>(carry));
        return r;
    }
    // requires |a| >= |b|
    static std::vector<std::uint32_t> sub_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b) {
        std::vector<std::uint32_t> r = a;
        std::int64_t borrow = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::int64_t cur = static_cast<std::int64_t>(r[i]) - borrow -
                               (i < b.size() ? b[i] : 0);
            borrow = cur < 0;
            if (cur < 0) cur += (1ll << 32);
            r[i] = static_cast<std::uint32_t>(cur);
        }
        while (!r.empty() && r.back() == 0) r.pop_back();
        return r;
    }
};

} // namespace sft

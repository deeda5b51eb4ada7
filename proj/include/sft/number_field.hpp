#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "sft/config.hpp"
#include "sft/graph.hpp"
#include "sft/matrix.hpp"
#include "sft/perron.hpp"

namespace sft {

// Dense univariate polynomial over Q, low degree first.
struct RatPoly {
    std::vector<Rational> c;

    int degree() const {
        for (std::size_t i = c.size(); i-- > 0;)
            if (!c[i].is_zero()) return static_cast<int>(i);
        return -1;
    }
    void trim() {
        while (!c.empty() && c.back().is_zero()) c.pop_back();
    }
    bool is_zero() const { return degree() < 0; }

    static RatPoly from_ints(std::vector<BigInt> v) {
        RatPoly p;
        for (auto& b : v) p.c.emplace_back(std::move(b));
        p.trim();
        return p;
    }

    friend RatPoly operator+(const RatPoly& a, const RatPoly& b) {
        RatPoly r;
        r.c.resize(std::max(a.c.size(), b.c.size()));
        for (std::size_t i = 0; i < r.c.size(); ++i) {
            if (i < a.c.size()) r.c[i] += a.c[i];
            if (i < b.c.size()) r.c[i] += b.c[i];
        }
        r.trim();
        return r;
    }
    friend RatPoly operator-(const RatPoly& a, const RatPoly& b) {
        RatPoly r;
        r.c.resize(std::max(a.c.size(), b.c.size()));
        for (std::size_t i = 0; i < r.c.size(); ++i) {
            if (i < a.c.size()) r.c[i] += a.c[i];
            if (i < b.c.size()) r.c[i] -= b.c[i];
        }
        r.trim();
        return r;
    }
    friend RatPoly operator*(const RatPoly& a, const RatPoly& b) {
        if (a.is_zero() || b.is_zero()) return RatPoly{};
        RatPoly r;
        r.c.assign(a.c.size() + b.c.size() - 1, Rational(0));
        for (std::size_t i = 0; i < a.c.size(); ++i) {
            if (a.c[i].is_zero()) continue;
            for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
        }
        r.trim();
        return r;
    }

    // Euclidean division; b must be nonzero.
    static void divmod(const RatPoly& a, const RatPoly& b, RatPoly& q, RatPoly& r) {
        if (b.is_zero()) throw input_error("RatPoly: division by zero polynomial");
        r = a;
        q = RatPoly{};
        int db = b.degree();
        Rational lead = b.c[db];
        while (r.degree() >= db) {
            int dr = r.degree();
            Rational f = r.c[dr] / lead;
            if (static_cast<int>(q.c.size()) < dr - db + 1) q.c.resize(dr - db + 1);
            q.c[dr - db] += f;
            for (int i = 0; i <= db; ++i) r.c[dr - db + i] -= f * b.c[i];
            r.trim();
        }
        q.trim();
    }

    Rational eval(const Rational& x) const {
        Rational r(0);
        for (std::size_t i = c.size(); i-- > 0;) r = r * x + c[i];
        return r;
    }
};

// Characteristic polynomial of an integer matrix, monic, exact
// (Faddeev–LeVerrier).
inline RatPoly char_poly(const IntMat& t) {
    std::size_t n = t.rows();
    RatMat a = to_rational(t);
    std::vector<Rational> cs(n + 1, Rational(0));
    cs[n] = Rational(1);
    RatMat cur = a;
    for (std::size_t k = 1; k <= n; ++k) {
        Rational tr(0);
        for (std::size_t i = 0; i < n; ++i) tr += cur(i, i);
        cs[n - k] = -(tr / Rational(static_cast<std::int64_t>(k)));
        if (k == n) break;
        RatMat shifted = cur;
        for (std::size_t i = 0; i < n; ++i) shifted(i, i) += cs[n - k];
        cur = a * shifted;
    }
    RatPoly p;
    p.c = cs;
    p.trim();
    return p;
}

// Durand–Kerner on a monic polynomial with double coefficients.
inline std::vector<std::complex<double>> roots_numeric(const RatPoly& p) {
    int d = p.degree();
    if (d <= 0) return {};
    std::vector<std::complex<double>> c(d + 1);
    double lead = p.c[d].to_double();
    for (int i = 0; i <= d; ++i) c[i] = p.c[i].to_double() / lead;
    auto eval = [&](std::complex<double> x) {
        std::complex<double> r = 0;
        for (int i = d; i >= 0; --i) r = r * x + c[i];
        return r;
    };
    std::vector<std::complex<double>> z(d);
    std::complex<double> seed(0.4, 0.9);
    std::complex<double> acc(1, 0);
    for (int i = 0; i < d; ++i) {
        acc *= seed;
        z[i] = acc;
    }
    for (int it = 0; it < 500; ++it) {
        double moved = 0;
        for (int i = 0; i < d; ++i) {
            std::complex<double> den(1, 0);
            for (int j = 0; j < d; ++j)
                if (j != i) den *= z[i] - z[j];
            std::complex<double> delta = eval(z[i]) / den;
            z[i] -= delta;
            moved = std::max(moved, std::abs(delta));
        }
        if (moved < 1e-14) break;
    }
    return z;
}

// Minimal polynomial of the Perron root: smallest exact monic integer divisor
// of the characteristic polynomial whose root set contains it. Numeric root
// clustering proposes candidates; exact division over Q accepts.
inline RatPoly min_poly_of_perron(const TransitionMatrix& t, const Caps& caps = {}) {
    RatPoly cp = char_poly(t.big());
    auto roots = roots_numeric(cp);
    // Perron root: the (unique, simple) root of maximal modulus; real positive.
    int perron = 0;
    for (std::size_t i = 1; i < roots.size(); ++i)
        if (std::abs(roots[i]) > std::abs(roots[perron])) perron = static_cast<int>(i);
    // cluster conjugate pairs; real roots are singleton clusters
    std::vector<std::vector<int>> clusters;
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        if (std::fabs(roots[i].imag()) < 1e-9) {
            clusters.push_back({static_cast<int>(i)});
            continue;
        }
        int mate = -1;
        double best = 1e18;
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (used[j]) continue;
            double d = std::abs(roots[j] - std::conj(roots[i]));
            if (d < best) { best = d; mate = static_cast<int>(j); }
        }
        if (mate < 0) { clusters.push_back({static_cast<int>(i)}); continue; }
        used[mate] = true;
        clusters.push_back({static_cast<int>(i), mate});
    }
    int pc = -1;
    for (std::size_t k = 0; k < clusters.size(); ++k)
        for (int idx : clusters[k])
            if (idx == perron) pc = static_cast<int>(k);
    std::vector<int> others;
    for (std::size_t k = 0; k < clusters.size(); ++k)
        if (static_cast<int>(k) != pc) others.push_back(static_cast<int>(k));
    if (others.size() > 20)
        throw undecided_error("min_poly_of_perron: too many root clusters for subset search");
    struct Cand {
        int degree;
        std::vector<int> cluster_ids;
    };
    std::vector<Cand> cands;
    for (std::uint64_t mask = 0; mask < (1ull << others.size()); ++mask) {
        Cand c;
        c.cluster_ids.push_back(pc);
        c.degree = static_cast<int>(clusters[pc].size());
        for (std::size_t b = 0; b < others.size(); ++b)
            if (mask & (1ull << b)) {
                c.cluster_ids.push_back(others[b]);
                c.degree += static_cast<int>(clusters[others[b]].size());
            }
        cands.push_back(std::move(c));
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.degree < y.degree; });
    for (const auto& cand : cands) {
        // multiply out the chosen roots, check near-integer coefficients
        std::vector<std::complex<double>> poly{1.0};
        for (int ck : cand.cluster_ids)
            for (int idx : clusters[ck]) {
                std::vector<std::complex<double>> next(poly.size() + 1);
                for (std::size_t i = 0; i < poly.size(); ++i) {
                    next[i + 1] += poly[i];
                    next[i] -= poly[i] * roots[idx];
                }
                poly = std::move(next);
            }
        bool ok = true;
        std::vector<BigInt> ic(poly.size());
        for (std::size_t i = 0; i < poly.size(); ++i) {
            double re = poly[i].real();
            if (std::fabs(poly[i].imag()) > 1e-6 || std::fabs(re - std::llround(re)) > 1e-6) {
                ok = false;
                break;
            }
            ic[i] = BigInt(static_cast<std::int64_t>(std::llround(re)));
        }
        if (!ok) continue;
        RatPoly candidate = RatPoly::from_ints(std::move(ic));
        if (candidate.degree() < 1) continue;
        RatPoly q, r;
        RatPoly::divmod(cp, candidate, q, r);
        if (r.is_zero()) return candidate;
    }
    throw undecided_error("min_poly_of_perron: no exact divisor found at configured precision");
}

// The real algebraic number lambda: its minimal polynomial plus an exact
// isolating rational bracket, refinable on demand.
class PerronField;
using PerronFieldPtr = std::shared_ptr<const PerronField>;

// Element of Q(lambda), reduced mod the minimal polynomial.
class QLambda {
  public:
    QLambda() = default;
    QLambda(PerronFieldPtr f, RatPoly p) : f_(std::move(f)), p_(std::move(p)) { reduce(); }

    const RatPoly& poly() const { return p_; }
    const PerronFieldPtr& field() const { return f_; }
    bool is_zero() const { return p_.is_zero(); }

    friend QLambda operator+(const QLambda& a, const QLambda& b) { return QLambda(a.f_, a.p_ + b.p_); }
    friend QLambda operator-(const QLambda& a, const QLambda& b) { return QLambda(a.f_, a.p_ - b.p_); }
    friend QLambda operator*(const QLambda& a, const QLambda& b) { return QLambda(a.f_, a.p_ * b.p_); }
    QLambda inverse() const;
    friend QLambda operator/(const QLambda& a, const QLambda& b) { return a * b.inverse(); }
    friend bool operator==(const QLambda& a, const QLambda& b) { return (a - b).is_zero(); }

    int sign() const;
    double to_double() const;

  private:
    PerronFieldPtr f_;
    RatPoly p_;
    void reduce();
};

class PerronField : public std::enable_shared_from_this<PerronField> {
  public:
    static PerronFieldPtr make(const TransitionMatrix& t, const Caps& caps = {}) {
        auto f = std::shared_ptr<PerronField>(new PerronField());
        f->minpoly_ = min_poly_of_perron(t, caps);
        // isolate: start from the float estimate, radius from root separation
        auto roots = roots_numeric(f->minpoly_);
        double lam = 0;
        for (auto& z : roots)
            if (std::fabs(z.imag()) < 1e-9) lam = std::max(lam, z.real());
        double sep = 1e18;
        for (auto& z : roots) {
            if (std::fabs(z.imag()) < 1e-9 && std::fabs(z.real() - lam) > 1e-9)
                sep = std::min(sep, std::fabs(z.real() - lam));
        }
        double rad = std::min(sep / 4, 1e-4 * std::max(1.0, lam));
        if (!(rad > 0)) rad = 1e-6;
        auto to_rat = [](double x) {
            // dyadic rational approximation
            double scaled = x * 68719476736.0; // 2^36
            return Rational(BigInt(static_cast<std::int64_t>(std::llround(scaled))),
                            BigInt(static_cast<std::int64_t>(68719476736ll)));
        };
        f->lo_ = to_rat(lam - rad);
        f->hi_ = to_rat(lam + rad);
        if (f->minpoly_.eval(f->lo_).sign() * f->minpoly_.eval(f->hi_).sign() >= 0)
            throw degenerate_error("PerronField: failed to isolate the Perron root");
        return f;
    }

    const RatPoly& minpoly() const { return minpoly_; }
    int degree() const { return minpoly_.degree(); }

    QLambda constant(Rational r) const {
        RatPoly p;
        p.c = {std::move(r)};
        return QLambda(shared_from_this(), std::move(p));
    }
    QLambda lambda() const {
        RatPoly p;
        p.c = {Rational(0), Rational(1)};
        return QLambda(shared_from_this(), std::move(p));
    }

    // Exact sign of p(lambda) for reduced nonzero p. The lambda bracket is
    // bisected on the (small-coefficient) minimal polynomial in batches;
    // evaluations of p itself, whose coefficients may be large, stay rare.
    int sign_at_lambda(const RatPoly& p) const {
        if (p.is_zero()) return 0;
        for (int round = 0; round < 400; ++round) {
            auto [plo, phi] = interval_eval(p, lo_, hi_);
            if (plo.sign() > 0) return 1;
            if (phi.sign() < 0) return -1;
            int lo_sign = minpoly_.eval(lo_).sign();
            for (int step = 0; step < 16; ++step) {
                Rational mid = (lo_ + hi_) / Rational(2);
                Rational fm = minpoly_.eval(mid);
                if (fm.is_zero()) return p.eval(mid).sign(); // rational lambda
                if (fm.sign() == lo_sign) lo_ = mid;
                else hi_ = mid;
            }
        }
        throw degenerate_error("sign_at_lambda: interval refinement stalled");
    }

    double lambda_double() const { return ((lo_ + hi_) / Rational(2)).to_double(); }

  private:
    PerronField() = default;
    RatPoly minpoly_;
    mutable Rational lo_, hi_; // isolating bracket, tightened on demand

    static std::pair<Rational, Rational> interval_eval(const RatPoly& p, const Rational& lo,
                                                       const Rational& hi) {
        Rational rlo(0), rhi(0);
        for (std::size_t i = p.c.size(); i-- > 0;) {
            // [rlo,rhi] * [lo,hi] + c_i, all endpoints positive lambda so lo>0
            Rational c1 = rlo * lo, c2 = rlo * hi, c3 = rhi * lo, c4 = rhi * hi;
            Rational nlo = std::min(std::min(c1, c2), std::min(c3, c4));
            Rational nhi = std::max(std::max(c1, c2), std::max(c3, c4));
            rlo = nlo + p.c[i];
            rhi = nhi + p.c[i];
        }
        return {rlo, rhi};
    }
};

inline void QLambda::reduce() {
    if (!f_) return;
    RatPoly q, r;
    if (p_.degree() >= f_->minpoly().degree()) {
        RatPoly::divmod(p_, f_->minpoly(), q, r);
        p_ = r;
    }
}

inline QLambda QLambda::inverse() const {
    if (is_zero()) throw input_error("QLambda: inverse of zero");
    // extended Euclid in Q[x]: a*p + b*minpoly = gcd = const (minpoly irreducible)
    RatPoly r0 = f_->minpoly(), r1 = p_;
    RatPoly s0{}, s1{};
    s1.c = {Rational(1)};
    while (true) {
        RatPoly q, r;
        RatPoly::divmod(r0, r1, q, r);
        if (r.is_zero()) break;
        RatPoly s = s0 - q * s1;
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s;
    }
    if (r1.degree() != 0)
        throw degenerate_error("QLambda: nontrivial gcd with the minimal polynomial "
                               "(candidate minimal polynomial was reducible)");
    Rational inv = Rational(1) / r1.c[0];
    RatPoly res;
    res.c.resize(s1.c.size());
    for (std::size_t i = 0; i < s1.c.size(); ++i) res.c[i] = s1.c[i] * inv;
    return QLambda(f_, std::move(res));
}

inline int QLambda::sign() const {
    if (is_zero()) return 0;
    return f_->sign_at_lambda(p_);
}

inline double QLambda::to_double() const {
    double x = f_->lambda_double(), r = 0;
    for (std::size_t i = p_.c.size(); i-- > 0;) r = r * x + p_.c[i].to_double();
    return r;
}

// Exact Perron eigenvectors over Q(lambda), normalized so w v = 1.
struct ExactPerron {
    PerronFieldPtr field;
    std::vector<QLambda> v, w;
    std::vector<std::vector<QLambda>> wv; // cached products w_i v_j

    // w M v for a rational matrix, exact.
    QLambda pair(const RatMat& m) const {
        RatPoly acc;
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) {
                const Rational& c = m(i, j);
                if (c.is_zero()) continue;
                const RatPoly& p = wv[i][j].poly();
                if (acc.c.size() < p.c.size()) acc.c.resize(p.c.size());
                for (std::size_t d = 0; d < p.c.size(); ++d) acc.c[d] += c * p.c[d];
            }
        acc.trim();
        return QLambda(field, std::move(acc));
    }
};

inline std::vector<QLambda> kernel_vector(const PerronFieldPtr& f,
                                          std::vector<std::vector<QLambda>> m) {
    // Gaussian elimination over Q(lambda); kernel is one-dimensional here.
    std::size_t n = m.size();
    std::vector<int> pivot_col(n, -1);
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < n; ++col) {
        std::size_t piv = rank;
        while (piv < n && m[piv][col].is_zero()) ++piv;
        if (piv == n) continue;
        std::swap(m[piv], m[rank]);
        QLambda inv = m[rank][col].inverse();
        for (std::size_t j = 0; j < n; ++j) m[rank][j] = m[rank][j] * inv;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == rank || m[i][col].is_zero()) continue;
            QLambda fct = m[i][col];
            for (std::size_t j = 0; j < n; ++j) m[i][j] = m[i][j] - fct * m[rank][j];
        }
        pivot_col[rank] = static_cast<int>(col);
        ++rank;
    }
    if (rank != n - 1) throw degenerate_error("kernel_vector: eigenspace is not one-dimensional");
    std::vector<bool> is_piv(n, false);
    for (std::size_t i = 0; i < rank; ++i) is_piv[pivot_col[i]] = true;
    std::size_t free_col = 0;
    while (is_piv[free_col]) ++free_col;
    std::vector<QLambda> x(n, f->constant(Rational(0)));
    x[free_col] = f->constant(Rational(1));
    for (std::size_t i = 0; i < rank; ++i)
        x[pivot_col[i]] = f->constant(Rational(0)) - m[i][free_col];
    return x;
}

inline ExactPerron exact_perron(const TransitionMatrix& t, const Caps& caps = {}) {
    auto f = PerronField::make(t, caps);
    std::size_t n = static_cast<std::size_t>(t.r);
    auto lam = f->lambda();
    auto build = [&](bool left) {
        std::vector<std::vector<QLambda>> m(n, std::vector<QLambda>(n, f->constant(Rational(0))));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                Rational tij(BigInt(left ? t(static_cast<int>(j), static_cast<int>(i))
                                         : t(static_cast<int>(i), static_cast<int>(j))));
                m[i][j] = f->constant(tij);
                if (i == j) m[i][j] = m[i][j] - lam;
            }
        return kernel_vector(f, std::move(m));
    };
    ExactPerron ep;
    ep.field = f;
    ep.v = build(false);
    ep.w = build(true);
    // normalize w v = 1 and fix signs so the vectors are positive
    if (ep.v[0].sign() < 0)
        for (auto& x : ep.v) x = f->constant(Rational(-1)) * x;
    if (ep.w[0].sign() < 0)
        for (auto& x : ep.w) x = f->constant(Rational(-1)) * x;
    QLambda dot = f->constant(Rational(0));
    for (std::size_t i = 0; i < n; ++i) dot = dot + ep.w[i] * ep.v[i];
    QLambda inv = dot.inverse();
    for (auto& x : ep.w) x = x * inv;
    ep.wv.assign(n, std::vector<QLambda>(n, f->constant(Rational(0))));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) ep.wv[i][j] = ep.w[i] * ep.v[j];
    return ep;
}

} // namespace sft

#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "sft/clopen.hpp"
#include "sft/config.hpp"
#include "sft/graph.hpp"
#include "sft/matrix.hpp"
#include "sft/number_field.hpp"

namespace sft {

// K0 class in the direct-limit picture: a window-tagged rational r x r matrix
// with connecting maps M -> T^a M T^b. Pushing right multiplies by T, pushing
// left premultiplies.
struct K0Class {
    Interval window{0, 0};
    RatMat rep;
};

enum class Positivity { zero, positive, negative, infinitesimal };

inline const char* to_string(Positivity p) {
    switch (p) {
        case Positivity::zero: return "zero";
        case Positivity::positive: return "positive";
        case Positivity::negative: return "negative";
        default: return "infinitesimal";
    }
}

class K0Context {
  public:
    explicit K0Context(TransitionMatrix t, Caps caps = {})
        : T_(std::move(t)), caps_(caps), tbig_(T_.big()), trat_(to_rational(tbig_)) {}

    const TransitionMatrix& matrix() const { return T_; }
    const Caps& caps() const { return caps_; }
    int r() const { return T_.r; }

    const ExactPerron& exact() const {
        if (!exact_) exact_ = exact_perron(T_, caps_);
        return *exact_;
    }

    K0Class unit_class(Interval window) const {
        K0Class g;
        g.window = window;
        g.rep = to_rational(tbig_.pow(static_cast<std::uint64_t>(window.width())));
        return g;
    }

    K0Class zero_class(Interval window) const {
        K0Class g;
        g.window = window;
        g.rep = RatMat(static_cast<std::size_t>(T_.r), static_cast<std::size_t>(T_.r));
        return g;
    }

    K0Class class_of_clopen(const ClopenSet& c) const {
        K0Class g;
        g.window = c.window();
        g.rep = to_rational(c.block_counts());
        return g;
    }

    K0Class push(const K0Class& g, Interval target) const {
        if (!target.contains(g.window)) throw input_error("K0 push: target must contain window");
        RatMat left = to_rational(tbig_.pow(static_cast<std::uint64_t>(g.window.a - target.a)));
        RatMat right = to_rational(tbig_.pow(static_cast<std::uint64_t>(target.b - g.window.b)));
        K0Class out;
        out.window = target;
        out.rep = left * g.rep * right;
        return out;
    }

    K0Class alpha_star(const K0Class& g) const {
        K0Class out;
        out.window = Interval(g.window.a - 1, g.window.b - 1);
        out.rep = g.rep;
        return out;
    }

    K0Class add(const K0Class& a, const K0Class& b) const {
        Interval j = Interval::hull(a.window, b.window);
        K0Class x = push(a, j), y = push(b, j);
        x.rep = x.rep + y.rep;
        return x;
    }
    K0Class sub(const K0Class& a, const K0Class& b) const {
        Interval j = Interval::hull(a.window, b.window);
        K0Class x = push(a, j), y = push(b, j);
        x.rep = x.rep - y.rep;
        return x;
    }
    K0Class scale(std::int64_t n, const K0Class& a) const {
        K0Class x = a;
        x.rep = Rational(n) * x.rep;
        return x;
    }

    // Kernel chains of an r x r matrix stabilize by step r, so equality in the
    // limit is T^r (M1 - M2) T^r == 0 at a common window.
    bool classes_equal(const K0Class& a, const K0Class& b) const {
        K0Class d = sub(a, b);
        RatMat s = to_rational(tbig_.pow(static_cast<std::uint64_t>(T_.r)));
        return (s * d.rep * s).is_zero();
    }

    bool is_zero_class(const K0Class& a) const {
        RatMat s = to_rational(tbig_.pow(static_cast<std::uint64_t>(T_.r)));
        return (s * a.rep * s).is_zero();
    }

    bool is_alpha_fixed(const K0Class& g) const { return classes_equal(g, alpha_star(g)); }

    // Entrywise-eventual-positivity certificate: least n <= cap with
    // T^n M T^n >= 0 and M nonzero in the limit.
    std::optional<int> positivity_certificate(const K0Class& g) const {
        if (is_zero_class(g)) return std::nullopt;
        RatMat cur = g.rep;
        for (int n = 0; n <= caps_.cert_cap; ++n) {
            bool nonneg = true;
            for (std::size_t i = 0; i < cur.rows() && nonneg; ++i)
                for (std::size_t j = 0; j < cur.cols() && nonneg; ++j)
                    if (cur(i, j).sign() < 0) nonneg = false;
            if (nonneg) return n;
            cur = trat_ * cur * trat_;
        }
        return std::nullopt;
    }

    // Exact trace pairing w M v in Q(lambda); the order decision route.
    QLambda pairing(const K0Class& g) const { return exact().pair(g.rep); }

    // Exact order verdict. Positive iff w M v > 0; infinitesimal iff nonzero
    // with w M v = 0. Decided entirely in Q(lambda); the entrywise
    // certificate (positivity_certificate) is available wherever an explicit
    // witness is wanted.
    Positivity is_positive(const K0Class& g) const {
        if (is_zero_class(g)) return Positivity::zero;
        int s = pairing(g).sign();
        if (s > 0) return Positivity::positive;
        if (s < 0) return Positivity::negative;
        return Positivity::infinitesimal;
    }

    bool exact_infinitesimal_test(const K0Class& g) const {
        return !is_zero_class(g) && pairing(g).sign() == 0;
    }

    // Strict order g1 < g2, decided exactly.
    bool less(const K0Class& g1, const K0Class& g2) const {
        return is_positive(sub(g2, g1)) == Positivity::positive;
    }

    // tau of a class: lambda^{-width} * (w M v), exact in Q(lambda).
    // (to_double() of the result can lose precision through the repeated
    // field divisions; use approx_trace for numeric screening.)
    QLambda trace_of_class(const K0Class& g) const {
        QLambda p = pairing(g);
        QLambda lam = exact().field->lambda();
        QLambda inv = lam.inverse();
        for (int i = 0; i < g.window.width(); ++i) p = p * inv;
        return p;
    }

    // Numerically stable float trace from Perron data.
    double approx_trace(const PerronData& pd, const K0Class& g) const {
        double s = 0;
        for (std::size_t i = 0; i < g.rep.rows(); ++i)
            for (std::size_t j = 0; j < g.rep.cols(); ++j) {
                if (g.rep(i, j).is_zero()) continue;
                s += pd.w[i] * g.rep(i, j).to_double() * pd.v[j];
            }
        return s * std::pow(pd.lambda, -g.window.width());
    }

    int eventual_rank() const {
        RatMat s = to_rational(tbig_.pow(static_cast<std::uint64_t>(T_.r)));
        return static_cast<int>(rank_of(s));
    }

    int perron_degree() const { return exact().field->degree(); }

    // (rank R_T)^2 - deg lambda_T; zero iff eventual rank 1.
    int infinitesimal_rank() const {
        int er = eventual_rank();
        return er * er - perron_degree();
    }

    // Least window [1,m] with n * I < T^m certified, g = I there.
    // Returns the class together with its certificate exponent.
    struct FixedClass {
        K0Class g;
        int cert_exponent = 0;
    };

    // lambda^k as a field element, cached incrementally.
    const QLambda& lambda_power(int k) const {
        auto& pows = lambda_pows_;
        if (pows.empty()) pows.push_back(exact().field->constant(Rational(1)));
        while (static_cast<int>(pows.size()) <= k)
            pows.push_back(pows.back() * exact().field->lambda());
        return pows[static_cast<std::size_t>(k)];
    }

    FixedClass small_fixed_class(std::int64_t n) const {
        if (n <= 0) throw input_error("small_fixed_class: n must be positive");
        auto prim = is_primitive(T_);
        if (!prim.primitive) throw input_error("small_fixed_class: matrix not primitive");
        const int window_cap = 4096; // K0 windows are cheap, no paths involved
        for (int m = 1; m <= window_cap; ++m) {
            // tau gap first: lambda^m > n, decided in the field
            QLambda gap = lambda_power(m) - exact().field->constant(Rational(BigInt(n)));
            if (gap.sign() <= 0) continue;
            K0Class g;
            g.window = Interval(1, m);
            g.rep = RatMat::identity(static_cast<std::size_t>(T_.r));
            K0Class diff = sub(unit_class(g.window), scale(n, g));
            auto cert = positivity_certificate(diff);
            if (cert) {
                FixedClass fc;
                fc.g = g;
                fc.cert_exponent = *cert;
                return fc;
            }
        }
        throw resource_error("small_fixed_class: no certified window within cap");
    }

    // divlem: g alpha_*-fixed with m g < [1] < (m+1) g. Follows the proof:
    // h = small_fixed_class(m(m+1)), N = max with N h < [1], g = floor(N/m) h.
    K0Class dense_fixed_class(std::int64_t m) const {
        if (m <= 0) throw input_error("dense_fixed_class: m must be positive");
        FixedClass h = small_fixed_class(m * (m + 1));
        // N: largest with [1] - N h positive, i.e. N < lambda^{mh} in the
        // field (tau is faithful on these classes: both sit in Q[T]).
        const QLambda& lp = lambda_power(h.g.window.width());
        std::int64_t n = m * (m + 1);
        while (true) {
            QLambda gap = lp - exact().field->constant(Rational(BigInt(n + 1)));
            if (gap.sign() <= 0) break;
            ++n;
            if (n > (std::int64_t{1} << 40))
                throw resource_error("dense_fixed_class: N search diverged");
        }
        K0Class g = scale(n / m, h.g);
        // certify m g < [1] < (m+1) g
        if (is_positive(sub(unit_class(g.window), scale(m, g))) != Positivity::positive)
            throw degenerate_error("dense_fixed_class: m g < [1] failed");
        if (is_positive(sub(scale(m + 1, g), unit_class(g.window))) != Positivity::positive)
            throw degenerate_error("dense_fixed_class: [1] < (m+1) g failed "
                                   "(infinitesimal edge case)");
        return g;
    }

    // Any alpha_*-fixed positive class with m g < [1] < (m+1) g, chosen with
    // trace as close to 1/(m+1) as the commutant lattice allows. Same divlem
    // contract as dense_fixed_class with better granularity; used when the
    // pinned construction's granularity makes a downstream tower infeasible.
    // Candidates are c1 T^p1 + c2 T^p2 at window [1,w]; they commute with T,
    // hence are alpha_*-fixed.
    K0Class lean_fixed_class(std::int64_t m, double headroom = 0.35) const {
        double lam = exact().field->lambda_double();
        double lo = 1.0 / static_cast<double>(m + 1);
        double hi = lo * (1.0 + headroom);
        struct Cand {
            double tau;
            std::int64_t c1, c2;
            int p1, p2, w;
        };
        std::vector<Cand> cands;
        int pmax = std::min(r(), 3);
        const int window_cap = 4096; // K0 windows carry no path sets
        for (int w = 1; w <= window_cap && cands.size() < 4000; ++w) {
            double base = std::pow(lam, -w);
            if (base > hi) continue; // smallest candidate at this window too big
            for (int p1 = 0; p1 <= pmax; ++p1) {
                double lp1 = std::pow(lam, p1) * base;
                if (lp1 > hi) break;
                for (std::int64_t c1 = 1; static_cast<double>(c1) * lp1 <= hi; ++c1) {
                    double t1 = static_cast<double>(c1) * lp1;
                    if (t1 > lo) cands.push_back({t1, c1, 0, p1, p1, w});
                    for (int p2 = p1 + 1; p2 <= pmax; ++p2) {
                        double lp2 = std::pow(lam, p2) * base;
                        for (std::int64_t c2 = 1; t1 + static_cast<double>(c2) * lp2 <= hi; ++c2) {
                            double tau = t1 + static_cast<double>(c2) * lp2;
                            if (tau > lo) cands.push_back({tau, c1, c2, p1, p2, w});
                        }
                    }
                }
            }
            if (base < (hi - lo) / 16 && !cands.empty()) break; // granularity fine enough
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.tau != b.tau) return a.tau < b.tau;
            return std::tie(a.w, a.p1, a.p2, a.c1, a.c2) < std::tie(b.w, b.p1, b.p2, b.c1, b.c2);
        });
        for (const auto& c : cands) {
            K0Class g;
            g.window = Interval(1, c.w);
            g.rep = Rational(c.c1) * to_rational(tbig_.pow(static_cast<std::uint64_t>(c.p1)));
            if (c.c2 > 0)
                g.rep = g.rep +
                        Rational(c.c2) * to_rational(tbig_.pow(static_cast<std::uint64_t>(c.p2)));
            if (is_zero_class(g)) continue;
            if (is_positive(sub(unit_class(g.window), scale(m, g))) != Positivity::positive)
                continue;
            if (is_positive(sub(scale(m + 1, g), unit_class(g.window))) != Positivity::positive)
                continue;
            return g;
        }
        throw resource_error("lean_fixed_class: no candidate class found within caps");
    }

  private:
    TransitionMatrix T_;
    Caps caps_;
    IntMat tbig_;
    RatMat trat_;
    mutable std::optional<ExactPerron> exact_;
    mutable std::vector<QLambda> lambda_pows_;
};

// Prop prop-ian item 3: shift equivalence to a full shift, decided by the
// eventual rank; when rank one, n is recovered exactly.
struct FullShiftVerdict {
    bool full_shift = false;
    std::int64_t n = 0;
};

inline FullShiftVerdict full_shift_test(const K0Context& k0) {
    FullShiftVerdict v;
    if (k0.eventual_rank() != 1) return v;
    // on the eventual range T acts by multiplication by lambda, so
    // tr(T^{r+1}) / tr(T^r) is an exact integer
    IntMat t = k0.matrix().big();
    IntMat a = t.pow(static_cast<std::uint64_t>(k0.r()));
    IntMat b = a * t;
    BigInt tra(0), trb(0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        tra += a(i, i);
        trb += b(i, i);
    }
    Rational q{trb, tra};
    if (!q.is_integer())
        throw degenerate_error("full_shift_test: eventual rank 1 but non-integral ratio");
    v.full_shift = true;
    v.n = q.num().fits_i64() ? q.num().to_i64() : 0;
    return v;
}

} // namespace sft

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "sft/algebra.hpp"
#include "sft/k_theory.hpp"

using namespace sft;

TEST_CASE("char poly and minimal polynomial") {
    auto gm = golden_mean();
    auto cp = char_poly(gm.big());
    // x^2 - x - 1
    REQUIRE(cp.degree() == 2);
    CHECK(cp.c[0] == Rational(-1));
    CHECK(cp.c[1] == Rational(-1));
    CHECK(cp.c[2] == Rational(1));
    auto mp = min_poly_of_perron(gm);
    CHECK(mp.degree() == 2);

    // [[1,1],[1,1]]: char x^2 - 2x, Perron root 2, min poly degree 1
    TransitionMatrix ones(2, {1, 1, 1, 1});
    auto mp2 = min_poly_of_perron(ones);
    CHECK(mp2.degree() == 1);

    // full n-shift: degree 1
    CHECK(min_poly_of_perron(full_shift(5)).degree() == 1);

    // trinomial companions are irreducible: full degree
    CHECK(min_poly_of_perron(trinomial_companion(8)).degree() == 8);
}

TEST_CASE("exact perron field arithmetic and signs") {
    auto gm = golden_mean();
    auto ep = exact_perron(gm);
    auto f = ep.field;
    // lambda^2 = lambda + 1
    auto lam = f->lambda();
    CHECK((lam * lam - lam - f->constant(Rational(1))).is_zero());
    // wv = 1
    QLambda dot = f->constant(Rational(0));
    for (int i = 0; i < 2; ++i) dot = dot + ep.w[i] * ep.v[i];
    CHECK((dot - f->constant(Rational(1))).is_zero());
    // eigenvector property
    for (int i = 0; i < 2; ++i) {
        QLambda tv = f->constant(Rational(0));
        for (int j = 0; j < 2; ++j)
            tv = tv + f->constant(Rational(gm(i, j))) * ep.v[j];
        CHECK((tv - lam * ep.v[i]).is_zero());
    }
    // sign decisions: 3 lambda - 5 < 0 < 3 lambda - 4
    auto three_lam = f->constant(Rational(3)) * lam;
    CHECK((three_lam - f->constant(Rational(5))).sign() == -1);
    CHECK((three_lam - f->constant(Rational(4))).sign() == 1);
    CHECK(f->constant(Rational(0)).sign() == 0);
}

TEST_CASE("class_of_clopen and the unit class") {
    auto gm = golden_mean();
    K0Context k0(gm);
    auto g = std::make_shared<Graph>(gm);
    // full space at width 1 -> rep = T
    auto full = ClopenSet::full_space(g, Interval(0, 0));
    auto cls = k0.class_of_clopen(full);
    CHECK(cls.rep == to_rational(gm.big()));
    // unit class at window I is T^{width}
    auto u = k0.unit_class(Interval(0, 2));
    CHECK(u.rep == to_rational(gm.big().pow(3)));
    // empty set -> zero matrix
    ClopenSet empty(g, Interval(0, 1), {});
    CHECK(k0.class_of_clopen(empty).rep.is_zero());
    // additive over disjoint unions, invariant under refine + push
    Path e1 = g->make_path({1});
    auto c = ClopenSet::from_cylinder(g, {e1, 0});
    auto refined = c.refine(Interval(0, 3));
    auto pushed = k0.push(k0.class_of_clopen(c), Interval(0, 3));
    CHECK(k0.class_of_clopen(refined).rep == pushed.rep);
}

TEST_CASE("classes_equal stabilizes kernel directions") {
    auto gm = golden_mean();
    K0Context k0(gm);
    auto a = k0.unit_class(Interval(0, 1));
    auto b = k0.push(a, Interval(-2, 3));
    CHECK(k0.classes_equal(a, b));
    // TI vs IT at a common window: equal since T commutes with I
    K0Class ti, it;
    ti.window = Interval(0, 2);
    ti.rep = to_rational(gm.big());
    it.window = Interval(0, 2);
    it.rep = to_rational(gm.big());
    CHECK(k0.classes_equal(ti, it));
    // singular [[1,1],[1,1]]: distinct reps, equal classes when the
    // difference dies under T on both sides
    TransitionMatrix ones(2, {1, 1, 1, 1});
    K0Context k1(ones);
    K0Class m1, m2;
    m1.window = Interval(0, 0);
    m1.rep = RatMat(2, 2);
    m1.rep(0, 0) = 1; m1.rep(0, 1) = -1;
    m2.window = Interval(0, 0);
    m2.rep = RatMat(2, 2);
    CHECK(m1.rep != m2.rep);
    CHECK(k1.classes_equal(m1, m2));
}

TEST_CASE("alpha_star fixed points") {
    auto gm = golden_mean();
    K0Context k0(gm);
    K0Class id;
    id.window = Interval(1, 3);
    id.rep = RatMat::identity(2);
    CHECK(k0.is_alpha_fixed(id));
    CHECK(k0.is_alpha_fixed(k0.unit_class(Interval(0, 2))));
    K0Class e11;
    e11.window = Interval(0, 1);
    e11.rep = RatMat(2, 2);
    e11.rep(0, 0) = 1;
    CHECK(!k0.is_alpha_fixed(e11));
}

TEST_CASE("positivity and infinitesimals") {
    auto gm = golden_mean();
    K0Context k0(gm);
    CHECK(k0.is_positive(k0.unit_class(Interval(0, 1))) == Positivity::positive);
    // [[1,-1],[-1,1]]: w M v = (lambda-1)^2 > 0
    K0Class m;
    m.window = Interval(0, 1);
    m.rep = RatMat(2, 2);
    m.rep(0, 0) = 1; m.rep(0, 1) = -1; m.rep(1, 0) = -1; m.rep(1, 1) = 1;
    CHECK(k0.is_positive(m) == Positivity::positive);
    // commutator-style [[0,1],[-1,0]]: w M v = 0, nonzero class -> infinitesimal
    K0Class c;
    c.window = Interval(0, 1);
    c.rep = RatMat(2, 2);
    c.rep(0, 1) = 1; c.rep(1, 0) = -1;
    CHECK(k0.exact_infinitesimal_test(c));
    CHECK(k0.is_positive(c) == Positivity::infinitesimal);
    // zero class is zero, not infinitesimal
    CHECK(k0.is_positive(k0.zero_class(Interval(0, 0))) == Positivity::zero);
    CHECK(!k0.exact_infinitesimal_test(k0.zero_class(Interval(0, 0))));
    // negative
    K0Class n = k0.scale(-1, k0.unit_class(Interval(0, 0)));
    CHECK(k0.is_positive(n) == Positivity::negative);
    // full 2-shift-equivalent [[1,1],[1,1]]: no infinitesimals
    TransitionMatrix ones(2, {1, 1, 1, 1});
    K0Context k1(ones);
    K0Class z;
    z.window = Interval(0, 0);
    z.rep = RatMat(2, 2);
    z.rep(0, 0) = 1; z.rep(0, 1) = -1;
    CHECK(k1.is_positive(z) == Positivity::zero); // dies under stabilization
}

TEST_CASE("positivity certificates agree with the exact pairing") {
    auto gm = golden_mean();
    K0Context k0(gm);
    // 9I - T^4 is positive with a certificate at exponent 1
    K0Class d;
    d.window = Interval(1, 4);
    d.rep = Rational(9) * RatMat::identity(2) - to_rational(gm.big().pow(4));
    auto cert = k0.positivity_certificate(d);
    REQUIRE(cert.has_value());
    CHECK(*cert <= 2);
    CHECK(k0.pairing(d).sign() == 1);
    // T^4 - 7I is negative (lambda^4 = 3 lambda + 2 < 7)
    K0Class ng;
    ng.window = Interval(1, 4);
    ng.rep = to_rational(gm.big().pow(4)) - Rational(7) * RatMat::identity(2);
    CHECK(!k0.positivity_certificate(ng).has_value());
    CHECK(k0.is_positive(ng) == Positivity::negative);
}

TEST_CASE("eventual rank, perron degree, infinitesimal rank") {
    K0Context gm(golden_mean());
    CHECK(gm.eventual_rank() == 2);
    CHECK(gm.perron_degree() == 2);
    CHECK(gm.infinitesimal_rank() == 2);

    K0Context f2(full_shift(2));
    CHECK(f2.eventual_rank() == 1);
    CHECK(f2.infinitesimal_rank() == 0);

    K0Context ones(TransitionMatrix(2, {1, 1, 1, 1}));
    CHECK(ones.eventual_rank() == 1);
    CHECK(ones.perron_degree() == 1);
    CHECK(ones.infinitesimal_rank() == 0);

    // nilpotent matrices are not primitive; eventual rank via raw rank
    RatMat nil(2, 2);
    nil(0, 1) = 1;
    CHECK(rank_of(nil) == 1);
    RatMat nil2 = nil * nil;
    CHECK(rank_of(nil2) == 0);
}

TEST_CASE("small_fixed_class per the construction") {
    // full 2-shift, n = 3: least m with 2^m > 3 is 2
    K0Context f2(full_shift(2));
    auto fc = f2.small_fixed_class(3);
    CHECK(fc.g.window.width() == 2);
    CHECK(f2.is_alpha_fixed(fc.g));
    CHECK(f2.is_positive(fc.g) == Positivity::positive);
    CHECK(f2.is_positive(f2.sub(f2.unit_class(fc.g.window), f2.scale(3, fc.g))) ==
          Positivity::positive);

    // golden mean, n = 6: window [1,4] (lambda^4 ~ 6.854), certificate exists
    K0Context gm(golden_mean());
    auto g6 = gm.small_fixed_class(6);
    CHECK(g6.g.window.width() == 4);
    CHECK(gm.is_alpha_fixed(g6.g));
}

TEST_CASE("dense_fixed_class satisfies m g < [1] < (m+1) g") {
    K0Context f2(full_shift(2));
    for (int m : {1, 2, 3}) {
        auto g = f2.dense_fixed_class(m);
        CHECK(f2.is_alpha_fixed(g));
        CHECK(f2.is_positive(f2.sub(f2.unit_class(g.window), f2.scale(m, g))) ==
              Positivity::positive);
        CHECK(f2.is_positive(f2.sub(f2.scale(m + 1, g), f2.unit_class(g.window))) ==
              Positivity::positive);
    }
    // full 2-shift, m = 2: h from n = 6 -> window 3 (2^3 = 8 > 6), N = 7, g = 3h
    auto g2 = f2.dense_fixed_class(2);
    CHECK(g2.window.width() == 3);
    CHECK(g2.rep(0, 0) == Rational(3));

    K0Context gm(golden_mean());
    for (int m : {1, 2, 3}) {
        auto g = gm.dense_fixed_class(m);
        CHECK(gm.is_alpha_fixed(g));
        CHECK(gm.is_positive(gm.sub(gm.unit_class(g.window), gm.scale(m, g))) ==
              Positivity::positive);
        CHECK(gm.is_positive(gm.sub(gm.scale(m + 1, g), gm.unit_class(g.window))) ==
              Positivity::positive);
    }
}

TEST_CASE("lean_fixed_class meets the same contract with smaller trace") {
    K0Context gm(golden_mean());
    for (int m : {1, 2, 3}) {
        auto g = gm.lean_fixed_class(m);
        CHECK(gm.is_alpha_fixed(g));
        CHECK(gm.is_positive(gm.sub(gm.unit_class(g.window), gm.scale(m, g))) ==
              Positivity::positive);
        CHECK(gm.is_positive(gm.sub(gm.scale(m + 1, g), gm.unit_class(g.window))) ==
              Positivity::positive);
        // trace within the requested headroom of 1/(m+1)
        double tau = gm.trace_of_class(g).to_double();
        CHECK(tau > 1.0 / (m + 1));
        CHECK(tau <= 1.35 / (m + 1) + 1e-12);
    }
}

TEST_CASE("full shift test") {
    CHECK(full_shift_test(K0Context(TransitionMatrix(2, {1, 1, 1, 1}))).full_shift);
    CHECK(full_shift_test(K0Context(TransitionMatrix(2, {1, 1, 1, 1}))).n == 2);
    CHECK(!full_shift_test(K0Context(golden_mean())).full_shift);
    auto v5 = full_shift_test(K0Context(full_shift(5)));
    CHECK(v5.full_shift);
    CHECK(v5.n == 5);
}

TEST_CASE("trace of class matches the projection trace") {
    auto gm = golden_mean();
    K0Context k0(gm);
    auto g = std::make_shared<Graph>(gm);
    auto pd = perron_data(gm);
    Path e1 = g->make_path({1});
    auto c = ClopenSet::from_cylinder(g, {e1, 0}).refine(Interval(0, 2));
    auto cls = k0.class_of_clopen(c);
    auto proj = clopen_to_projection(c);
    CHECK(k0.trace_of_class(cls).to_double() ==
          doctest::Approx(proj.trace(pd)).epsilon(1e-9));
}

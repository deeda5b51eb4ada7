#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "sft/bigint.hpp"
#include "sft/graph.hpp"
#include "sft/matrix.hpp"
#include "sft/rational.hpp"

using namespace sft;

TEST_CASE("bigint arithmetic basics") {
    BigInt a = BigInt::from_string("123456789012345678901234567890");
    BigInt b = BigInt::from_string("-98765432109876543210");
    CHECK((a * b).to_string() == "-12193263113702179522496570642237463801111263526900");
    CHECK((a + b).to_string() == "123456788913580246791358024680");
    BigInt q, r;
    BigInt::divmod(a, b, q, r);
    CHECK(q * b + r == a);
    CHECK(BigInt::gcd(BigInt(48), BigInt(-18)) == BigInt(6));
    CHECK(BigInt::pow(BigInt(3), 20).to_string() == "3486784401");
    CHECK(BigInt(-7) % BigInt(3) == BigInt(-1));
    CHECK(BigInt(0).to_string() == "0");
}

TEST_CASE("rational normalization and order") {
    Rational x(BigInt(6), BigInt(-8));
    CHECK(x.to_string() == "-3/4");
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK((Rational(5) / Rational(10)).to_string() == "1/2");
}

TEST_CASE("rational matrix rank, kernel, solve") {
    RatMat m(2, 2);
    m(0, 0) = 1; m(0, 1) = 1; m(1, 0) = 1; m(1, 1) = 1;
    CHECK(rank_of(m) == 1);
    RatMat k = kernel(m);
    CHECK(k.cols() == 1);
    // M * k = 0
    RatMat prod = m * k;
    CHECK(prod.is_zero());
    std::vector<Rational> b{Rational(2), Rational(2)}, x;
    CHECK(solve(m, b, x));
    CHECK(m(0, 0) * x[0] + m(0, 1) * x[1] == Rational(2));
    std::vector<Rational> bad{Rational(1), Rational(2)};
    CHECK(!solve(m, bad, x));
}

TEST_CASE("build_graph canonical order and counts") {
    auto t = full_shift(2);
    Graph g(t);
    CHECK(g.vertex_count() == 1);
    CHECK(g.edge_count() == 2);

    auto gm = golden_mean();
    Graph gg(gm);
    CHECK(gg.vertex_count() == 2);
    CHECK(gg.edge_count() == 3);
    // canonical (source,target,slot) order
    CHECK(gg.edge(0).source == 0);
    CHECK(gg.edge(0).target == 0);
    CHECK(gg.edge(1).target == 1);
    CHECK(gg.edge(2).source == 1);

    CHECK_THROWS_AS(TransitionMatrix(2, {0, -1, 1, 0}), input_error);
    CHECK_THROWS_AS(TransitionMatrix(1, {1}), input_error);
}

TEST_CASE("count_paths equals matrix powers and the walking oracle") {
    auto gm = golden_mean();
    // T^5(0,0) = 8 for the golden mean
    CHECK(count_paths(gm, 0, 0, 5) == BigInt(8));
    CHECK(count_paths(gm, 0, 1, 0) == BigInt(0));
    CHECK(count_paths(gm, 1, 1, 0) == BigInt(1));
    auto t2 = trinomial_companion(2); // [[0,1],[1,1]]
    for (const auto& t : {gm, t2})
        for (int i = 0; i < t.r; ++i)
            for (int j = 0; j < t.r; ++j)
                for (int len = 0; len <= 12; ++len)
                    CHECK(count_paths(t, i, j, len) == BigInt(oracle::count_paths_walk(t, i, j, len)));
    // full 2-shift: 2^k
    for (int k = 0; k <= 16; ++k)
        CHECK(count_paths(full_shift(2), 0, 0, k) == BigInt::pow(BigInt(2), k));
}

TEST_CASE("enumerate_paths is lexicographic, complete, capped") {
    auto gm = golden_mean();
    Graph g(gm);
    auto ps = enumerate_paths(g, 0, 0, 2);
    REQUIRE(ps.size() == 2); // T^2(0,0) = 2
    CHECK(ps[0].edges < ps[1].edges);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int len = 1; len <= 10; ++len) {
                auto v = enumerate_paths(g, i, j, len);
                CHECK(BigInt(static_cast<std::int64_t>(v.size())) == count_paths(gm, i, j, len));
                for (std::size_t k = 1; k < v.size(); ++k) CHECK(v[k - 1].edges < v[k].edges);
            }
    auto vp = enumerate_paths(g, 1, 1, 0);
    REQUIRE(vp.size() == 1);
    CHECK(vp[0].length() == 0);
    CHECK_THROWS_AS(enumerate_paths(g, 0, 0, 40, 100), resource_error);
}

TEST_CASE("path concatenation identity") {
    auto gm = golden_mean();
    for (int a = 0; a <= 5; ++a)
        for (int b = 0; b <= 5; ++b)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    BigInt lhs(0);
                    for (int k = 0; k < 2; ++k)
                        lhs += count_paths(gm, i, k, a) * count_paths(gm, k, j, b);
                    CHECK(lhs == count_paths(gm, i, j, a + b));
                }
}

TEST_CASE("is_primitive with witness, permutation rejected") {
    auto r = is_primitive(trinomial_companion(2)); // [[0,1],[1,1]]
    CHECK(r.primitive);
    CHECK(r.witness == 2);
    auto perm = is_primitive(TransitionMatrix(2, {0, 1, 1, 0}));
    CHECK(!perm.primitive);
    auto fs = is_primitive(full_shift(2));
    CHECK(fs.primitive);
    CHECK(fs.witness == 1);
    auto comp = is_primitive(trinomial_companion(8));
    CHECK(comp.primitive);
}

TEST_CASE("matrix parse inline syntax") {
    auto t = TransitionMatrix::parse("1,1;1,0");
    CHECK(t.r == 2);
    CHECK(t(0, 0) == 1);
    CHECK(t(1, 1) == 0);
    CHECK_THROWS_AS(TransitionMatrix::parse("1,1;1"), input_error);
}

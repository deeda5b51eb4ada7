#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "sft/clopen.hpp"
#include "sft/graph.hpp"
#include "sft/perron.hpp"

using namespace sft;

namespace {
std::shared_ptr<const Graph> make_graph(const TransitionMatrix& t) {
    return std::make_shared<Graph>(t);
}
} // namespace

TEST_CASE("perron data: full 2-shift and golden mean") {
    auto pd2 = perron_data(full_shift(2));
    CHECK(pd2.lambda == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(pd2.v[0] * pd2.w[0] == doctest::Approx(1.0).epsilon(1e-12));

    auto pd = perron_data(golden_mean());
    double phi = (1 + std::sqrt(5.0)) / 2;
    CHECK(pd.lambda == doctest::Approx(phi).epsilon(1e-10));
    // v proportional to (lambda, 1)
    CHECK(pd.v[0] / pd.v[1] == doctest::Approx(phi).epsilon(1e-9));
    CHECK(pd.w[0] / pd.w[1] == doctest::Approx(phi).epsilon(1e-9));
    double wv = pd.w[0] * pd.v[0] + pd.w[1] * pd.v[1];
    CHECK(wv == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(perron_data(TransitionMatrix(2, {2, 0, 0, 3})), input_error);
}

TEST_CASE("cylinder measure: closed form vs product form, offset independence") {
    auto t = golden_mean();
    auto g = make_graph(t);
    auto pd = perron_data(t);
    for (int len = 1; len <= 6; ++len)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (const auto& p : enumerate_paths(*g, i, j, len)) {
                    Cylinder c{p, 0};
                    double closed = cylinder_measure(pd, c);
                    CHECK(closed == doctest::Approx(oracle::measure_product_form(pd, *g, p)).epsilon(1e-11));
                    Cylinder c7{p, 7};
                    CHECK(cylinder_measure(pd, c7) == closed);
                }
    // full 2-shift: length-k cylinder has measure 2^-k
    auto f2 = full_shift(2);
    auto gf = make_graph(f2);
    auto pdf = perron_data(f2);
    for (int k = 1; k <= 10; ++k) {
        auto ps = enumerate_paths(*gf, 0, 0, k, 1 << 12);
        for (const auto& p : ps)
            CHECK(cylinder_measure(pdf, {p, 0}) == doctest::Approx(std::pow(2.0, -k)).epsilon(1e-12));
    }
}

TEST_CASE("length-1 cylinders partition the space") {
    auto t = golden_mean();
    auto g = make_graph(t);
    auto pd = perron_data(t);
    double s = 0;
    for (const auto& e : g->edges()) {
        Path p = g->make_path({e.id});
        s += cylinder_measure(pd, {p, 0});
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("partition of unity at every window width") {
    auto t = golden_mean();
    auto g = make_graph(t);
    auto pd = perron_data(t);
    for (int w = 1; w <= 8; ++w) {
        auto full = ClopenSet::full_space(g, Interval(0, w - 1));
        CHECK(full.measure(pd) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("clopen refine preserves measure and membership") {
    auto t = golden_mean();
    auto g = make_graph(t);
    auto pd = perron_data(t);
    Path loop = g->make_path({0});
    auto c = ClopenSet::from_cylinder(g, {loop, 0});
    CHECK(c.refine(c.window()).equals(c));
    auto r = c.refine(Interval(0, 1));
    // member count = row sum of T at the loop's target
    CHECK(r.size() == 2);
    CHECK(r.measure(pd) == doctest::Approx(c.measure(pd)).epsilon(1e-12));
    auto r2 = c.refine(Interval(-2, 3));
    CHECK(r2.measure(pd) == doctest::Approx(c.measure(pd)).epsilon(1e-12));
}

TEST_CASE("clopen boolean algebra is exact") {
    auto t = golden_mean();
    auto g = make_graph(t);
    auto pd = perron_data(t);
    Path e1 = g->make_path({1}); // 0 -> 1
    auto c = ClopenSet::from_cylinder(g, {e1, 0});
    auto comp = c.complement();
    CHECK(c.unite(comp).equals(ClopenSet::full_space(g, c.window())));
    CHECK(c.intersect(comp).empty());
    // shift invariance of the measure
    for (int n = -3; n <= 3; ++n)
        CHECK(c.shift_by(n).measure(pd) == doctest::Approx(c.measure(pd)).epsilon(1e-12));
    // sigma(C) has window [a-1, b-1] with the same members
    auto s = c.shift_by(1);
    CHECK(s.window().a == -1);
    CHECK(s.members() == c.members());
    // disjointness of C and sigma(C) for a non-self-overlapping word
    Path e1e2 = g->make_path({1, 2}); // 0 -> 1 -> 0
    auto d = ClopenSet::from_cylinder(g, {e1e2, 0});
    CHECK(d.disjoint_from(d.shift_by(1)));
}

TEST_CASE("measure stable under refinement of operands") {
    auto t = full_shift(2);
    auto g = make_graph(t);
    auto pd = perron_data(t);
    Path p0 = g->make_path({0});
    Path p1 = g->make_path({1});
    auto a = ClopenSet::from_cylinder(g, {p0, 0});
    auto b = ClopenSet::from_cylinder(g, {p1, 2});
    auto u = a.unite(b);
    // mu(a) + mu(b) - mu(a & b) = mu(a | b)
    double lhs = a.measure(pd) + b.measure(pd) - a.intersect(b).measure(pd);
    CHECK(u.measure(pd) == doctest::Approx(lhs).epsilon(1e-12));
}

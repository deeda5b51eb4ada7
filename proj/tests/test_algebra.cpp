#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <random>

#include "oracles.hpp"
#include "sft/algebra.hpp"

using namespace sft;

namespace {
struct Fixture {
    TransitionMatrix t = golden_mean();
    std::shared_ptr<const Graph> g = std::make_shared<Graph>(t);
    PerronData pd = perron_data(t);
    WindowBasisPtr basis(int width) const { return std::make_shared<const WindowBasis>(g, width); }
};
} // namespace

TEST_CASE("matrix units satisfy the multiplication and adjoint rules") {
    Fixture f;
    auto b2 = f.basis(2);
    auto paths00 = enumerate_paths(*f.g, 0, 0, 2);
    REQUIRE(paths00.size() == 2);
    auto x = paths00[0], y = paths00[1];
    auto Exy = AlgebraElement::matrix_unit(b2, x, y, 0);
    auto Eyx = AlgebraElement::matrix_unit(b2, y, x, 0);
    auto Exx = AlgebraElement::matrix_unit(b2, x, x, 0);
    CHECK((Exy * Eyx - Exx).max_abs_entry() == 0.0);
    CHECK((Exy.adjoint() - Eyx).max_abs_entry() == 0.0);
    // E_{x,x} is a projection
    CHECK((Exx * Exx - Exx).max_abs_entry() == 0.0);
    // endpoint mismatch rejected
    auto paths01 = enumerate_paths(*f.g, 0, 1, 2);
    REQUIRE(!paths01.empty());
    CHECK_THROWS_AS(AlgebraElement::matrix_unit(b2, x, paths01[0], 0), input_error);
}

TEST_CASE("embed is a unital *-homomorphism and functorial") {
    Fixture f;
    Interval i0(0, 1), i1(-1, 2), i2(-2, 3);
    auto b0 = f.basis(2);
    std::mt19937_64 rng(7);
    auto one = AlgebraElement::unit(b0, i0);
    CHECK((embed(one, i1) - AlgebraElement::unit(embed(one, i1).basis(), i1)).max_abs_entry() == 0.0);
    for (int trial = 0; trial < 25; ++trial) {
        auto x = oracle::random_element(b0, i0, rng);
        auto y = oracle::random_element(b0, i0, rng);
        auto ex = embed(x, i1);
        auto ey = embed(y, i1);
        CHECK((embed(x * y, i1) - ex * ey).max_abs_entry() < 1e-12);
        CHECK((embed(x + y, i1) - (ex + ey)).max_abs_entry() == 0.0);
        CHECK((embed(x.adjoint(), i1) - ex.adjoint()).max_abs_entry() == 0.0);
        // psi_{I,K} = psi_{J,K} o psi_{I,J}
        CHECK((embed(x, i2) - embed(ex, i2)).max_abs_entry() < 1e-12);
    }
}

TEST_CASE("embed multiplicities match path counts") {
    Fixture f;
    auto b1 = f.basis(1);
    auto e0 = f.g->make_path({0}); // loop at vertex 0
    auto p = AlgebraElement::matrix_unit(b1, e0, e0, 0);
    auto emb = embed(p, Interval(0, 1));
    // rank of the image = number of one-step right extensions = row sum at 0
    double tr = 0;
    for (const auto& [key, blk] : emb.blocks())
        for (std::size_t i = 0; i < blk.rows(); ++i) tr += blk(i, i);
    CHECK(tr == doctest::Approx(2.0)); // T row 0 sums to 2
}

TEST_CASE("disjoint windows commute exactly") {
    Fixture f;
    std::mt19937_64 rng(11);
    auto b2 = f.basis(2);
    for (int trial = 0; trial < 10; ++trial) {
        auto x = oracle::random_int_element(b2, Interval(0, 1), rng);
        auto y = oracle::random_int_element(b2, Interval(3, 4), rng);
        Interval k(0, 4);
        auto basis = f.basis(5);
        auto ex = embed(x, k, basis);
        auto ey = embed(y, k, basis);
        CHECK((ex * ey - ey * ex).max_abs_entry() == 0.0); // exact integer combinatorics
    }
}

TEST_CASE("shift_auto relabels the window and preserves everything") {
    Fixture f;
    std::mt19937_64 rng(3);
    auto b2 = f.basis(2);
    auto x = oracle::random_element(b2, Interval(0, 1), rng);
    auto ax = x.shift_auto();
    CHECK(ax.window().a == -1);
    CHECK(ax.op_norm() == x.op_norm());
    CHECK(std::fabs(ax.trace(f.pd) - x.trace(f.pd)) < 1e-12);
    auto one = AlgebraElement::unit(b2, Interval(0, 1));
    CHECK((one.shift_auto() - AlgebraElement::unit(b2, Interval(-1, 0))).max_abs_entry() == 0.0);
}

TEST_CASE("trace: unit, invariance under alpha and embeddings, cyclicity") {
    Fixture f;
    std::mt19937_64 rng(5);
    for (int w = 1; w <= 5; ++w) {
        auto b = f.basis(w);
        auto one = AlgebraElement::unit(b, Interval(0, w - 1));
        CHECK(one.trace(f.pd) == doctest::Approx(1.0).epsilon(1e-10));
    }
    auto b3 = f.basis(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = oracle::random_element(b3, Interval(0, 2), rng);
        auto y = oracle::random_element(b3, Interval(0, 2), rng);
        CHECK(x.trace(f.pd) == doctest::Approx(x.shift_auto().trace(f.pd)).epsilon(1e-10));
        CHECK(x.trace(f.pd) == doctest::Approx(embed(x, Interval(-1, 3)).trace(f.pd)).epsilon(1e-10));
        CHECK((x * y).trace(f.pd) == doctest::Approx((y * x).trace(f.pd)).epsilon(1e-10));
    }
}

TEST_CASE("trace of a minimal projection is the cylinder measure") {
    Fixture f;
    auto b2 = f.basis(2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (const auto& p : enumerate_paths(*f.g, i, j, 2)) {
                auto e = AlgebraElement::matrix_unit(b2, p, p, 0);
                CHECK(e.trace(f.pd) == doctest::Approx(cylinder_measure(f.pd, {p, 0})).epsilon(1e-12));
            }
}

TEST_CASE("clopen projections: phi is a boolean *-homomorphism") {
    Fixture f;
    auto full = ClopenSet::full_space(f.g, Interval(0, 2));
    auto bf = f.basis(3);
    auto one = AlgebraElement::unit(bf, Interval(0, 2));
    CHECK((clopen_to_projection(full, bf) - one).max_abs_entry() == 0.0);

    Path e1 = f.g->make_path({1});
    auto c = ClopenSet::from_cylinder(f.g, {e1, 0}).refine(Interval(0, 2));
    auto d0 = ClopenSet::from_cylinder(f.g, {f.g->make_path({0}), 1}).refine(Interval(0, 2));
    auto pc = clopen_to_projection(c, bf);
    auto pd_ = clopen_to_projection(d0, bf);
    CHECK((clopen_to_projection(c.intersect(d0), bf) - pc * pd_).max_abs_entry() == 0.0);
    auto u = clopen_to_projection(c.unite(d0), bf);
    CHECK((u - (pc + pd_ - pc * pd_)).max_abs_entry() == 0.0);
    CHECK((pc * clopen_to_projection(c.complement(), bf)).max_abs_entry() == 0.0);
    CHECK(pc.trace(f.pd) == doctest::Approx(c.measure(f.pd)).epsilon(1e-10));
    // alpha(phi(chi_C)) = phi(chi_{sigma C}), exactly
    auto shifted = clopen_to_projection(c.shift_by(1), bf);
    CHECK((pc.shift_auto() - shifted).max_abs_entry() == 0.0);
}

TEST_CASE("operator norm: projections, partial isometries, C* identity") {
    Fixture f;
    auto b2 = f.basis(2);
    auto paths = enumerate_paths(*f.g, 0, 0, 2);
    auto x = paths[0], y = paths[1];
    auto Exx = AlgebraElement::matrix_unit(b2, x, x, 0);
    CHECK(Exx.op_norm() == doctest::Approx(1.0).epsilon(1e-12));
    auto s = AlgebraElement::matrix_unit(b2, x, y, 0) + AlgebraElement::matrix_unit(b2, y, x, 0);
    CHECK(s.op_norm() == doctest::Approx(1.0).epsilon(1e-9));
    auto one = AlgebraElement::unit(b2, Interval(0, 1));
    CHECK((-2.5 * one).op_norm() == doctest::Approx(2.5).epsilon(1e-12));
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        auto e = oracle::random_element(b2, Interval(0, 1), rng);
        double n1 = (e.adjoint() * e).op_norm();
        double n2 = e.op_norm();
        CHECK(n1 == doctest::Approx(n2 * n2).epsilon(1e-9));
    }
}

TEST_CASE("*-algebra laws on block data") {
    Fixture f;
    std::mt19937_64 rng(17);
    auto b2 = f.basis(2);
    auto x = oracle::random_int_element(b2, Interval(0, 1), rng);
    auto y = oracle::random_int_element(b2, Interval(0, 1), rng);
    auto z = oracle::random_int_element(b2, Interval(0, 1), rng);
    CHECK((((x * y) * z) - (x * (y * z))).max_abs_entry() == 0.0);
    CHECK(((x * y).adjoint() - y.adjoint() * x.adjoint()).max_abs_entry() == 0.0);
    CHECK(((x + y) * z - (x * z + y * z)).max_abs_entry() == 0.0);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <random>

#include "oracles.hpp"
#include "sft/perturb.hpp"

using namespace sft;

namespace {
struct Fixture {
    TransitionMatrix t = golden_mean();
    std::shared_ptr<const Graph> g = std::make_shared<Graph>(t);
    WindowBasisPtr b3 = std::make_shared<const WindowBasis>(g, 3);
    Interval w{0, 2};
    AlgebraElement one() const { return AlgebraElement::unit(b3, w); }
};

// Spectral rounding of p + symmetric noise; distance to p stays O(eps).
AlgebraElement perturb_projection(const AlgebraElement& p, double eps, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-eps, eps);
    AlgebraElement noisy = p;
    for (const auto& [key, blk] : p.blocks()) {
        DenseMat m = blk;
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double d = dist(rng);
                m(i, j) += d;
                if (i != j) m(j, i) += d;
            }
        auto eig = sym_eig(m);
        DenseMat pr(m.rows(), m.cols());
        for (std::size_t k = 0; k < eig.values.size(); ++k) {
            if (eig.values[k] < 0.5) continue;
            for (std::size_t i = 0; i < pr.rows(); ++i)
                for (std::size_t j = 0; j < pr.cols(); ++j)
                    pr(i, j) += eig.vectors(i, k) * eig.vectors(j, k);
        }
        noisy.block(key.first, key.second) = pr;
    }
    return noisy;
}
} // namespace

TEST_CASE("orthogonalize_projection: trivial, randomized bound, precondition") {
    Fixture f;
    std::mt19937_64 rng(101);
    // ef = 0 -> g = f
    auto e = oracle::random_projection(f.b3, f.w, rng);
    auto fp = f.one() - e;
    auto g = orthogonalize_projection(e, fp);
    CHECK((g - fp).op_norm() < 1e-9);

    int done = 0;
    while (done < 100) {
        auto p = oracle::random_projection(f.b3, f.w, rng);
        auto q0 = oracle::random_projection(f.b3, f.w, rng);
        auto c = f.one() - p;
        auto inside = c * q0 * c;
        AlgebraElement q = AlgebraElement::zero(f.b3, f.w);
        bool usable = true;
        try {
            q = detail::spectral_half_projector(inside);
        } catch (const degenerate_error&) { usable = false; }
        if (!usable) continue;
        std::uniform_real_distribution<double> td(0.01, 0.2);
        auto mixed = perturb_projection(q, td(rng), rng);
        double pn = (p * mixed).op_norm();
        if (pn <= 1e-6 || pn >= 0.25) continue;
        AlgebraElement out = f.one();
        try {
            out = orthogonalize_projection(p, mixed);
        } catch (const degenerate_error&) { continue; } // gapless draw, rejected
        CHECK((p * out).op_norm() < 1e-9);
        CHECK((out * out - out).op_norm() < 1e-9);
        CHECK((out - mixed).op_norm() <= 4 * pn + 1e-9);
        ++done;
    }

    auto p1 = oracle::random_projection(f.b3, f.w, rng);
    CHECK_THROWS_AS(orthogonalize_projection(p1, p1), input_error);
}

TEST_CASE("conjugating_unitary: identity case, randomized bounds") {
    Fixture f;
    std::mt19937_64 rng(202);
    auto e = oracle::random_projection(f.b3, f.w, rng);
    auto u = conjugating_unitary(e, e);
    CHECK((u - f.one()).op_norm() < 1e-9);

    int done = 0;
    while (done < 100) {
        auto p = oracle::random_projection(f.b3, f.w, rng);
        std::uniform_real_distribution<double> td(0.005, 0.06);
        auto q = perturb_projection(p, td(rng), rng);
        double d = (p - q).op_norm();
        if (d >= 0.5 || d < 1e-9) continue;
        if (detail::rank_of_projection(p) != detail::rank_of_projection(q)) continue;
        auto v = conjugating_unitary(p, q);
        CHECK((v.adjoint() * v - f.one()).op_norm() < 1e-9);
        CHECK((v.adjoint() * p * v - q).op_norm() < 1e-9);
        CHECK((f.one() - v).op_norm() <= 4 * d + 1e-9);
        ++done;
    }
}

TEST_CASE("align_families: identical families give the identity") {
    Fixture f;
    std::mt19937_64 rng(303);
    auto p = oracle::random_projection(f.b3, f.w, rng);
    auto q = f.one() - p;
    std::vector<AlgebraElement> es{p, q};
    auto u = align_families(es, es);
    CHECK((u - f.one()).op_norm() < 1e-9);
    std::vector<AlgebraElement> shorter{p};
    CHECK_THROWS_AS(align_families(es, shorter), input_error);
}

TEST_CASE("align_families: n=2 randomized bound") {
    Fixture f;
    std::mt19937_64 rng(404);
    int done = 0;
    while (done < 30) {
        auto p = oracle::random_projection(f.b3, f.w, rng);
        auto rest = f.one() - p;
        auto q0 = oracle::random_projection(f.b3, f.w, rng);
        AlgebraElement q = AlgebraElement::zero(f.b3, f.w);
        try {
            q = detail::spectral_half_projector(rest * q0 * rest);
        } catch (const degenerate_error&) { continue; }
        q = rest * q * rest;
        if ((p * q).op_norm() > 1e-9) continue;
        std::vector<AlgebraElement> es{p, q};
        // rotate both by a small exact unitary (polar of 1 + skew)
        std::uniform_real_distribution<double> td(0.002, 0.02);
        auto h = oracle::random_element(f.b3, f.w, rng);
        auto skew = td(rng) * (h - h.adjoint());
        auto z = f.one() + skew;
        AlgebraElement uu = AlgebraElement::zero(f.b3, f.w);
        for (const auto& [key, zb] : z.blocks()) {
            DenseMat ztz = zb.transpose() * zb;
            uu.block(key.first, key.second) = zb * sym_isqrt(ztz, 1e-14);
        }
        std::vector<AlgebraElement> fs{uu.adjoint() * p * uu, uu.adjoint() * q * uu};
        double dmax = std::max((es[0] - fs[0]).op_norm(), (es[1] - fs[1]).op_norm());
        if (dmax >= 0.25 || dmax < 1e-10) continue;
        auto u = align_families(es, fs);
        CHECK((u.adjoint() * u - f.one()).op_norm() < 1e-9);
        for (int i = 0; i < 2; ++i)
            CHECK((u.adjoint() * es[i] * u - fs[i]).op_norm() < 1e-9);
        CHECK((f.one() - u).op_norm() <= 16 * dmax + 1e-9);
        ++done;
    }
}

TEST_CASE("snap_partial_isometry: exact input returned, randomized bounds, rank guard") {
    Fixture f;
    std::mt19937_64 rng(505);
    auto paths00 = enumerate_paths(*f.g, 0, 0, 3);
    REQUIRE(paths00.size() >= 2);
    ClopenSet src(f.g, f.w, {paths00[0]});
    ClopenSet dst(f.g, f.w, {paths00[1]});
    auto p = pairing_isometry(src, dst, f.b3);
    auto e = p.adjoint() * p;
    auto ff = p * p.adjoint();
    auto q = snap_partial_isometry(p, e, ff);
    CHECK((q - p).op_norm() < 1e-9);

    int done = 0;
    while (done < 100) {
        std::uniform_real_distribution<double> td(0.01, 0.3);
        double eps = td(rng);
        auto noise = oracle::random_element(f.b3, f.w, rng);
        auto pp = p + (0.4 * eps / std::max(noise.op_norm(), 1e-12)) * noise;
        double de = (pp.adjoint() * pp - e).op_norm();
        double df = (pp * pp.adjoint() - ff).op_norm();
        double epsi = std::max(de, df);
        if (epsi >= 0.5 || epsi < 1e-9) continue;
        AlgebraElement qq = p;
        try {
            qq = snap_partial_isometry(pp, e, ff);
        } catch (const degenerate_error&) { continue; }
        CHECK((qq.adjoint() * qq - e).op_norm() < 1e-9);
        CHECK((qq * qq.adjoint() - ff).op_norm() < 1e-9);
        CHECK((pp - qq).op_norm() < 8 * epsi + 1e-9);
        ++done;
    }

    ClopenSet dst2(f.g, f.w, {paths00[0], paths00[1]});
    auto e1 = clopen_to_projection(src, f.b3);
    auto f2 = clopen_to_projection(dst2, f.b3);
    CHECK_THROWS_AS(snap_partial_isometry(p, e1, f2), input_error);
}

TEST_CASE("pairing_isometry: matrix unit case, modes, count mismatch") {
    Fixture f;
    auto paths00 = enumerate_paths(*f.g, 0, 0, 3);
    ClopenSet a(f.g, f.w, {paths00[0]});
    ClopenSet b(f.g, f.w, {paths00[1]});
    auto q = pairing_isometry(a, b, f.b3);
    auto eu = AlgebraElement::matrix_unit(f.b3, paths00[1], paths00[0], 0);
    CHECK((q - eu).max_abs_entry() == 0.0);
    auto qq = pairing_isometry(a, a, f.b3);
    CHECK((qq - clopen_to_projection(a, f.b3)).max_abs_entry() == 0.0);
    ClopenSet two(f.g, f.w, {paths00[0], paths00[1]});
    CHECK_THROWS_AS(pairing_isometry(two, a, f.b3), input_error);
    auto sub = pairing_isometry(a, two, f.b3, true);
    auto dom = sub.adjoint() * sub;
    CHECK((dom - clopen_to_projection(a, f.b3)).max_abs_entry() == 0.0);
}

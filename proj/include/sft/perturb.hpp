#pragma once

#include <cmath>
#include <vector>

#include "sft/algebra.hpp"
#include "sft/config.hpp"
#include "sft/dense.hpp"

namespace sft {

namespace detail {

inline void require_projection(const AlgebraElement& e, const char* who, double tol = 1e-9) {
    if ((e * e - e).max_abs_entry() > tol || (e.adjoint() - e).max_abs_entry() > tol)
        throw input_error(std::string(who) + ": input is not a projection");
}

// Blockwise spectral projector of a symmetric element onto eigenvalues > 1/2,
// with a gap guard around the threshold.
inline AlgebraElement spectral_half_projector(const AlgebraElement& y, double gap = 1e-6) {
    AlgebraElement g = AlgebraElement::zero(y.basis(), y.window());
    for (const auto& [key, blk] : y.blocks()) {
        auto eig = sym_eig(blk);
        DenseMat p(blk.rows(), blk.cols());
        for (std::size_t k = 0; k < eig.values.size(); ++k) {
            double lam = eig.values[k];
            if (std::fabs(lam - 0.5) < gap)
                throw degenerate_error("spectral rounding: eigenvalue within gap of 1/2");
            if (lam < 0.5) continue;
            for (std::size_t i = 0; i < p.rows(); ++i)
                for (std::size_t j = 0; j < p.cols(); ++j)
                    p(i, j) += eig.vectors(i, k) * eig.vectors(j, k);
        }
        g.block(key.first, key.second) = p;
    }
    return g;
}

inline int rank_of_projection(const AlgebraElement& e) {
    double tr = 0;
    for (const auto& [key, blk] : e.blocks())
        for (std::size_t i = 0; i < blk.rows(); ++i) tr += blk(i, i);
    return static_cast<int>(std::llround(tr));
}

} // namespace detail

// ||ef|| < 1/4  =>  projection g with eg = 0 and ||f - g|| <= 4||ef||.
// g is the spectral rounding of (1-e) f (1-e).
inline AlgebraElement orthogonalize_projection(const AlgebraElement& e, const AlgebraElement& f) {
    detail::require_projection(e, "orthogonalize_projection");
    detail::require_projection(f, "orthogonalize_projection");
    double efn = (e * f).op_norm();
    if (efn >= 0.25)
        throw input_error("orthogonalize_projection: ||ef|| = " + std::to_string(efn) + " >= 1/4");
    AlgebraElement one = AlgebraElement::unit(e.basis(), e.window());
    AlgebraElement c = one - e;
    AlgebraElement y = c * f * c;
    AlgebraElement g = detail::spectral_half_projector(y);
    // compress back so eg = 0 holds at working precision
    g = c * g * c;
    return g;
}

// ||e - f|| < 1/2  =>  unitary u with u* e u = f and ||1-u|| <= 4||e-f||.
// u is the unitary part of z = 2ef - e - f + 1.
inline AlgebraElement conjugating_unitary(const AlgebraElement& e, const AlgebraElement& f) {
    detail::require_projection(e, "conjugating_unitary");
    detail::require_projection(f, "conjugating_unitary");
    if (detail::rank_of_projection(e) != detail::rank_of_projection(f))
        throw input_error("conjugating_unitary: rank(e) != rank(f)");
    double d = (e - f).op_norm();
    if (d >= 0.5)
        throw input_error("conjugating_unitary: ||e-f|| = " + std::to_string(d) + " >= 1/2");
    AlgebraElement one = AlgebraElement::unit(e.basis(), e.window());
    AlgebraElement z = 2.0 * (e * f) - e - f + one;
    AlgebraElement u = AlgebraElement::zero(e.basis(), e.window());
    for (const auto& [key, zb] : z.blocks()) {
        DenseMat ztz = zb.transpose() * zb;
        auto eig = sym_eig(ztz);
        if (!eig.values.empty() && eig.values.front() < 1e-12)
            throw degenerate_error("conjugating_unitary: z numerically singular");
        u.block(key.first, key.second) = zb * sym_isqrt(ztz, 1e-12);
    }
    return u;
}

// Orthogonal families {e_i}, {f_i} with ||e_i - f_i|| < 1/(2n)  =>  unitary u
// with u* e_i u = f_i for all i; built as sum e_i u_i including complements.
inline AlgebraElement align_families(const std::vector<AlgebraElement>& es,
                                     const std::vector<AlgebraElement>& fs) {
    if (es.size() != fs.size() || es.empty())
        throw input_error("align_families: families must have equal positive length");
    std::size_t n = es.size();
    AlgebraElement one = AlgebraElement::unit(es[0].basis(), es[0].window());
    AlgebraElement e0 = one, f0 = one;
    double dmax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        detail::require_projection(es[i], "align_families");
        detail::require_projection(fs[i], "align_families");
        e0 = e0 - es[i];
        f0 = f0 - fs[i];
        dmax = std::max(dmax, (es[i] - fs[i]).op_norm());
    }
    if (dmax >= 1.0 / (2.0 * static_cast<double>(n)))
        throw input_error("align_families: max ||e_i - f_i|| >= 1/(2n)");
    // orthogonality of each family, exact up to float additions
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if ((es[i] * es[j]).max_abs_entry() > 1e-9 || (fs[i] * fs[j]).max_abs_entry() > 1e-9)
                throw input_error("align_families: families are not orthogonal");
    AlgebraElement u = AlgebraElement::zero(one.basis(), one.window());
    auto add_piece = [&](const AlgebraElement& ei, const AlgebraElement& fi) {
        AlgebraElement ui = conjugating_unitary(ei, fi);
        u = u + ei * ui;
    };
    add_piece(e0, f0);
    for (std::size_t i = 0; i < n; ++i) add_piece(es[i], fs[i]);
    return u;
}

// p nearly intertwines e and f  =>  exact partial isometry q with q*q = e,
// qq* = f, ||p - q|| < 8 eps. Polar part of f p e restricted to the supports.
inline AlgebraElement snap_partial_isometry(const AlgebraElement& p, const AlgebraElement& e,
                                            const AlgebraElement& f) {
    detail::require_projection(e, "snap_partial_isometry");
    detail::require_projection(f, "snap_partial_isometry");
    if (detail::rank_of_projection(e) != detail::rank_of_projection(f))
        throw input_error("snap_partial_isometry: rank(e) != rank(f), no such q exists");
    double de = (p.adjoint() * p - e).op_norm();
    double df = (p * p.adjoint() - f).op_norm();
    if (de >= 0.5 || df >= 0.5)
        throw input_error("snap_partial_isometry: defects must be < 1/2");
    AlgebraElement a = f * p * e;
    AlgebraElement q = AlgebraElement::zero(p.basis(), p.window());
    for (const auto& [key, ab] : a.blocks()) {
        DenseMat ata = ab.transpose() * ab;
        q.block(key.first, key.second) = ab * sym_isqrt(ata, 1e-10);
    }
    // the polar part has initial support = support of a*a; with defects < 1/2
    // this equals e and the final support equals f
    double r1 = (q.adjoint() * q - e).max_abs_entry();
    double r2 = (q * q.adjoint() - f).max_abs_entry();
    if (r1 > 1e-9 || r2 > 1e-9)
        throw degenerate_error("snap_partial_isometry: polar part misses supports");
    return q;
}

// Exact 0/1 partial isometry pairing the member paths of two diagonal
// projections blockwise in canonical order. Equality mode needs equal counts;
// subprojection mode allows the source to be smaller.
inline AlgebraElement pairing_isometry(const ClopenSet& from, const ClopenSet& to,
                                       WindowBasisPtr basis, bool allow_subprojection = false) {
    if (!(from.window() == to.window()))
        throw input_error("pairing_isometry: refine both sets to a common window first");
    AlgebraElement q(std::move(basis), from.window());
    std::map<std::pair<int, int>, std::vector<const Path*>> src, dst;
    for (const auto& p : from.members()) src[{p.initial, p.terminal}].push_back(&p);
    for (const auto& p : to.members()) dst[{p.initial, p.terminal}].push_back(&p);
    for (const auto& [key, sv] : src) {
        auto it = dst.find(key);
        std::size_t avail = it == dst.end() ? 0 : it->second.size();
        if (sv.size() > avail)
            throw input_error("pairing_isometry: target block too small");
        if (!allow_subprojection && sv.size() != avail)
            throw input_error("pairing_isometry: block count mismatch in equality mode");
    }
    if (!allow_subprojection)
        for (const auto& [key, dv] : dst)
            if (src.find(key) == src.end() && !dv.empty())
                throw input_error("pairing_isometry: block count mismatch in equality mode");
    for (const auto& [key, sv] : src) {
        const auto& dv = dst[key];
        auto& blk = q.block(key.first, key.second);
        for (std::size_t k = 0; k < sv.size(); ++k)
            blk(q.basis()->index_of(*dv[k]), q.basis()->index_of(*sv[k])) = 1.0;
    }
    return q;
}

} // namespace sft

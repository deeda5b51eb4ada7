#pragma once

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "sft/clopen.hpp"
#include "sft/config.hpp"
#include "sft/dense.hpp"
#include "sft/graph.hpp"
#include "sft/perron.hpp"

namespace sft {

// Canonical path basis of a finite window: per (initial, terminal) block the
// lexicographically ordered paths of length = width. Row/column indices of
// every AlgebraElement block refer to this order.
class WindowBasis {
  public:
    WindowBasis(std::shared_ptr<const Graph> g, int width, const Caps& caps = {})
        : g_(std::move(g)), width_(width) {
        if (width < 1) throw input_error("WindowBasis: width >= 1 required");
        auto all = ClopenSet::all_window_paths(*g_, width, caps);
        for (auto& p : all) paths_[{p.initial, p.terminal}].push_back(std::move(p));
    }

    const Graph& graph() const { return *g_; }
    std::shared_ptr<const Graph> graph_ptr() const { return g_; }
    int width() const { return width_; }

    const std::map<std::pair<int, int>, std::vector<Path>>& blocks() const { return paths_; }

    const std::vector<Path>* block_paths(int i, int j) const {
        auto it = paths_.find({i, j});
        return it == paths_.end() ? nullptr : &it->second;
    }

    std::size_t index_of(const Path& p) const {
        auto it = paths_.find({p.initial, p.terminal});
        if (it == paths_.end()) throw input_error("WindowBasis: path not in any block");
        const auto& v = it->second;
        auto pos = std::lower_bound(v.begin(), v.end(), p);
        if (pos == v.end() || !(*pos == p)) throw input_error("WindowBasis: path not found");
        return static_cast<std::size_t>(pos - v.begin());
    }

  private:
    std::shared_ptr<const Graph> g_;
    int width_;
    std::map<std::pair<int, int>, std::vector<Path>> paths_;
};

using WindowBasisPtr = std::shared_ptr<const WindowBasis>;

// Element of H_T^[a,b]: one dense real block per vertex pair with paths.
// Real scalars throughout; every construction in scope has real coefficients.
class AlgebraElement {
  public:
    AlgebraElement(WindowBasisPtr basis, Interval window)
        : basis_(std::move(basis)), window_(window) {
        if (basis_->width() != window_.width())
            throw input_error("AlgebraElement: window width does not match basis");
        for (const auto& [key, paths] : basis_->blocks())
            blocks_.emplace(key, DenseMat(paths.size(), paths.size()));
    }

    static AlgebraElement zero(WindowBasisPtr basis, Interval window) {
        return AlgebraElement(std::move(basis), window);
    }

    static AlgebraElement unit(WindowBasisPtr basis, Interval window) {
        AlgebraElement e(std::move(basis), window);
        for (auto& [key, m] : e.blocks_)
            for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) = 1.0;
        return e;
    }

    // E_{x,y,a,b}: single 1 at (index x, index y) of block (i(x), t(x)).
    static AlgebraElement matrix_unit(WindowBasisPtr basis, const Path& x, const Path& y, int a) {
        if (x.length() != y.length() || x.length() < 1)
            throw input_error("matrix_unit: paths must have equal positive length");
        if (x.initial != y.initial || x.terminal != y.terminal)
            throw input_error("matrix_unit: endpoint mismatch");
        Interval w(a, a + x.length() - 1);
        AlgebraElement e(std::move(basis), w);
        auto& m = e.block(x.initial, x.terminal);
        m(e.basis_->index_of(x), e.basis_->index_of(y)) = 1.0;
        return e;
    }

    const WindowBasisPtr& basis() const { return basis_; }
    const Graph& graph() const { return basis_->graph(); }
    const Interval& window() const { return window_; }
    const std::map<std::pair<int, int>, DenseMat>& blocks() const { return blocks_; }

    DenseMat& block(int i, int j) {
        auto it = blocks_.find({i, j});
        if (it == blocks_.end()) throw input_error("AlgebraElement: empty block requested");
        return it->second;
    }
    const DenseMat& block(int i, int j) const {
        auto it = blocks_.find({i, j});
        if (it == blocks_.end()) throw input_error("AlgebraElement: empty block requested");
        return it->second;
    }

    friend AlgebraElement operator+(const AlgebraElement& x, const AlgebraElement& y) {
        x.require_same_window(y);
        AlgebraElement r = x;
        for (auto& [key, m] : r.blocks_) m = m + y.blocks_.at(key);
        return r;
    }
    friend AlgebraElement operator-(const AlgebraElement& x, const AlgebraElement& y) {
        x.require_same_window(y);
        AlgebraElement r = x;
        for (auto& [key, m] : r.blocks_) m = m - y.blocks_.at(key);
        return r;
    }
    friend AlgebraElement operator*(double s, const AlgebraElement& x) {
        AlgebraElement r = x;
        for (auto& [key, m] : r.blocks_) m = s * m;
        return r;
    }
    friend AlgebraElement operator*(const AlgebraElement& x, const AlgebraElement& y) {
        x.require_same_window(y);
        AlgebraElement r(x.basis_, x.window_);
        for (auto& [key, m] : r.blocks_) m = x.blocks_.at(key) * y.blocks_.at(key);
        return r;
    }

    AlgebraElement adjoint() const {
        AlgebraElement r(basis_, window_);
        for (auto& [key, m] : r.blocks_) m = blocks_.at(key).transpose();
        return r;
    }

    // alpha_T: identical block data on the window shifted left.
    AlgebraElement shift_auto(int n = 1) const {
        AlgebraElement r = *this;
        r.window_ = Interval(window_.a - n, window_.b - n);
        return r;
    }

    // C*-norm: max over blocks of the largest singular value.
    double op_norm() const {
        double m = 0;
        for (const auto& [key, b] : blocks_) m = std::max(m, spectral_norm(b));
        return m;
    }

    double max_abs_entry() const {
        double m = 0;
        for (const auto& [key, b] : blocks_) m = std::max(m, b.max_abs());
        return m;
    }

    // tau(sum c_{x,y} E_{x,y}) = sum_x c_{x,x} mu(cyl(x,0)).
    double trace(const PerronData& pd) const {
        double s = 0;
        double scale = std::pow(pd.lambda, -window_.width());
        for (const auto& [key, paths] : basis_->blocks()) {
            const auto& m = blocks_.at(key);
            double wgt = scale * pd.w[key.first] * pd.v[key.second];
            for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i) * wgt;
        }
        return s;
    }

    bool same_basis(const AlgebraElement& o) const {
        return basis_ == o.basis_ && window_ == o.window_;
    }

  private:
    WindowBasisPtr basis_;
    Interval window_;
    std::map<std::pair<int, int>, DenseMat> blocks_;

    void require_same_window(const AlgebraElement& o) const {
        if (window_ != o.window_ || basis_->width() != o.basis_->width())
            throw input_error("AlgebraElement: window mismatch (embed to a common window first)");
    }
};

// psi_{I,J}: E_{x,y} -> sum over common extensions E_{pxt, pyt}. Unital
// *-homomorphism; the partial multiplicities are path counts.
inline AlgebraElement embed(const AlgebraElement& e, Interval target, WindowBasisPtr target_basis) {
    const Interval src = e.window();
    if (!target.contains(src)) throw input_error("embed: target window must contain source");
    if (target == src) return e;
    if (target_basis->width() != target.width())
        throw input_error("embed: basis width mismatch");
    const int left = src.a - target.a;              // prefix length
    const int mid_len = src.width();
    AlgebraElement out(target_basis, target);
    for (const auto& [key, zpaths] : target_basis->blocks()) {
        auto& tgt = out.block(key.first, key.second);
        // group target rows by (prefix edges, suffix edges)
        std::map<std::pair<std::vector<std::int32_t>, std::vector<std::int32_t>>,
                 std::vector<std::pair<std::size_t, Path>>>
            groups;
        for (std::size_t zi = 0; zi < zpaths.size(); ++zi) {
            const Path& z = zpaths[zi];
            std::vector<std::int32_t> pre(z.edges.begin(), z.edges.begin() + left);
            std::vector<std::int32_t> midv(z.edges.begin() + left, z.edges.begin() + left + mid_len);
            std::vector<std::int32_t> suf(z.edges.begin() + left + mid_len, z.edges.end());
            Path mid;
            mid.edges = std::move(midv);
            mid.initial = left > 0 ? target_basis->graph().edge(z.edges[left - 1]).target : z.initial;
            mid.terminal = target_basis->graph().edge(z.edges[left + mid_len - 1]).target;
            groups[{std::move(pre), std::move(suf)}].emplace_back(zi, std::move(mid));
        }
        for (const auto& [pt, rows] : groups) {
            // all mids in one group share endpoints: one source block
            int bi = rows.front().second.initial;
            int bj = rows.front().second.terminal;
            const DenseMat& srcblk = e.block(bi, bj);
            for (const auto& [zi, mx] : rows) {
                std::size_t xi = e.basis()->index_of(mx);
                for (const auto& [uj, mu] : rows) {
                    std::size_t yj = e.basis()->index_of(mu);
                    double v = srcblk(xi, yj);
                    if (v != 0.0) tgt(zi, uj) = v;
                }
            }
        }
    }
    return out;
}

inline AlgebraElement embed(const AlgebraElement& e, Interval target, const Caps& caps = {}) {
    auto basis = std::make_shared<const WindowBasis>(e.basis()->graph_ptr(), target.width(), caps);
    return embed(e, target, std::move(basis));
}

// Bring two elements to the hull of their windows.
inline std::pair<AlgebraElement, AlgebraElement> commonize(const AlgebraElement& x,
                                                           const AlgebraElement& y,
                                                           const Caps& caps = {}) {
    Interval j = Interval::hull(x.window(), y.window());
    auto basis = x.window() == j   ? x.basis()
                 : y.window() == j ? y.basis()
                                   : std::make_shared<const WindowBasis>(x.basis()->graph_ptr(),
                                                                         j.width(), caps);
    return {embed(x, j, basis), embed(y, j, basis)};
}

// phi_T on characteristic functions: diagonal 0/1 projection of a clopen set.
inline AlgebraElement clopen_to_projection(const ClopenSet& c, WindowBasisPtr basis) {
    AlgebraElement e(std::move(basis), c.window());
    for (const auto& p : c.members()) {
        auto& m = e.block(p.initial, p.terminal);
        std::size_t i = e.basis()->index_of(p);
        m(i, i) = 1.0;
    }
    return e;
}

inline AlgebraElement clopen_to_projection(const ClopenSet& c, const Caps& caps = {}) {
    auto basis =
        std::make_shared<const WindowBasis>(c.graph_ptr(), c.window().width(), caps);
    return clopen_to_projection(c, std::move(basis));
}

} // namespace sft

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "sft/algebra.hpp"
#include "sft/clopen.hpp"
#include "sft/config.hpp"
#include "sft/graph.hpp"

namespace sft {

// Global path index of one window: every window path, sorted, with binary
// search lookup. Sparse operators over wide windows index into this.
class PathIndex {
  public:
    PathIndex(std::shared_ptr<const Graph> g, Interval window, const Caps& caps = {})
        : g_(std::move(g)), window_(window),
          paths_(ClopenSet::all_window_paths(*g_, window.width(), caps)) {}

    const Graph& graph() const { return *g_; }
    std::shared_ptr<const Graph> graph_ptr() const { return g_; }
    const Interval& window() const { return window_; }
    const std::vector<Path>& paths() const { return paths_; }
    int size() const { return static_cast<int>(paths_.size()); }

    int index_of(const Path& p) const {
        auto it = std::lower_bound(paths_.begin(), paths_.end(), p);
        if (it == paths_.end() || !(*it == p)) throw input_error("PathIndex: path not found");
        return static_cast<int>(it - paths_.begin());
    }

  private:
    std::shared_ptr<const Graph> g_;
    Interval window_;
    std::vector<Path> paths_;
};

using PathIndexPtr = std::shared_ptr<const PathIndex>;

// Sparse operator on the path basis of one window. Entries live only between
// paths with equal endpoints (elements of the finite-window algebra); the
// constructions below never create anything else.
class SparseOp {
  public:
    explicit SparseOp(PathIndexPtr idx) : idx_(std::move(idx)), rows_(idx_->size()) {}

    const PathIndexPtr& index() const { return idx_; }
    int dim() const { return static_cast<int>(rows_.size()); }

    void add_entry(int r, int c, double v) {
        if (v == 0.0) return;
        rows_[r].emplace_back(c, v);
        dirty_ = true;
    }

    void compress() {
        if (!dirty_) return;
        for (auto& row : rows_) {
            std::sort(row.begin(), row.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::size_t w = 0;
            for (std::size_t i = 0; i < row.size();) {
                int col = row[i].first;
                double s = 0;
                while (i < row.size() && row[i].first == col) s += row[i++].second;
                if (s != 0.0) row[w++] = {col, s};
            }
            row.resize(w);
        }
        dirty_ = false;
    }

    const std::vector<std::pair<int, double>>& row(int r) const { return rows_[r]; }

    std::size_t nnz() const {
        std::size_t n = 0;
        for (const auto& r : rows_) n += r.size();
        return n;
    }

    static SparseOp identity(PathIndexPtr idx) {
        SparseOp s(std::move(idx));
        for (int i = 0; i < s.dim(); ++i) s.rows_[i].emplace_back(i, 1.0);
        return s;
    }

    // Diagonal projection of a clopen set already refined to this window.
    static SparseOp diag_projection(PathIndexPtr idx, const ClopenSet& c) {
        if (!(c.window() == idx->window()))
            throw input_error("diag_projection: clopen set not at the index window");
        SparseOp s(std::move(idx));
        for (const auto& p : c.members()) {
            int i = s.idx_->index_of(p);
            s.rows_[i].emplace_back(i, 1.0);
        }
        return s;
    }

    // 0/1 partial isometry from explicit (source path, target path) pairs.
    static SparseOp pairing(PathIndexPtr idx, const std::vector<std::pair<Path, Path>>& pairs) {
        SparseOp s(std::move(idx));
        for (const auto& [from, to] : pairs) {
            if (from.initial != to.initial || from.terminal != to.terminal)
                throw input_error("pairing: endpoint mismatch breaks block structure");
            s.rows_[s.idx_->index_of(to)].emplace_back(s.idx_->index_of(from), 1.0);
        }
        s.dirty_ = true;
        s.compress();
        return s;
    }

    friend SparseOp operator+(const SparseOp& a, const SparseOp& b) {
        SparseOp r = a;
        for (int i = 0; i < r.dim(); ++i)
            for (const auto& [c, v] : b.rows_[i]) r.rows_[i].emplace_back(c, v);
        r.dirty_ = true;
        r.compress();
        return r;
    }
    friend SparseOp operator-(const SparseOp& a, const SparseOp& b) {
        SparseOp r = a;
        for (int i = 0; i < r.dim(); ++i)
            for (const auto& [c, v] : b.rows_[i]) r.rows_[i].emplace_back(c, -v);
        r.dirty_ = true;
        r.compress();
        return r;
    }
    friend SparseOp operator*(double s, const SparseOp& a) {
        SparseOp r = a;
        for (auto& row : r.rows_)
            for (auto& [c, v] : row) v *= s;
        return r;
    }
    friend SparseOp operator*(const SparseOp& a, const SparseOp& b) {
        SparseOp r(a.idx_);
        std::unordered_map<int, double> acc;
        for (int i = 0; i < a.dim(); ++i) {
            if (a.rows_[i].empty()) continue;
            acc.clear();
            for (const auto& [k, va] : a.rows_[i])
                for (const auto& [j, vb] : b.rows_[k]) acc[j] += va * vb;
            for (const auto& [j, v] : acc)
                if (v != 0.0) r.rows_[i].emplace_back(j, v);
        }
        r.dirty_ = true;
        r.compress();
        return r;
    }

    SparseOp adjoint() const {
        SparseOp r(idx_);
        for (int i = 0; i < dim(); ++i)
            for (const auto& [c, v] : rows_[i]) r.rows_[c].emplace_back(i, v);
        r.dirty_ = true;
        r.compress();
        return r;
    }

    double max_abs() const {
        double m = 0;
        for (const auto& row : rows_)
            for (const auto& [c, v] : row) m = std::max(m, std::fabs(v));
        return m;
    }

    // Frobenius norm; an upper bound for the operator norm, used for
    // "defect <= 1e-9" certifications.
    double frobenius() const {
        double s = 0;
        for (const auto& row : rows_)
            for (const auto& [c, v] : row) s += v * v;
        return std::sqrt(s);
    }

    // Operator 2-norm by power iteration on X* X, restricted to the support.
    double norm2(int max_iters = 4000) const {
        std::vector<int> support;
        {
            std::vector<char> seen(rows_.size(), 0);
            for (int i = 0; i < dim(); ++i)
                for (const auto& [c, v] : rows_[i]) {
                    (void)v;
                    seen[i] = 1;
                    seen[c] = 1;
                }
            for (int i = 0; i < dim(); ++i)
                if (seen[i]) support.push_back(i);
        }
        if (support.empty()) return 0.0;
        std::vector<int> pos(rows_.size(), -1);
        for (std::size_t k = 0; k < support.size(); ++k) pos[support[k]] = static_cast<int>(k);
        std::size_t n = support.size();
        std::vector<double> x(n), ax(rows_.size(), 0.0), y(n);
        std::uint64_t state = 0x9e3779b97f4a7c15ull;
        for (std::size_t k = 0; k < n; ++k) {
            state = state * 6364136223846793005ull + 1442695040888963407ull;
            x[k] = 0.5 + static_cast<double>(state >> 11) * 5e-20;
        }
        double prev = 0;
        for (int it = 0; it < max_iters; ++it) {
            // ax = X x (on full coordinates), y = X^T ax compacted
            std::fill(ax.begin(), ax.end(), 0.0);
            for (int i = 0; i < dim(); ++i) {
                if (rows_[i].empty()) continue;
                double s = 0;
                for (const auto& [c, v] : rows_[i])
                    if (pos[c] >= 0) s += v * x[pos[c]];
                ax[i] = s;
            }
            std::fill(y.begin(), y.end(), 0.0);
            for (int i = 0; i < dim(); ++i) {
                if (rows_[i].empty() || ax[i] == 0.0) continue;
                for (const auto& [c, v] : rows_[i])
                    if (pos[c] >= 0) y[pos[c]] += v * ax[i];
            }
            double xnorm = 0, lam = 0;
            for (std::size_t k = 0; k < n; ++k) {
                lam += y[k] * x[k];
                xnorm += x[k] * x[k];
            }
            lam /= xnorm;
            double ynorm = 0;
            for (double v : y) ynorm += v * v;
            ynorm = std::sqrt(ynorm);
            if (ynorm == 0.0) return 0.0;
            for (std::size_t k = 0; k < n; ++k) x[k] = y[k] / ynorm;
            if (it > 8 && std::fabs(lam - prev) < 1e-14 * std::max(1.0, std::fabs(lam))) {
                prev = lam;
                break;
            }
            prev = lam;
        }
        return prev > 0 ? std::sqrt(prev) : 0.0;
    }

  private:
    PathIndexPtr idx_;
    std::vector<std::vector<std::pair<int, double>>> rows_;
    bool dirty_ = false;
};

// Extension table between two windows I subset K: for each K-path, its group
// (shared prefix+suffix) and the index of its I-subpath. Drives both the
// sparse embedding and alpha-comparisons.
class EmbedTable {
  public:
    EmbedTable(const PathIndex& src, const PathIndex& tgt) {
        Interval i = src.window(), k = tgt.window();
        if (!k.contains(i)) throw input_error("EmbedTable: target must contain source window");
        int left = i.a - k.a, mid = i.width();
        const auto& g = tgt.graph();
        std::map<std::pair<std::vector<std::int32_t>, std::vector<std::int32_t>>, int> group_ids;
        entries_.resize(tgt.paths().size());
        for (std::size_t zi = 0; zi < tgt.paths().size(); ++zi) {
            const Path& z = tgt.paths()[zi];
            std::vector<std::int32_t> pre(z.edges.begin(), z.edges.begin() + left);
            std::vector<std::int32_t> suf(z.edges.begin() + left + mid, z.edges.end());
            Path sub;
            sub.edges.assign(z.edges.begin() + left, z.edges.begin() + left + mid);
            sub.initial = left > 0 ? g.edge(z.edges[left - 1]).target : z.initial;
            sub.terminal = g.edge(z.edges[left + mid - 1]).target;
            auto [it, fresh] = group_ids.try_emplace({std::move(pre), std::move(suf)},
                                                     static_cast<int>(group_ids.size()));
            entries_[zi] = {it->second, src.index_of(sub)};
        }
        group_count_ = static_cast<int>(group_ids.size());
        group_member_.assign(static_cast<std::size_t>(group_count_), {});
        for (std::size_t zi = 0; zi < entries_.size(); ++zi)
            group_member_[entries_[zi].first][entries_[zi].second] = static_cast<int>(zi);
    }

    // psi_{I,K} on sparse data.
    SparseOp embed(const SparseOp& x, PathIndexPtr tgt) const {
        SparseOp out(std::move(tgt));
        for (int g = 0; g < group_count_; ++g) {
            const auto& members = group_member_[g];
            for (const auto& [src_row, tgt_row] : members) {
                const auto& row = x.row(src_row);
                for (const auto& [src_col, v] : row) {
                    auto it = members.find(src_col);
                    if (it != members.end()) out.add_entry(tgt_row, it->second, v);
                }
            }
        }
        out.compress();
        return out;
    }

  private:
    std::vector<std::pair<int, int>> entries_; // per target path: (group, source index)
    std::vector<std::unordered_map<int, int>> group_member_; // group -> (source idx -> target idx)
    int group_count_ = 0;
};

// AlgebraElement -> sparse form at its own window.
inline SparseOp to_sparse(const AlgebraElement& e, PathIndexPtr idx) {
    if (!(idx->window() == e.window()))
        throw input_error("to_sparse: window mismatch");
    SparseOp s(idx);
    for (const auto& [key, paths] : e.basis()->blocks()) {
        const auto& blk = e.block(key.first, key.second);
        std::vector<int> ids(paths.size());
        for (std::size_t i = 0; i < paths.size(); ++i) ids[i] = idx->index_of(paths[i]);
        for (std::size_t i = 0; i < blk.rows(); ++i)
            for (std::size_t j = 0; j < blk.cols(); ++j)
                if (blk(i, j) != 0.0) s.add_entry(ids[i], ids[j], blk(i, j));
    }
    s.compress();
    return s;
}

} // namespace sft

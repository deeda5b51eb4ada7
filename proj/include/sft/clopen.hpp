#pragma once

#include <algorithm>
#include <memory>
#include <vector>

#include "sft/config.hpp"
#include "sft/graph.hpp"
#include "sft/perron.hpp"

namespace sft {

// cyl(x, k) = { y : y_{i+k} = x_i for 0 <= i < |x| }.
struct Cylinder {
    Path x;
    int k = 0;
};

inline double cylinder_measure(const PerronData& pd, const Cylinder& c) {
    if (c.x.length() < 1) throw input_error("cylinder_measure: path must be nonempty");
    return std::pow(pd.lambda, -c.x.length()) * pd.w[c.x.initial] * pd.v[c.x.terminal];
}

// Clopen subset of the path space in common-window normal form: a window
// [a,b] plus the sorted set of full-window member paths. Set operations are
// exact; the exponential window cost is the accepted desk-scale tradeoff.
class ClopenSet {
  public:
    ClopenSet(std::shared_ptr<const Graph> g, Interval window)
        : g_(std::move(g)), window_(window) {}
    ClopenSet(std::shared_ptr<const Graph> g, Interval window, std::vector<Path> members)
        : g_(std::move(g)), window_(window), members_(std::move(members)) {
        for (const auto& p : members_)
            if (p.length() != window_.width())
                throw input_error("ClopenSet: member length differs from window width");
        sort_dedup();
    }

    static ClopenSet full_space(std::shared_ptr<const Graph> g, Interval window,
                                const Caps& caps = {}) {
        std::vector<Path> all = all_window_paths(*g, window.width(), caps);
        return ClopenSet(std::move(g), window, std::move(all));
    }

    static ClopenSet from_cylinder(std::shared_ptr<const Graph> g, const Cylinder& c) {
        if (c.x.length() < 1) throw input_error("ClopenSet: empty cylinder path");
        Interval w(c.k, c.k + c.x.length() - 1);
        return ClopenSet(std::move(g), w, {c.x});
    }

    const Graph& graph() const { return *g_; }
    std::shared_ptr<const Graph> graph_ptr() const { return g_; }
    const Interval& window() const { return window_; }
    const std::vector<Path>& members() const { return members_; }
    bool empty() const { return members_.empty(); }
    std::size_t size() const { return members_.size(); }

    // Replace every member by all its extensions to the larger window.
    ClopenSet refine(Interval target, const Caps& caps = {}) const {
        if (!target.contains(window_)) throw input_error("refine: target does not contain window");
        if (target.width() > caps.max_window)
            throw resource_error("refine: window " + std::to_string(target.width()) +
                                 " exceeds cap " + std::to_string(caps.max_window));
        if (target == window_) return *this;
        int left = window_.a - target.a;
        int right = target.b - window_.b;
        std::vector<Path> out;
        for (const auto& m : members_) {
            auto prefixes = walks_into(*g_, m.initial, left);
            auto suffixes = walks_from(*g_, m.terminal, right);
            if (static_cast<std::int64_t>(out.size()) +
                    static_cast<std::int64_t>(prefixes.size()) * static_cast<std::int64_t>(suffixes.size()) >
                caps.max_paths)
                throw resource_error("refine: member count exceeds path cap");
            for (const auto& pre : prefixes)
                for (const auto& suf : suffixes) {
                    Path p;
                    p.edges.reserve(m.edges.size() + pre.edges.size() + suf.edges.size());
                    p.edges.insert(p.edges.end(), pre.edges.begin(), pre.edges.end());
                    p.edges.insert(p.edges.end(), m.edges.begin(), m.edges.end());
                    p.edges.insert(p.edges.end(), suf.edges.begin(), suf.edges.end());
                    p.initial = left > 0 ? pre.initial : m.initial;
                    p.terminal = right > 0 ? suf.terminal : m.terminal;
                    out.push_back(std::move(p));
                }
        }
        return ClopenSet(g_, target, std::move(out));
    }

    // sigma^n(C): window slides left by n, members unchanged.
    ClopenSet shift_by(int n) const {
        ClopenSet r = *this;
        r.window_ = Interval(window_.a - n, window_.b - n);
        return r;
    }

    ClopenSet unite(const ClopenSet& o, const Caps& caps = {}) const {
        auto [x, y] = commonize(o, caps);
        std::vector<Path> out;
        std::set_union(x.members_.begin(), x.members_.end(), y.members_.begin(), y.members_.end(),
                       std::back_inserter(out));
        return ClopenSet(g_, x.window_, std::move(out));
    }
    ClopenSet intersect(const ClopenSet& o, const Caps& caps = {}) const {
        auto [x, y] = commonize(o, caps);
        std::vector<Path> out;
        std::set_intersection(x.members_.begin(), x.members_.end(), y.members_.begin(),
                              y.members_.end(), std::back_inserter(out));
        return ClopenSet(g_, x.window_, std::move(out));
    }
    ClopenSet setminus(const ClopenSet& o, const Caps& caps = {}) const {
        auto [x, y] = commonize(o, caps);
        std::vector<Path> out;
        std::set_difference(x.members_.begin(), x.members_.end(), y.members_.begin(),
                            y.members_.end(), std::back_inserter(out));
        return ClopenSet(g_, x.window_, std::move(out));
    }
    ClopenSet complement(const Caps& caps = {}) const {
        return full_space(g_, window_, caps).setminus(*this, caps);
    }

    bool equals(const ClopenSet& o, const Caps& caps = {}) const {
        auto [x, y] = commonize(o, caps);
        return x.members_ == y.members_;
    }
    bool disjoint_from(const ClopenSet& o, const Caps& caps = {}) const {
        return intersect(o, caps).empty();
    }

    double measure(const PerronData& pd) const {
        double s = 0;
        double scale = std::pow(pd.lambda, -window_.width());
        for (const auto& m : members_) s += scale * pd.w[m.initial] * pd.v[m.terminal];
        return s;
    }

    // Member counts per (initial, terminal) block; this is the K0 class
    // representative at this window.
    IntMat block_counts() const {
        int r = g_->vertex_count();
        IntMat m(static_cast<std::size_t>(r), static_cast<std::size_t>(r));
        for (const auto& p : members_)
            m(static_cast<std::size_t>(p.initial), static_cast<std::size_t>(p.terminal)) += BigInt(1);
        return m;
    }

    static std::vector<Path> all_window_paths(const Graph& g, int width, const Caps& caps) {
        if (width > caps.max_window)
            throw resource_error("window " + std::to_string(width) + " exceeds cap " +
                                 std::to_string(caps.max_window));
        BigInt n = total_paths(g.matrix(), width);
        if (n > BigInt(caps.max_paths))
            throw resource_error("window of width " + std::to_string(width) + " has " +
                                 n.to_string() + " paths, cap is " + std::to_string(caps.max_paths));
        std::vector<Path> out;
        std::vector<std::int32_t> cur;
        auto rec = [&](auto&& self, int start, int at) -> void {
            if (static_cast<int>(cur.size()) == width) {
                Path p;
                p.edges = cur;
                p.initial = start;
                p.terminal = at;
                out.push_back(p);
                return;
            }
            for (int id : g.out_edges(at)) {
                cur.push_back(id);
                self(self, start, g.edge(id).target);
                cur.pop_back();
            }
        };
        for (int v = 0; v < g.vertex_count(); ++v) rec(rec, v, v);
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    std::shared_ptr<const Graph> g_;
    Interval window_;
    std::vector<Path> members_;

    void sort_dedup() {
        std::sort(members_.begin(), members_.end());
        members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    }

    std::pair<ClopenSet, ClopenSet> commonize(const ClopenSet& o, const Caps& caps) const {
        Interval j = Interval::hull(window_, o.window_);
        return {refine(j, caps), o.refine(j, caps)};
    }

    // all length-n walks ending at v (prefix extensions)
    static std::vector<Path> walks_into(const Graph& g, int v, int n) {
        std::vector<Path> cur;
        Path seed;
        seed.initial = seed.terminal = v;
        cur.push_back(seed);
        for (int s = 0; s < n; ++s) {
            std::vector<Path> next;
            for (const auto& e : g.edges()) {
                for (const auto& p : cur) {
                    if (e.target != p.initial) continue;
                    Path q = p;
                    q.edges.insert(q.edges.begin(), e.id);
                    q.initial = e.source;
                    next.push_back(std::move(q));
                }
            }
            cur = std::move(next);
        }
        return cur;
    }
    static std::vector<Path> walks_from(const Graph& g, int v, int n) {
        std::vector<Path> cur;
        Path seed;
        seed.initial = seed.terminal = v;
        cur.push_back(seed);
        for (int s = 0; s < n; ++s) {
            std::vector<Path> next;
            for (const auto& p : cur)
                for (int id : g.out_edges(p.terminal)) {
                    Path q = p;
                    q.edges.push_back(id);
                    q.terminal = g.edge(id).target;
                    next.push_back(std::move(q));
                }
            cur = std::move(next);
        }
        return cur;
    }
};

} // namespace sft

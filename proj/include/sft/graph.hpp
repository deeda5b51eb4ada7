#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sft/config.hpp"
#include "sft/matrix.hpp"

namespace sft {

// Nonnegative integral square matrix; the seed of everything downstream.
// The 1x1 matrix (1) is rejected: its shift space is a single point.
struct TransitionMatrix {
    int r = 0;
    std::vector<std::int64_t> entries; // row-major, r*r

    TransitionMatrix() = default;
    TransitionMatrix(int r_, std::vector<std::int64_t> e) : r(r_), entries(std::move(e)) {
        validate();
    }

    std::int64_t operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) * r + j]; }

    void validate() const {
        if (r <= 0) throw input_error("TransitionMatrix: empty matrix");
        if (entries.size() != static_cast<std::size_t>(r) * r)
            throw input_error("TransitionMatrix: not square");
        for (auto v : entries)
            if (v < 0) throw input_error("TransitionMatrix: negative entry");
        bool any = false;
        for (auto v : entries) any = any || v > 0;
        if (!any) throw input_error("TransitionMatrix: zero matrix");
        if (r == 1 && entries[0] == 1)
            throw input_error("TransitionMatrix: the 1x1 matrix (1) is excluded");
    }

    IntMat big() const {
        IntMat m(static_cast<std::size_t>(r), static_cast<std::size_t>(r));
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) m(i, j) = BigInt((*this)(i, j));
        return m;
    }

    // Inline syntax "1,1;1,0".
    static TransitionMatrix parse(const std::string& s) {
        std::vector<std::vector<std::int64_t>> rows(1);
        std::string cur;
        auto flush = [&](bool newrow) {
            if (cur.empty()) throw input_error("matrix literal: missing entry");
            rows.back().push_back(std::stoll(cur));
            cur.clear();
            if (newrow) rows.emplace_back();
        };
        for (char ch : s) {
            if (ch == ',') flush(false);
            else if (ch == ';') flush(true);
            else if (ch == ' ' || ch == '[' || ch == ']') continue;
            else cur.push_back(ch);
        }
        flush(false);
        int r = static_cast<int>(rows.size());
        std::vector<std::int64_t> e;
        for (auto& row : rows) {
            if (static_cast<int>(row.size()) != r)
                throw input_error("matrix literal: ragged rows");
            for (auto v : row) e.push_back(v);
        }
        return TransitionMatrix(r, std::move(e));
    }
};

// Closed integer interval [a,b]; windows of the finite algebras.
struct Interval {
    int a = 0, b = 0;
    Interval() = default;
    Interval(int a_, int b_) : a(a_), b(b_) {
        if (a > b) throw input_error("Interval: a > b");
    }
    int width() const { return b - a + 1; }
    bool contains(const Interval& o) const { return a <= o.a && o.b <= b; }
    friend bool operator==(const Interval& x, const Interval& y) { return x.a == y.a && x.b == y.b; }
    friend bool operator!=(const Interval& x, const Interval& y) { return !(x == y); }
    static Interval hull(const Interval& x, const Interval& y) {
        return Interval(std::min(x.a, y.a), std::max(x.b, y.b));
    }
};

struct Edge {
    int id = 0;
    int source = 0; // 0-based vertices
    int target = 0;
    int slot = 0;   // 0-based among parallel edges
};

// Finite edge path; endpoints cached. Length-0 paths carry just a vertex.
struct Path {
    std::vector<std::int32_t> edges;
    int initial = 0, terminal = 0;

    int length() const { return static_cast<int>(edges.size()); }
    friend bool operator==(const Path& x, const Path& y) { return x.edges == y.edges && x.initial == y.initial; }
    friend bool operator<(const Path& x, const Path& y) {
        if (x.edges != y.edges) return x.edges < y.edges;
        return x.initial < y.initial;
    }
};

// Edge graph of T with the canonical edge order (source, target, slot).
class Graph {
  public:
    explicit Graph(TransitionMatrix t) : T_(std::move(t)) {
        T_.validate();
        for (int i = 0; i < T_.r; ++i)
            for (int j = 0; j < T_.r; ++j)
                for (int s = 0; s < T_(i, j); ++s) {
                    Edge e;
                    e.id = static_cast<int>(edges_.size());
                    e.source = i;
                    e.target = j;
                    e.slot = s;
                    edges_.push_back(e);
                }
        out_.resize(T_.r);
        for (const auto& e : edges_) out_[e.source].push_back(e.id);
    }

    const TransitionMatrix& matrix() const { return T_; }
    int vertex_count() const { return T_.r; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const Edge& edge(int id) const { return edges_[id]; }
    const std::vector<int>& out_edges(int v) const { return out_[v]; }
    const std::vector<Edge>& edges() const { return edges_; }

    Path vertex_path(int v) const {
        Path p;
        p.initial = p.terminal = v;
        return p;
    }

    Path make_path(std::vector<std::int32_t> edge_ids) const {
        if (edge_ids.empty()) throw input_error("make_path: empty edge list has no endpoints");
        Path p;
        p.edges = std::move(edge_ids);
        p.initial = edges_[p.edges.front()].source;
        int at = p.initial;
        for (auto id : p.edges) {
            if (id < 0 || id >= edge_count()) throw input_error("make_path: bad edge id");
            if (edges_[id].source != at) throw input_error("make_path: edges do not compose");
            at = edges_[id].target;
        }
        p.terminal = at;
        return p;
    }

  private:
    TransitionMatrix T_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> out_;
};

inline Graph build_graph(const TransitionMatrix& t) { return Graph(t); }

// Number of length-len paths from i to j: entry (i,j) of T^len.
inline BigInt count_paths(const TransitionMatrix& t, int i, int j, int len) {
    if (i < 0 || i >= t.r || j < 0 || j >= t.r) throw input_error("count_paths: vertex out of range");
    if (len < 0) throw input_error("count_paths: negative length");
    IntMat p = t.big().pow(static_cast<std::uint64_t>(len));
    return p(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

inline BigInt total_paths(const TransitionMatrix& t, int len) {
    IntMat p = t.big().pow(static_cast<std::uint64_t>(len));
    BigInt s(0);
    for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = 0; j < p.cols(); ++j) s += p(i, j);
    return s;
}

// All length-len paths i -> j in lexicographic edge-id order. This order is
// the block-index contract for every finite algebra downstream.
inline std::vector<Path> enumerate_paths(const Graph& g, int i, int j, int len,
                                         std::int64_t cap = 1'000'000) {
    if (i < 0 || i >= g.vertex_count() || j < 0 || j >= g.vertex_count())
        throw input_error("enumerate_paths: vertex out of range");
    if (len < 0) throw input_error("enumerate_paths: negative length");
    BigInt n = count_paths(g.matrix(), i, j, len);
    if (n > BigInt(cap))
        throw resource_error("enumerate_paths: would produce " + n.to_string() +
                             " paths, cap is " + std::to_string(cap));
    std::vector<Path> out;
    if (len == 0) {
        if (i == j) out.push_back(g.vertex_path(i));
        return out;
    }
    std::vector<std::int32_t> cur;
    // recursive lexicographic walk; out_edges are already id-sorted
    auto rec = [&](auto&& self, int at) -> void {
        if (static_cast<int>(cur.size()) == len) {
            if (at == j) {
                Path p;
                p.edges = cur;
                p.initial = i;
                p.terminal = j;
                out.push_back(p);
            }
            return;
        }
        for (int id : g.out_edges(at)) {
            cur.push_back(id);
            self(self, g.edge(id).target);
            cur.pop_back();
        }
    };
    rec(rec, i);
    return out;
}

struct PrimitivityReport {
    bool primitive = false;
    int witness = 0; // least n with T^n > 0 when primitive; else the Wielandt bound tried
};

// Decision procedure via the Wielandt bound r^2 - 2r + 2.
inline PrimitivityReport is_primitive(const TransitionMatrix& t) {
    t.validate();
    int bound = t.r * t.r - 2 * t.r + 2;
    if (bound < 1) bound = 1;
    // boolean powers are enough
    std::vector<bool> cur(static_cast<std::size_t>(t.r) * t.r), base(cur.size());
    for (std::size_t k = 0; k < base.size(); ++k) base[k] = t.entries[k] > 0;
    cur = base;
    for (int n = 1; n <= bound; ++n) {
        bool all = true;
        for (bool v : cur) all = all && v;
        if (all) return {true, n};
        std::vector<bool> next(cur.size(), false);
        for (int i = 0; i < t.r; ++i)
            for (int k = 0; k < t.r; ++k) {
                if (!cur[static_cast<std::size_t>(i) * t.r + k]) continue;
                for (int j = 0; j < t.r; ++j)
                    if (base[static_cast<std::size_t>(k) * t.r + j])
                        next[static_cast<std::size_t>(i) * t.r + j] = true;
            }
        cur = next;
    }
    return {false, bound};
}

// Companion of x^k - x - 1; primitive with Perron root tending to 1.
// Handy low-entropy family for tall-tower runs.
inline TransitionMatrix trinomial_companion(int k) {
    if (k < 2) throw input_error("trinomial_companion: k >= 2 required");
    std::vector<std::int64_t> e(static_cast<std::size_t>(k) * k, 0);
    for (int i = 0; i + 1 < k; ++i) e[static_cast<std::size_t>(i) * k + i + 1] = 1;
    e[static_cast<std::size_t>(k - 1) * k + 0] = 1;
    e[static_cast<std::size_t>(k - 1) * k + 1] = 1;
    return TransitionMatrix(k, std::move(e));
}

inline TransitionMatrix golden_mean() { return TransitionMatrix(2, {1, 1, 1, 0}); }
inline TransitionMatrix full_shift(int n) {
    if (n < 2) throw input_error("full_shift: n >= 2");
    return TransitionMatrix(1, {n});
}

} // namespace sft

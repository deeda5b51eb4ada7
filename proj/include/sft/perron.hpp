#pragma once

#include <cmath>
#include <vector>

#include "sft/config.hpp"
#include "sft/graph.hpp"

namespace sft {

// Perron eigenvalue and eigenvectors of a primitive matrix, normalized wv = 1.
// Float data; the exact Q(lambda) versions live in number_field.hpp.
struct PerronData {
    double lambda = 0;
    std::vector<double> v; // right
    std::vector<double> w; // left
    double residual = 0;

    double stationary(int i) const { return w[i] * v[i]; }
    // Transition probability of an edge under the measure of maximal entropy.
    double edge_prob(const Edge& e) const { return v[e.target] / (lambda * v[e.source]); }
};

inline PerronData perron_data(const TransitionMatrix& t, const Caps& caps = {}) {
    auto prim = is_primitive(t);
    if (!prim.primitive) throw input_error("perron_data: matrix is not primitive");
    int r = t.r;
    std::vector<double> v(r, 1.0), w(r, 1.0);
    double lambda = 0;
    auto step = [&](std::vector<double>& x, bool left) {
        std::vector<double> y(r, 0.0);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                double a = static_cast<double>(t(i, j));
                if (left) y[j] += x[i] * a;
                else y[i] += a * x[j];
            }
        double nrm = 0;
        for (double z : y) nrm += z;
        for (double& z : y) z /= nrm;
        x = y;
        return nrm;
    };
    int it = 0;
    for (;; ++it) {
        if (it > caps.power_iter_cap)
            throw degenerate_error("perron_data: power iteration did not converge");
        double lam = step(v, false);
        step(w, true);
        // residual check on both sides
        double res = 0;
        for (int i = 0; i < r; ++i) {
            double tv = 0, tw = 0;
            for (int j = 0; j < r; ++j) {
                tv += static_cast<double>(t(i, j)) * v[j];
                tw += static_cast<double>(t(j, i)) * w[j];
            }
            res = std::max(res, std::fabs(tv - lam * v[i]));
            res = std::max(res, std::fabs(tw - lam * w[i]));
        }
        if (res <= 1e-14 * lam * r || it == caps.power_iter_cap) {
            lambda = lam;
            if (res > 1e-10 * lam * r)
                throw degenerate_error("perron_data: residual stalled above tolerance");
            break;
        }
    }
    double dot = 0;
    for (int i = 0; i < r; ++i) dot += w[i] * v[i];
    for (int i = 0; i < r; ++i) w[i] /= dot;
    PerronData pd;
    pd.lambda = lambda;
    pd.v = v;
    pd.w = w;
    double res = 0;
    for (int i = 0; i < r; ++i) {
        double tv = 0;
        for (int j = 0; j < r; ++j) tv += static_cast<double>(t(i, j)) * v[j];
        res = std::max(res, std::fabs(tv - lambda * v[i]));
    }
    pd.residual = res;
    return pd;
}

} // namespace sft

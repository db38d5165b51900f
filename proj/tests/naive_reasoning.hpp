#pragma once

// Straightforward reference for the message-passing forward pass: every
// message is a full affine map applied to an explicit concatenation, and
// neighbourhoods are read off the complex cell by cell.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "toporag/reasoning.hpp"

namespace testing {

using Vec = std::vector<double>;

inline Vec naive_affine(const toporag::AffineMap& m, const Vec& x) {
    Vec y(static_cast<std::size_t>(m.out_dim()));
    for (int r = 0; r < m.out_dim(); ++r) {
        double acc = m.bias(r);
        for (int c = 0; c < m.in_dim(); ++c) acc += double(m.weight(r, c)) * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
    return y;
}

inline Vec naive_act(Vec v, toporag::Activation a) {
    for (auto& x : v) {
        if (a == toporag::Activation::kRelu) x = std::max(0.0, x);
        if (a == toporag::Activation::kTanh) x = std::tanh(x);
    }
    return v;
}

inline Vec concat(std::initializer_list<const Vec*> parts) {
    Vec out;
    for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
    return out;
}

struct NaiveResult {
    std::map<toporag::CellKey, Vec> stage1;
    std::map<toporag::CellKey, Vec> final_states;
    Vec pooled;
};

inline NaiveResult naive_forward(const toporag::CellComplex& cx, const toporag::Subcomplex& sub,
                                 const toporag::ReasoningWeights& w) {
    using toporag::CellKey;
    const auto& cfg = w.config;
    const auto d = static_cast<std::size_t>(cfg.state_dim);
    const bool mean = cfg.aggregation == toporag::Aggregation::kMean;
    auto in_sub = [&](int dim, int id) {
        const auto& list = dim == 0 ? sub.cells0 : dim == 1 ? sub.cells1 : sub.cells2;
        return std::find(list.begin(), list.end(), id) != list.end();
    };

    std::map<CellKey, Vec> h;
    auto seed = [&](int dim, int id, const toporag::EmbeddingVector& z) {
        Vec x(z.values().begin(), z.values().end());
        h[{dim, id}] = w.input ? naive_affine(*w.input, x) : x;
    };
    for (int v : sub.cells0) seed(0, v, cx.embeddings.z0[static_cast<std::size_t>(v)]);
    for (int e : sub.cells1) seed(1, e, cx.embeddings.z1[static_cast<std::size_t>(e)]);
    for (int f : sub.cells2) seed(2, f, cx.embeddings.z2[static_cast<std::size_t>(f)]);

    auto faces = [&](CellKey k) {
        std::vector<CellKey> out;
        if (k.dim == 1) {
            const auto& c = cx.one_cells[static_cast<std::size_t>(k.id)];
            out.push_back({0, c.u});
            if (c.v != c.u) out.push_back({0, c.v});
        } else if (k.dim == 2) {
            for (int e : cx.two_cells[static_cast<std::size_t>(k.id)].cycle.edges) out.push_back({1, e});
        }
        return out;
    };
    auto cofaces = [&](CellKey k, bool skeleton_only) {
        std::vector<CellKey> out;
        if (k.dim == 0) {
            for (std::size_t e = 0; e < cx.one_cells.size(); ++e) {
                const auto& c = cx.one_cells[e];
                if ((c.u == k.id || c.v == k.id) && in_sub(1, static_cast<int>(e))) out.push_back({1, static_cast<int>(e)});
            }
        } else if (k.dim == 1 && !skeleton_only) {
            for (std::size_t f = 0; f < cx.two_cells.size(); ++f) {
                const auto& edges = cx.two_cells[f].cycle.edges;
                if (std::find(edges.begin(), edges.end(), k.id) != edges.end() && in_sub(2, static_cast<int>(f))) {
                    out.push_back({2, static_cast<int>(f)});
                }
            }
        }
        return out;
    };
    auto upper = [&](CellKey k) {
        std::vector<std::pair<CellKey, CellKey>> out;  // (neighbour, coface)
        for (const auto& c : cofaces(k, false)) {
            for (const auto& other : faces(c)) {
                if (!(other == k)) out.emplace_back(other, c);
            }
        }
        return out;
    };
    auto aggregate = [&](const std::vector<Vec>& msgs) {
        Vec sum(d, 0.0);
        for (const auto& m : msgs) {
            for (std::size_t i = 0; i < d; ++i) sum[i] += m[i];
        }
        if (mean && !msgs.empty()) {
            for (auto& x : sum) x /= static_cast<double>(msgs.size());
        }
        return sum;
    };

    for (const auto& layer : w.stage1) {
        std::map<CellKey, Vec> next = h;
        for (const auto& [k, hx] : h) {
            if (k.dim == 2) continue;
            std::vector<Vec> mf, mc;
            for (const auto& y : faces(k)) mf.push_back(naive_act(naive_affine(layer.face, concat({&hx, &h.at(y)})), cfg.activation));
            for (const auto& y : cofaces(k, true)) {
                mc.push_back(naive_act(naive_affine(layer.coface, concat({&hx, &h.at(y)})), cfg.activation));
            }
            const auto af = aggregate(mf), ac = aggregate(mc);
            next[k] = naive_act(naive_affine(layer.update, concat({&hx, &af, &ac})), cfg.activation);
        }
        h = std::move(next);
    }
    NaiveResult r;
    r.stage1 = h;

    const auto& s2 = w.stage2;
    std::map<CellKey, Vec> out;
    for (const auto& [k, hx] : h) {
        std::vector<Vec> mf, mc, mu;
        for (const auto& y : faces(k)) mf.push_back(naive_act(naive_affine(s2.face, concat({&hx, &h.at(y)})), cfg.activation));
        for (const auto& y : cofaces(k, false)) {
            mc.push_back(naive_act(naive_affine(s2.coface, concat({&hx, &h.at(y)})), cfg.activation));
        }
        for (const auto& [nb, c] : upper(k)) {
            mu.push_back(naive_act(naive_affine(s2.upper, concat({&hx, &h.at(nb), &h.at(c)})), cfg.activation));
        }
        const auto af = aggregate(mf), ac = aggregate(mc), au = aggregate(mu);
        out[k] = naive_act(naive_affine(s2.update, concat({&hx, &af, &ac, &au})), cfg.activation);
    }
    r.final_states = out;
    r.pooled.assign(d, 0.0);
    for (const auto& [k, v] : out) {
        for (std::size_t i = 0; i < d; ++i) r.pooled[i] += v[i] / static_cast<double>(out.size());
    }
    return r;
}

}  // namespace testing

#include "toporag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <tuple>

#include <nlohmann/json.hpp>

#include "toporag/errors.hpp"

namespace toporag {

using nlohmann::json;

namespace {

constexpr double kEps = 1e-9;

std::size_t at(int i) { return static_cast<std::size_t>(i); }

}  // namespace

EmbeddingVector encode_query(const std::string& question, EmbeddingProvider& provider) {
    const std::string texts[] = {question};
    return embed_texts(texts, provider).front();
}

std::vector<RankedCell> topk_cells(const CellComplex& complex, const EmbeddingVector& query, int dim, int k) {
    if (dim != 0 && dim != 1) throw ValidationError("top-k ranking is defined for 0- and 1-cells");
    if (k < 0) throw ValidationError("k must be non-negative");
    const auto& table = dim == 0 ? complex.embeddings.z0 : complex.embeddings.z1;
    const std::size_t count = complex.num_cells(dim);
    if (table.size() != count) {
        throw DimensionMismatch("complex has " + std::to_string(table.size()) + " embeddings for " +
                                std::to_string(count) + " " + std::to_string(dim) + "-cells");
    }
    std::vector<RankedCell> all;
    all.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        all.push_back({static_cast<int>(i), cosine(query, table[i])});
    }
    const auto keep = std::min(all.size(), static_cast<std::size_t>(k));
    auto better = [](const RankedCell& a, const RankedCell& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.cell < b.cell;
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
    all.resize(keep);
    return all;
}

PrizeIndexing parse_prize_indexing(const std::string& name) {
    if (name == "from_k") return PrizeIndexing::kFromK;
    if (name == "from_k_minus_one") return PrizeIndexing::kFromKMinusOne;
    throw ValidationError("unknown prize indexing '" + name + "'");
}

std::string to_string(PrizeIndexing indexing) {
    return indexing == PrizeIndexing::kFromK ? "from_k" : "from_k_minus_one";
}

double PrizeAssignment::prize(int dim, int cell) const {
    switch (dim) {
        case 0: return prize0.at(at(cell));
        case 1: return prize1.at(at(cell));
        case 2: return prize2.at(at(cell));
        default: throw ValidationError("cell dimension must be 0, 1 or 2");
    }
}

int PrizeAssignment::rank(int dim, int cell) const {
    switch (dim) {
        case 0: return rank0.at(at(cell));
        case 1: return rank1.at(at(cell));
        default: return -1;
    }
}

double two_cell_prize(double boundary_prize_sum, std::size_t boundary_edges, double c2) {
    return boundary_prize_sum - static_cast<double>(boundary_edges) * c2;
}

PrizeAssignment assign_prizes(std::span<const RankedCell> ranked0, std::span<const RankedCell> ranked1,
                              const CellComplex& complex, const PrizeParams& params) {
    if (params.c2 < 0 || params.c_edge < 0) throw ValidationError("c2 and c_edge must be non-negative");
    PrizeAssignment pa;
    pa.params = params;
    pa.prize0.assign(complex.num_cells(0), 0.0);
    pa.prize1.assign(complex.num_cells(1), 0.0);
    pa.rank0.assign(complex.num_cells(0), -1);
    pa.rank1.assign(complex.num_cells(1), -1);
    pa.ranked0.assign(ranked0.begin(), ranked0.end());
    pa.ranked1.assign(ranked1.begin(), ranked1.end());

    const int offset = params.indexing == PrizeIndexing::kFromK ? 0 : 1;
    auto fill = [&](std::span<const RankedCell> ranked, int k, std::vector<double>& prize, std::vector<int>& rank) {
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            const auto cell = at(ranked[r].cell);
            if (rank.at(cell) != -1) throw ValidationError("cell ranked twice");
            rank[cell] = static_cast<int>(r);
            prize[cell] = static_cast<double>(k - static_cast<int>(r) - offset);
        }
    };
    fill(ranked0, params.k0, pa.prize0, pa.rank0);
    fill(ranked1, params.k1, pa.prize1, pa.rank1);

    pa.prize2.reserve(complex.two_cells.size());
    pa.cost2.reserve(complex.two_cells.size());
    for (const auto& face : complex.two_cells) {
        double boundary = 0.0;
        for (int v : face.cycle.distinct_vertices()) boundary += pa.prize0[at(v)];
        for (int e : face.cycle.edges) boundary += pa.prize1[at(e)];
        pa.cost2.push_back(static_cast<double>(face.cycle.length()) * params.c2);
        pa.prize2.push_back(two_cell_prize(boundary, face.cycle.length(), params.c2));
    }
    return pa;
}

std::vector<int> topk_two_cells(const PrizeAssignment& assignment, const CellComplex& complex, int k2) {
    if (k2 < 0) throw ValidationError("k2 must be non-negative");
    if (assignment.prize2.size() != complex.two_cells.size()) {
        throw ValidationError("prize assignment does not match the complex");
    }
    std::vector<int> eligible;
    for (std::size_t f = 0; f < assignment.prize2.size(); ++f) {
        if (assignment.prize2[f] > 0.0) eligible.push_back(static_cast<int>(f));
    }
    std::stable_sort(eligible.begin(), eligible.end(), [&](int a, int b) {
        return assignment.prize2[at(a)] > assignment.prize2[at(b)];
    });
    if (eligible.size() > static_cast<std::size_t>(k2)) eligible.resize(static_cast<std::size_t>(k2));
    return eligible;
}

// ---------------------------------------------------------------------------

Subcomplex enforce_boundary_consistency(const CellComplex& complex, Subcomplex s) {
    std::vector<char> v(complex.num_cells(0), 0), e(complex.num_cells(1), 0), f(complex.num_cells(2), 0);
    for (int x : s.cells2) f.at(at(x)) = 1;
    for (int x : s.cells1) e.at(at(x)) = 1;
    for (int x : s.cells0) v.at(at(x)) = 1;
    for (std::size_t x = 0; x < f.size(); ++x) {
        if (!f[x]) continue;
        for (int edge : complex.two_cells[x].cycle.edges) e[at(edge)] = 1;
    }
    for (std::size_t x = 0; x < e.size(); ++x) {
        if (!e[x]) continue;
        v[at(complex.one_cells[x].u)] = 1;
        v[at(complex.one_cells[x].v)] = 1;
    }
    auto collect = [](const std::vector<char>& mask) {
        std::vector<int> out;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i]) out.push_back(static_cast<int>(i));
        }
        return out;
    };
    s.cells0 = collect(v);
    s.cells1 = collect(e);
    s.cells2 = collect(f);
    return s;
}

ObjectiveValue evaluate_objective(const CellComplex& complex, const PrizeAssignment& pa, const Subcomplex& s) {
    (void)complex;
    ObjectiveValue out;
    for (int v : s.cells0) out.prize += pa.prize0.at(at(v));
    for (int e : s.cells1) {
        out.prize += pa.prize1.at(at(e));
        out.cost += pa.edge_cost(e);
    }
    for (int f : s.cells2) {
        out.prize += pa.prize2.at(at(f));
        out.cost += pa.cost2.at(at(f));
    }
    return out;
}

namespace {

std::vector<int> vertex_components(const CellComplex& cx) {
    if (cx.forest.component.size() == at(cx.num_vertices)) return cx.forest.component;
    std::vector<int> comp(at(cx.num_vertices), -1);
    int next = 0;
    for (int root = 0; root < cx.num_vertices; ++root) {
        if (comp[at(root)] != -1) continue;
        comp[at(root)] = next;
        std::vector<int> stack{root};
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            for (int e : cx.vertex_cofaces[at(x)]) {
                const auto& c = cx.one_cells[at(e)];
                const int y = c.u == x ? c.v : c.u;
                if (comp[at(y)] == -1) {
                    comp[at(y)] = next;
                    stack.push_back(y);
                }
            }
        }
        ++next;
    }
    return comp;
}

// Spanning trees of the selected 1-skeleton, one per touched component.
// Returns false if some component's selection is disconnected.
bool certify(const CellComplex& cx, const Subcomplex& s, const std::vector<int>& comp,
             std::vector<ConnectivityCertificate>* out) {
    std::vector<char> selv(cx.num_cells(0), 0), sele(cx.num_cells(1), 0), seen(cx.num_cells(0), 0);
    for (int v : s.cells0) selv[at(v)] = 1;
    for (int e : s.cells1) sele[at(e)] = 1;
    std::vector<char> comp_done(cx.num_cells(0), 0);
    for (int root : s.cells0) {
        const int c = comp[at(root)];
        if (seen[at(root)]) continue;
        if (comp_done[at(c)]) return false;  // a second piece in the same component
        comp_done[at(c)] = 1;
        ConnectivityCertificate cert{c, root, {}};
        std::queue<int> q;
        q.push(root);
        seen[at(root)] = 1;
        while (!q.empty()) {
            const int x = q.front();
            q.pop();
            for (int e : cx.vertex_cofaces[at(x)]) {
                if (!sele[at(e)]) continue;
                const auto& oc = cx.one_cells[at(e)];
                const int y = oc.u == x ? oc.v : oc.u;
                if (!selv[at(y)] || seen[at(y)]) continue;
                seen[at(y)] = 1;
                cert.tree_edges.push_back(e);
                q.push(y);
            }
        }
        std::sort(cert.tree_edges.begin(), cert.tree_edges.end());
        if (out) out->push_back(std::move(cert));
    }
    return true;
}

}  // namespace

std::vector<std::string> check_subcomplex(const CellComplex& complex, const Subcomplex& s) {
    std::vector<std::string> bad;
    for (const auto* ids : {&s.cells0, &s.cells1, &s.cells2}) {
        if (!std::is_sorted(ids->begin(), ids->end()) ||
            std::adjacent_find(ids->begin(), ids->end()) != ids->end()) {
            bad.push_back("cell lists must be strictly ascending");
        }
    }
    for (int v : s.cells0) {
        if (v < 0 || at(v) >= complex.num_cells(0)) bad.push_back("0-cell " + std::to_string(v) + " out of range");
    }
    for (int e : s.cells1) {
        if (e < 0 || at(e) >= complex.num_cells(1)) bad.push_back("1-cell " + std::to_string(e) + " out of range");
    }
    for (int f : s.cells2) {
        if (f < 0 || at(f) >= complex.num_cells(2)) bad.push_back("2-cell " + std::to_string(f) + " out of range");
    }
    if (!bad.empty()) return bad;
    const auto closed = enforce_boundary_consistency(complex, s);
    if (!closed.same_cells(s)) bad.push_back("selection is not closed under boundary");
    if (!certify(complex, s, vertex_components(complex), nullptr)) {
        bad.push_back("selected 1-skeleton is disconnected within a component");
    }
    return bad;
}

Subcomplex finalize_subcomplex(const CellComplex& complex, const PrizeAssignment& pa, Subcomplex s) {
    const auto obj = evaluate_objective(complex, pa, s);
    s.prize = obj.prize;
    s.cost = obj.cost;
    s.certificates.clear();
    if (!certify(complex, s, vertex_components(complex), &s.certificates)) {
        throw Error("internal: subcomplex is disconnected within a component");
    }
    s.provenance.clear();
    auto add = [&](int dim, int id) {
        CellProvenance p{dim, id, -1, 0.0, pa.prize(dim, id)};
        if (dim < 2) {
            p.rank = pa.rank(dim, id);
            if (p.rank >= 0) {
                p.similarity = (dim == 0 ? pa.ranked0 : pa.ranked1)[at(p.rank)].similarity;
            }
        }
        s.provenance.push_back(p);
    };
    for (int v : s.cells0) add(0, v);
    for (int e : s.cells1) add(1, e);
    for (int f : s.cells2) add(2, f);
    return s;
}

// ---------------------------------------------------------------------------

namespace {

struct Selection {
    std::vector<char> v, e, f;

    Selection(const CellComplex& cx)
        : v(cx.num_cells(0), 0), e(cx.num_cells(1), 0), f(cx.num_cells(2), 0) {}

    Subcomplex to_subcomplex() const {
        Subcomplex s;
        for (std::size_t i = 0; i < v.size(); ++i) if (v[i]) s.cells0.push_back(static_cast<int>(i));
        for (std::size_t i = 0; i < e.size(); ++i) if (e[i]) s.cells1.push_back(static_cast<int>(i));
        for (std::size_t i = 0; i < f.size(); ++i) if (f[i]) s.cells2.push_back(static_cast<int>(i));
        return s;
    }
};

// Orders candidate answers: higher objective, then fewer cells, then
// lexicographically smaller (dim, id) lists.
bool better_than(const Subcomplex& a, double a_obj, const Subcomplex& b, double b_obj) {
    if (std::abs(a_obj - b_obj) > kEps) return a_obj > b_obj;
    if (a.size() != b.size()) return a.size() < b.size();
    return std::tie(a.cells0, a.cells1, a.cells2) < std::tie(b.cells0, b.cells1, b.cells2);
}

class SkeletonSolver {
public:
    SkeletonSolver(const CellComplex& cx, const PrizeAssignment& pa)
        : cx_(cx), pa_(pa), comp_(vertex_components(cx)) {}

    const std::vector<int>& components() const { return comp_; }

    double edge_net(int e) const { return pa_.prize1[at(e)] - pa_.edge_cost(e); }

    double objective(const Selection& s) const {
        double total = 0.0;
        for (std::size_t i = 0; i < s.v.size(); ++i) if (s.v[i]) total += pa_.prize0[i];
        for (std::size_t i = 0; i < s.e.size(); ++i) if (s.e[i]) total += edge_net(static_cast<int>(i));
        for (std::size_t i = 0; i < s.f.size(); ++i) if (s.f[i]) total += pa_.prize2[i] - pa_.cost2[i];
        return total;
    }

    // Goemans-Williamson growth with node prizes prize0 + half of every
    // incident ranked 1-cell prize, and edge costs from the assignment.
    // Returns the edges of the resulting forest.
    std::vector<int> grow_forest() const {
        const int n = cx_.num_vertices;
        const auto m = cx_.one_cells.size();
        std::vector<double> node_prize(pa_.prize0);
        for (std::size_t e = 0; e < m; ++e) {
            const auto& c = cx_.one_cells[e];
            if (c.is_self_loop() || pa_.prize1[e] <= 0.0) continue;
            node_prize[at(c.u)] += 0.5 * pa_.prize1[e];
            node_prize[at(c.v)] += 0.5 * pa_.prize1[e];
        }
        std::vector<int> parent(at(n));
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[at(x)] != x) {
                parent[at(x)] = parent[at(parent[at(x)])];
                x = parent[at(x)];
            }
            return x;
        };
        std::vector<double> budget(node_prize);
        std::vector<char> active(at(n), 0);
        for (int x = 0; x < n; ++x) active[at(x)] = budget[at(x)] > kEps;
        std::vector<double> slack(m, 0.0);
        for (std::size_t e = 0; e < m; ++e) slack[e] = pa_.edge_cost(static_cast<int>(e));

        std::vector<int> forest;
        std::vector<int> rate(m, 0);
        for (;;) {
            double best = std::numeric_limits<double>::infinity();
            int event_edge = -1;
            int event_cluster = -1;
            for (std::size_t e = 0; e < m; ++e) {
                const auto& c = cx_.one_cells[e];
                rate[e] = 0;
                if (c.is_self_loop()) continue;
                const int a = find(c.u), b = find(c.v);
                if (a == b) continue;
                rate[e] = active[at(a)] + active[at(b)];
                if (rate[e] == 0) continue;
                const double t = std::max(0.0, slack[e]) / rate[e];
                if (t < best) {
                    best = t;
                    event_edge = static_cast<int>(e);
                }
            }
            for (int x = 0; x < n; ++x) {
                if (parent[at(x)] == x && active[at(x)] && budget[at(x)] < best) {
                    best = budget[at(x)];
                    event_cluster = x;
                    event_edge = -1;
                }
            }
            if (event_edge < 0 && event_cluster < 0) break;

            for (std::size_t e = 0; e < m; ++e) slack[e] -= rate[e] * best;
            for (int x = 0; x < n; ++x) {
                if (parent[at(x)] == x && active[at(x)]) budget[at(x)] -= best;
            }
            if (event_edge >= 0) {
                const auto& c = cx_.one_cells[at(event_edge)];
                const int a = find(c.u), b = find(c.v);
                const int root = std::min(a, b), child = std::max(a, b);
                parent[at(child)] = root;
                budget[at(root)] = std::max(0.0, budget[at(a)]) + std::max(0.0, budget[at(b)]);
                active[at(root)] = budget[at(root)] > kEps;
                active[at(child)] = 0;
                slack[at(event_edge)] = 0.0;
                forest.push_back(event_edge);
            } else {
                budget[at(event_cluster)] = 0.0;
                active[at(event_cluster)] = 0;
            }
        }
        std::sort(forest.begin(), forest.end());
        return forest;
    }

    // Best connected subtree of every forest tree under the exact objective;
    // keeps the best tree per graph component.
    std::vector<Selection> prune(const std::vector<int>& forest_edges) const {
        const int n = cx_.num_vertices;
        std::vector<std::vector<std::pair<int, int>>> adj(at(n));  // (edge, neighbour)
        for (int e : forest_edges) {
            const auto& c = cx_.one_cells[at(e)];
            adj[at(c.u)].emplace_back(e, c.v);
            adj[at(c.v)].emplace_back(e, c.u);
        }
        std::vector<char> visited(at(n), 0);
        std::vector<double> value(at(n), 0.0);
        std::vector<int> up_edge(at(n), -1);
        std::vector<int> parent(at(n), -1);
        std::vector<int> best_root(at(n), -1);  // per graph component
        std::vector<double> best_value(at(n), -std::numeric_limits<double>::infinity());

        for (int root = 0; root < n; ++root) {
            if (visited[at(root)]) continue;
            std::vector<int> order{root};
            visited[at(root)] = 1;
            for (std::size_t i = 0; i < order.size(); ++i) {
                const int x = order[i];
                for (auto [e, y] : adj[at(x)]) {
                    if (visited[at(y)]) continue;
                    visited[at(y)] = 1;
                    parent[at(y)] = x;
                    up_edge[at(y)] = e;
                    order.push_back(y);
                }
            }
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                const int x = *it;
                value[at(x)] += pa_.prize0[at(x)];
                if (parent[at(x)] >= 0) {
                    const double gain = value[at(x)] + edge_net(up_edge[at(x)]);
                    if (gain > kEps) value[at(parent[at(x)])] += gain;
                }
            }
            const int c = comp_[at(root)];
            for (int x : order) {
                if (value[at(x)] > best_value[at(c)] + kEps) {
                    best_value[at(c)] = value[at(x)];
                    best_root[at(c)] = x;
                }
            }
        }

        std::vector<Selection> out;
        for (int c = 0; c < n; ++c) {
            if (best_root[at(c)] < 0 || !component_has_prize(c)) continue;
            Selection s(cx_);
            std::vector<int> stack{best_root[at(c)]};
            s.v[at(best_root[at(c)])] = 1;
            while (!stack.empty()) {
                const int x = stack.back();
                stack.pop_back();
                for (auto [e, y] : adj[at(x)]) {
                    if (parent[at(y)] != x || up_edge[at(y)] != e) continue;
                    if (value[at(y)] + edge_net(e) > kEps) {
                        s.v[at(y)] = 1;
                        s.e[at(e)] = 1;
                        stack.push_back(y);
                    }
                }
            }
            out.push_back(std::move(s));
        }
        return out;
    }

    bool component_has_prize(int c) const {
        for (int x = 0; x < cx_.num_vertices; ++x) {
            if (comp_[at(x)] == c && pa_.prize0[at(x)] > kEps) return true;
        }
        for (std::size_t e = 0; e < cx_.one_cells.size(); ++e) {
            if (comp_[at(cx_.one_cells[e].u)] == c && pa_.prize1[e] > kEps) return true;
        }
        return false;
    }

    // Selects every ranked 1-cell whose endpoints are already selected.
    void close_ranked_edges(Selection& s) const {
        for (std::size_t e = 0; e < s.e.size(); ++e) {
            const auto& c = cx_.one_cells[e];
            if (!s.e[e] && pa_.prize1[e] > 0.0 && pa_.edge_cost(static_cast<int>(e)) == 0.0 &&
                s.v[at(c.u)] && s.v[at(c.v)]) {
                s.e[e] = 1;
            }
        }
    }

    // Greedy vertex additions and leaf removals until neither improves.
    void improve(Selection& s) const {
        const int n = cx_.num_vertices;
        for (int round = 0; round < 4 * (n + 1); ++round) {
            close_ranked_edges(s);
            bool changed = false;

            // best single-vertex extension
            double best_gain = kEps;
            int best_vertex = -1, best_edge = -1;
            for (int x = 0; x < n; ++x) {
                if (s.v[at(x)]) continue;
                double link = -std::numeric_limits<double>::infinity();
                int link_edge = -1;
                double extra = 0.0;
                for (int e : cx_.vertex_cofaces[at(x)]) {
                    const auto& c = cx_.one_cells[at(e)];
                    if (c.is_self_loop()) {
                        if (pa_.prize1[at(e)] > 0.0) extra += edge_net(e);
                        continue;
                    }
                    const int y = c.u == x ? c.v : c.u;
                    if (!s.v[at(y)]) continue;
                    const double net = edge_net(e);
                    if (net > link) {
                        if (link_edge >= 0 && pa_.prize1[at(link_edge)] > 0.0 &&
                            pa_.edge_cost(link_edge) == 0.0) {
                            extra += pa_.prize1[at(link_edge)];
                        }
                        link = net;
                        link_edge = e;
                    } else if (pa_.prize1[at(e)] > 0.0 && pa_.edge_cost(e) == 0.0) {
                        extra += pa_.prize1[at(e)];
                    }
                }
                if (link_edge < 0) continue;
                const double gain = pa_.prize0[at(x)] + link + extra;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_vertex = x;
                    best_edge = link_edge;
                }
            }
            if (best_vertex >= 0) {
                s.v[at(best_vertex)] = 1;
                s.e[at(best_edge)] = 1;
                changed = true;
                continue;
            }

            // leaf removal
            for (int x = 0; x < n && !changed; ++x) {
                if (!s.v[at(x)]) continue;
                int degree = 0;
                double contribution = pa_.prize0[at(x)];
                for (int e : cx_.vertex_cofaces[at(x)]) {
                    if (!s.e[at(e)]) continue;
                    contribution += edge_net(e);
                    if (!cx_.one_cells[at(e)].is_self_loop()) ++degree;
                }
                if (degree == 1 && contribution < -kEps) {
                    s.v[at(x)] = 0;
                    for (int e : cx_.vertex_cofaces[at(x)]) s.e[at(e)] = 0;
                    changed = true;
                }
            }
            if (!changed) break;
        }
        close_ranked_edges(s);
    }

    // Seeds per component: the pruned forest tree, the best single 0-cell and
    // the best single ranked 1-cell. Each is improved; the best survives.
    Selection solve() const {
        const int n = cx_.num_vertices;
        std::vector<std::vector<Selection>> seeds(at(n));
        for (auto& s : prune(grow_forest())) {
            const int c = comp_[at(first_vertex(s))];
            seeds[at(c)].push_back(std::move(s));
        }
        std::vector<int> best_vertex(at(n), -1);
        for (int x = 0; x < n; ++x) {
            const int c = comp_[at(x)];
            if (best_vertex[at(c)] < 0 || pa_.prize0[at(x)] > pa_.prize0[at(best_vertex[at(c)])]) {
                best_vertex[at(c)] = x;
            }
        }
        std::vector<int> best_edge(at(n), -1);
        std::vector<double> best_edge_value(at(n), -std::numeric_limits<double>::infinity());
        for (std::size_t e = 0; e < cx_.one_cells.size(); ++e) {
            const auto& c = cx_.one_cells[e];
            if (pa_.prize1[e] <= 0.0) continue;
            double value = pa_.prize0[at(c.u)] + edge_net(static_cast<int>(e));
            if (!c.is_self_loop()) value += pa_.prize0[at(c.v)];
            const int comp = comp_[at(c.u)];
            if (value > best_edge_value[at(comp)] + kEps) {
                best_edge_value[at(comp)] = value;
                best_edge[at(comp)] = static_cast<int>(e);
            }
        }

        Selection result(cx_);
        for (int c = 0; c < n; ++c) {
            if (best_vertex[at(c)] < 0 || !component_has_prize(c)) continue;
            {
                Selection s(cx_);
                s.v[at(best_vertex[at(c)])] = 1;
                seeds[at(c)].push_back(std::move(s));
            }
            if (best_edge[at(c)] >= 0) {
                Selection s(cx_);
                const auto& oc = cx_.one_cells[at(best_edge[at(c)])];
                s.v[at(oc.u)] = s.v[at(oc.v)] = 1;
                s.e[at(best_edge[at(c)])] = 1;
                seeds[at(c)].push_back(std::move(s));
            }
            const Selection* winner = nullptr;
            Subcomplex winner_cells;
            double winner_obj = 0.0;
            for (auto& s : seeds[at(c)]) {
                improve(s);
                const auto cells = s.to_subcomplex();
                const double obj = objective(s);
                if (!winner || better_than(cells, obj, winner_cells, winner_obj)) {
                    winner = &s;
                    winner_cells = cells;
                    winner_obj = obj;
                }
            }
            merge_into(result, *winner);
        }
        return result;
    }

    // Phase two: offer each face in order, with the cheapest connecting path
    // when its boundary does not touch the current piece.
    void insert_two_cells(Selection& s, std::span<const int> faces) const {
        for (int f : faces) {
            if (f < 0 || at(f) >= cx_.two_cells.size()) throw ValidationError("2-cell id out of range");
            if (s.f[at(f)]) continue;
            Selection next = s;
            next.f[at(f)] = 1;
            const auto& cyc = cx_.two_cells[at(f)].cycle;
            bool touches = false;
            for (int v : cyc.distinct_vertices()) touches = touches || s.v[at(v)];
            const int comp = comp_[at(cyc.vertices.front())];
            if (!touches && piece_exists(s, comp)) connect(next, cyc);
            for (int e : cyc.edges) next.e[at(e)] = 1;
            for (int v : cyc.distinct_vertices()) next.v[at(v)] = 1;
            close_ranked_edges(next);
            if (objective(next) - objective(s) > kEps) s = std::move(next);
        }
    }

private:
    static int first_vertex(const Selection& s) {
        for (std::size_t i = 0; i < s.v.size(); ++i) if (s.v[i]) return static_cast<int>(i);
        return -1;
    }

    static void merge_into(Selection& into, const Selection& from) {
        for (std::size_t i = 0; i < from.v.size(); ++i) into.v[i] |= from.v[i];
        for (std::size_t i = 0; i < from.e.size(); ++i) into.e[i] |= from.e[i];
        for (std::size_t i = 0; i < from.f.size(); ++i) into.f[i] |= from.f[i];
    }

    bool piece_exists(const Selection& s, int comp) const {
        for (int x = 0; x < cx_.num_vertices; ++x) {
            if (s.v[at(x)] && comp_[at(x)] == comp) return true;
        }
        return false;
    }

    // Dijkstra from the face boundary to the selection; edge weights are the
    // per-edge costs, ties broken by vertex id.
    void connect(Selection& s, const Cycle& cyc) const {
        const int n = cx_.num_vertices;
        std::vector<double> dist(at(n), std::numeric_limits<double>::infinity());
        std::vector<int> via(at(n), -1);
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        for (int v : cyc.distinct_vertices()) {
            dist[at(v)] = 0.0;
            heap.emplace(0.0, v);
        }
        int hit = -1;
        while (!heap.empty()) {
            const auto [d, x] = heap.top();
            heap.pop();
            if (d > dist[at(x)]) continue;
            if (s.v[at(x)]) {
                hit = x;
                break;
            }
            for (int e : cx_.vertex_cofaces[at(x)]) {
                const auto& c = cx_.one_cells[at(e)];
                if (c.is_self_loop()) continue;
                const int y = c.u == x ? c.v : c.u;
                const double nd = d + pa_.edge_cost(e);
                if (nd < dist[at(y)]) {
                    dist[at(y)] = nd;
                    via[at(y)] = e;
                    heap.emplace(nd, y);
                }
            }
        }
        for (int x = hit; x >= 0 && via[at(x)] >= 0;) {
            const int e = via[at(x)];
            s.v[at(x)] = 1;
            s.e[at(e)] = 1;
            const auto& c = cx_.one_cells[at(e)];
            x = c.u == x ? c.v : c.u;
        }
    }

    const CellComplex& cx_;
    const PrizeAssignment& pa_;
    std::vector<int> comp_;
};

bool has_positive_prize(const PrizeAssignment& pa) {
    auto positive = [](double p) { return p > kEps; };
    return std::any_of(pa.prize0.begin(), pa.prize0.end(), positive) ||
           std::any_of(pa.prize1.begin(), pa.prize1.end(), positive);
}

void check_assignment(const CellComplex& cx, const PrizeAssignment& pa) {
    if (pa.prize0.size() != cx.num_cells(0) || pa.prize1.size() != cx.num_cells(1) ||
        pa.prize2.size() != cx.num_cells(2)) {
        throw ValidationError("prize assignment does not match the complex");
    }
}

Subcomplex degenerate_answer(const CellComplex& cx, const PrizeAssignment& pa) {
    if (cx.num_vertices == 0) throw EmptyCandidates("complex has no 0-cells");
    Subcomplex s;
    s.cells0 = {pa.ranked0.empty() ? 0 : pa.ranked0.front().cell};
    s = finalize_subcomplex(cx, pa, std::move(s));
    s.degenerate = true;
    return s;
}

}  // namespace

Subcomplex solve_subcomplex(const CellComplex& complex, const PrizeAssignment& assignment,
                            std::span<const int> selected_two_cells) {
    check_assignment(complex, assignment);
    if (!has_positive_prize(assignment) && selected_two_cells.empty()) {
        return degenerate_answer(complex, assignment);
    }
    SkeletonSolver solver(complex, assignment);
    Selection sel = solver.solve();
    solver.insert_two_cells(sel, selected_two_cells);
    auto s = enforce_boundary_consistency(complex, sel.to_subcomplex());
    if (s.empty()) return degenerate_answer(complex, assignment);
    return finalize_subcomplex(complex, assignment, std::move(s));
}

Subcomplex solve_skeleton(const CellComplex& complex, const PrizeAssignment& assignment) {
    return solve_subcomplex(complex, assignment, {});
}

Subcomplex brute_force_subcomplex(const CellComplex& cx, const PrizeAssignment& pa, std::size_t max_cells) {
    check_assignment(cx, pa);
    const std::size_t total = cx.total_cells();
    if (total > max_cells || total > 30) {
        throw TooLarge(std::to_string(total) + " cells exceed the enumeration limit of " +
                       std::to_string(std::min<std::size_t>(max_cells, 30)));
    }
    if (total == 0) throw EmptyCandidates("complex has no cells");
    const auto n0 = cx.num_cells(0), n1 = cx.num_cells(1);
    // bit layout: 0-cells, then 1-cells, then 2-cells
    std::vector<std::uint32_t> needs(total, 0);
    std::vector<double> gain(total, 0.0);
    for (std::size_t v = 0; v < n0; ++v) gain[v] = pa.prize0[v];
    for (std::size_t e = 0; e < n1; ++e) {
        const auto& c = cx.one_cells[e];
        needs[n0 + e] = (1u << c.u) | (1u << c.v);
        gain[n0 + e] = pa.prize1[e] - pa.edge_cost(static_cast<int>(e));
    }
    for (std::size_t f = 0; f < cx.two_cells.size(); ++f) {
        std::uint32_t mask = 0;
        for (int e : cx.two_cells[f].cycle.edges) mask |= (1u << (n0 + at(e))) | needs[n0 + at(e)];
        needs[n0 + n1 + f] = mask;
        gain[n0 + n1 + f] = pa.prize2[f] - pa.cost2[f];
    }
    const auto comp = vertex_components(cx);

    Subcomplex best;
    double best_obj = -std::numeric_limits<double>::infinity();
    bool found = false;
    std::vector<int> dsu(n0);
    const std::uint64_t limit = 1ULL << total;
    for (std::uint64_t mask = 1; mask < limit; ++mask) {
        bool closed = true;
        double obj = 0.0;
        for (std::size_t i = 0; i < total && closed; ++i) {
            if (!(mask >> i & 1)) continue;
            closed = (needs[i] & ~static_cast<std::uint32_t>(mask)) == 0;
            obj += gain[i];
        }
        if (!closed) continue;
        if (found && obj < best_obj - kEps) continue;
        // connectivity of the selected 1-skeleton within each component
        std::iota(dsu.begin(), dsu.end(), 0);
        auto find = [&](int x) {
            while (dsu[at(x)] != x) x = dsu[at(x)] = dsu[at(dsu[at(x)])];
            return x;
        };
        for (std::size_t e = 0; e < n1; ++e) {
            if (!(mask >> (n0 + e) & 1)) continue;
            const int a = find(cx.one_cells[e].u), b = find(cx.one_cells[e].v);
            if (a != b) dsu[at(std::max(a, b))] = std::min(a, b);
        }
        std::vector<int> piece_of_comp(n0, -1);
        bool connected = true;
        for (std::size_t v = 0; v < n0 && connected; ++v) {
            if (!(mask >> v & 1)) continue;
            int& piece = piece_of_comp[at(comp[v])];
            const int r = find(static_cast<int>(v));
            if (piece == -1) piece = r;
            connected = piece == r;
        }
        if (!connected) continue;
        Subcomplex s;
        for (std::size_t v = 0; v < n0; ++v) if (mask >> v & 1) s.cells0.push_back(static_cast<int>(v));
        for (std::size_t e = 0; e < n1; ++e) if (mask >> (n0 + e) & 1) s.cells1.push_back(static_cast<int>(e));
        for (std::size_t f = 0; f < cx.two_cells.size(); ++f) {
            if (mask >> (n0 + n1 + f) & 1) s.cells2.push_back(static_cast<int>(f));
        }
        if (!found || better_than(s, obj, best, best_obj)) {
            best = std::move(s);
            best_obj = obj;
            found = true;
        }
    }
    return finalize_subcomplex(cx, pa, std::move(best));
}

SubcomplexStats subcomplex_stats(const Subcomplex& s) {
    return {s.cells0.size(), s.cells1.size(), s.cells2.size(), s.prize, s.cost};
}

std::string subcomplex_to_json(const Subcomplex& s, int indent) {
    json provenance = json::array();
    for (const auto& p : s.provenance) {
        json row = {{"dim", p.dim}, {"id", p.cell}, {"prize", p.prize}};
        if (p.rank >= 0) {
            row["rank"] = p.rank;
            row["similarity"] = p.similarity;
        } else {
            row["rank"] = nullptr;
            row["similarity"] = nullptr;
        }
        provenance.push_back(std::move(row));
    }
    json certificates = json::array();
    for (const auto& c : s.certificates) {
        certificates.push_back({{"component", c.component}, {"root", c.root}, {"tree_edges", c.tree_edges}});
    }
    json doc = {
        {"cells", {{"0", s.cells0}, {"1", s.cells1}, {"2", s.cells2}}},
        {"prize", s.prize},
        {"cost", s.cost},
        {"degenerate", s.degenerate},
        {"certificates", std::move(certificates)},
        {"provenance", std::move(provenance)},
    };
    return doc.dump(indent);
}

}  // namespace toporag

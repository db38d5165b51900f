#include "toporag/lifting.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

#include "toporag/errors.hpp"
#include "toporag/rng.hpp"

namespace toporag {

using nlohmann::json;

SpanningTreePolicy SpanningTreePolicy::parse(const std::string& name, std::uint64_t seed) {
    if (name == "dfs") return dfs();
    if (name == "bfs") return bfs();
    if (name == "random") return random(seed);
    throw ValidationError("unknown spanning-tree policy '" + name + "'");
}

std::string to_string(const SpanningTreePolicy& policy) {
    switch (policy.kind) {
        case TreePolicyKind::kDfs: return "dfs";
        case TreePolicyKind::kBfs: return "bfs";
        case TreePolicyKind::kRandom: return "random(" + std::to_string(policy.seed) + ")";
    }
    return "dfs";
}

std::vector<int> SpanningForest::tree_edges() const {
    std::vector<int> out;
    for (std::size_t e = 0; e < in_tree.size(); ++e) {
        if (in_tree[e]) out.push_back(static_cast<int>(e));
    }
    return out;
}

std::size_t EmbeddingTable::dim() const noexcept {
    if (!z0.empty()) return z0.front().dim();
    if (!z1.empty()) return z1.front().dim();
    if (!z2.empty()) return z2.front().dim();
    return 0;
}

std::size_t CellComplex::num_cells(int dim) const {
    switch (dim) {
        case 0: return static_cast<std::size_t>(num_vertices);
        case 1: return one_cells.size();
        case 2: return two_cells.size();
        default: throw ValidationError("cell dimension must be 0, 1 or 2");
    }
}

std::vector<int> CellComplex::boundary(int dim, int id) const {
    switch (dim) {
        case 0:
            return {};
        case 1: {
            const auto& c = one_cells.at(static_cast<std::size_t>(id));
            if (c.is_self_loop()) return {c.u};
            return {c.u, c.v};
        }
        case 2:
            return two_cells.at(static_cast<std::size_t>(id)).cycle.edges;
        default:
            throw ValidationError("cell dimension must be 0, 1 or 2");
    }
}

std::vector<int> CellComplex::coboundary(int dim, int id) const {
    switch (dim) {
        case 0: return vertex_cofaces.at(static_cast<std::size_t>(id));
        case 1: return edge_cofaces.at(static_cast<std::size_t>(id));
        case 2: return {};
        default: throw ValidationError("cell dimension must be 0, 1 or 2");
    }
}

std::vector<UpperNeighbor> CellComplex::upper_adjacent(int dim, int id) const {
    std::vector<UpperNeighbor> out;
    if (dim == 0) {
        for (int e : vertex_cofaces.at(static_cast<std::size_t>(id))) {
            const auto& c = one_cells[static_cast<std::size_t>(e)];
            if (c.is_self_loop()) continue;
            out.push_back({c.u == id ? c.v : c.u, e});
        }
    } else if (dim == 1) {
        for (int f : edge_cofaces.at(static_cast<std::size_t>(id))) {
            for (int other : two_cells[static_cast<std::size_t>(f)].cycle.edges) {
                if (other != id) out.push_back({other, f});
            }
        }
    } else if (dim != 2) {
        throw ValidationError("cell dimension must be 0, 1 or 2");
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<OneCell> edges_of(const TextualGraph& graph) {
    std::vector<OneCell> out;
    out.reserve(graph.edges.size());
    for (const auto& e : graph.edges) out.push_back({e.src, e.dst});
    return out;
}

CellComplex skeleton_from(int num_vertices, std::vector<OneCell> edges) {
    CellComplex cx;
    cx.num_vertices = num_vertices;
    cx.one_cells = std::move(edges);
    cx.vertex_cofaces.assign(static_cast<std::size_t>(num_vertices), {});
    cx.edge_cofaces.assign(cx.one_cells.size(), {});
    for (std::size_t e = 0; e < cx.one_cells.size(); ++e) {
        const auto& c = cx.one_cells[e];
        if (c.u < 0 || c.u >= num_vertices || c.v < 0 || c.v >= num_vertices) {
            throw ValidationError("1-cell " + std::to_string(e) + " has a dangling endpoint");
        }
        cx.vertex_cofaces[static_cast<std::size_t>(c.u)].push_back(static_cast<int>(e));
        if (!c.is_self_loop()) cx.vertex_cofaces[static_cast<std::size_t>(c.v)].push_back(static_cast<int>(e));
    }
    return cx;
}

struct Adjacency {
    // (edge, neighbour) per vertex, ascending edge id, self-loops dropped
    std::vector<std::vector<std::pair<int, int>>> out;
};

Adjacency adjacency_of(int n, std::span<const OneCell> edges) {
    Adjacency adj;
    adj.out.assign(static_cast<std::size_t>(n), {});
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& c = edges[e];
        if (c.is_self_loop()) continue;
        adj.out[static_cast<std::size_t>(c.u)].emplace_back(static_cast<int>(e), c.v);
        adj.out[static_cast<std::size_t>(c.v)].emplace_back(static_cast<int>(e), c.u);
    }
    return adj;
}

SpanningForest empty_forest(int n, std::size_t m) {
    SpanningForest f;
    f.in_tree.assign(m, false);
    f.parent.assign(static_cast<std::size_t>(n), -1);
    f.parent_edge.assign(static_cast<std::size_t>(n), -1);
    f.depth.assign(static_cast<std::size_t>(n), 0);
    f.component.assign(static_cast<std::size_t>(n), -1);
    return f;
}

// Orients an already chosen edge set by BFS from the smallest vertex of each
// component.
SpanningForest orient_forest(int n, std::span<const OneCell> edges, std::vector<bool> in_tree) {
    SpanningForest f = empty_forest(n, edges.size());
    f.in_tree = std::move(in_tree);
    const auto adj = adjacency_of(n, edges);
    for (int root = 0; root < n; ++root) {
        if (f.component[static_cast<std::size_t>(root)] != -1) continue;
        const int comp = static_cast<int>(f.roots.size());
        f.roots.push_back(root);
        f.component[static_cast<std::size_t>(root)] = comp;
        std::queue<int> q;
        q.push(root);
        while (!q.empty()) {
            const int x = q.front();
            q.pop();
            for (auto [e, y] : adj.out[static_cast<std::size_t>(x)]) {
                if (!f.in_tree[static_cast<std::size_t>(e)] || f.component[static_cast<std::size_t>(y)] != -1) {
                    continue;
                }
                f.component[static_cast<std::size_t>(y)] = comp;
                f.parent[static_cast<std::size_t>(y)] = x;
                f.parent_edge[static_cast<std::size_t>(y)] = e;
                f.depth[static_cast<std::size_t>(y)] = f.depth[static_cast<std::size_t>(x)] + 1;
                q.push(y);
            }
        }
    }
    return f;
}

SpanningForest dfs_forest(int n, std::span<const OneCell> edges) {
    SpanningForest f = empty_forest(n, edges.size());
    const auto adj = adjacency_of(n, edges);
    std::vector<std::pair<int, std::size_t>> stack;  // (vertex, next adjacency slot)
    for (int root = 0; root < n; ++root) {
        if (f.component[static_cast<std::size_t>(root)] != -1) continue;
        const int comp = static_cast<int>(f.roots.size());
        f.roots.push_back(root);
        f.component[static_cast<std::size_t>(root)] = comp;
        stack.emplace_back(root, 0);
        while (!stack.empty()) {
            auto& [x, slot] = stack.back();
            const auto& nbrs = adj.out[static_cast<std::size_t>(x)];
            if (slot == nbrs.size()) {
                stack.pop_back();
                continue;
            }
            const auto [e, y] = nbrs[slot++];
            if (f.component[static_cast<std::size_t>(y)] != -1) continue;
            f.component[static_cast<std::size_t>(y)] = comp;
            f.parent[static_cast<std::size_t>(y)] = x;
            f.parent_edge[static_cast<std::size_t>(y)] = e;
            f.depth[static_cast<std::size_t>(y)] = f.depth[static_cast<std::size_t>(x)] + 1;
            f.in_tree[static_cast<std::size_t>(e)] = true;
            stack.emplace_back(y, 0);
        }
    }
    return f;
}

SpanningForest bfs_forest(int n, std::span<const OneCell> edges) {
    SpanningForest f = empty_forest(n, edges.size());
    const auto adj = adjacency_of(n, edges);
    for (int root = 0; root < n; ++root) {
        if (f.component[static_cast<std::size_t>(root)] != -1) continue;
        const int comp = static_cast<int>(f.roots.size());
        f.roots.push_back(root);
        f.component[static_cast<std::size_t>(root)] = comp;
        std::queue<int> q;
        q.push(root);
        while (!q.empty()) {
            const int x = q.front();
            q.pop();
            for (auto [e, y] : adj.out[static_cast<std::size_t>(x)]) {
                if (f.component[static_cast<std::size_t>(y)] != -1) continue;
                f.component[static_cast<std::size_t>(y)] = comp;
                f.parent[static_cast<std::size_t>(y)] = x;
                f.parent_edge[static_cast<std::size_t>(y)] = e;
                f.depth[static_cast<std::size_t>(y)] = f.depth[static_cast<std::size_t>(x)] + 1;
                f.in_tree[static_cast<std::size_t>(e)] = true;
                q.push(y);
            }
        }
    }
    return f;
}

class DisjointSets {
public:
    explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[static_cast<std::size_t>(x)] != x) {
            auto& p = parent_[static_cast<std::size_t>(x)];
            p = parent_[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        return true;
    }

private:
    std::vector<int> parent_;
};

// Kruskal over a seeded shuffle of the edges.
SpanningForest random_forest(int n, std::span<const OneCell> edges, std::uint64_t seed) {
    std::vector<int> order;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!edges[e].is_self_loop()) order.push_back(static_cast<int>(e));
    }
    SplitMix64 rng(seed);
    rng.shuffle(order);
    DisjointSets sets(n);
    std::vector<bool> in_tree(edges.size(), false);
    for (int e : order) {
        const auto& c = edges[static_cast<std::size_t>(e)];
        if (sets.unite(c.u, c.v)) in_tree[static_cast<std::size_t>(e)] = true;
    }
    return orient_forest(n, edges, std::move(in_tree));
}

SpanningForest forest_for(int n, std::span<const OneCell> edges, const SpanningTreePolicy& policy) {
    switch (policy.kind) {
        case TreePolicyKind::kDfs: return dfs_forest(n, edges);
        case TreePolicyKind::kBfs: return bfs_forest(n, edges);
        case TreePolicyKind::kRandom: return random_forest(n, edges, policy.seed);
    }
    return dfs_forest(n, edges);
}

Cycle fundamental_cycle(std::span<const OneCell> edges, int edge, const SpanningForest& forest) {
    if (edge < 0 || static_cast<std::size_t>(edge) >= edges.size()) {
        throw ValidationError("edge " + std::to_string(edge) + " out of range");
    }
    const auto& c = edges[static_cast<std::size_t>(edge)];
    if (c.is_self_loop()) throw SelfLoopExcluded("edge " + std::to_string(edge) + " is a self-loop");
    if (forest.in_tree.at(static_cast<std::size_t>(edge))) {
        throw ValidationError("edge " + std::to_string(edge) + " is a tree edge");
    }
    int a = std::min(c.u, c.v);
    int b = std::max(c.u, c.v);
    std::vector<int> a_vertices{a}, a_edges, b_vertices{b}, b_edges;
    auto depth = [&](int x) { return forest.depth[static_cast<std::size_t>(x)]; };
    auto climb = [&](int& x, std::vector<int>& vs, std::vector<int>& es) {
        es.push_back(forest.parent_edge[static_cast<std::size_t>(x)]);
        x = forest.parent[static_cast<std::size_t>(x)];
        vs.push_back(x);
    };
    while (depth(a) > depth(b)) climb(a, a_vertices, a_edges);
    while (depth(b) > depth(a)) climb(b, b_vertices, b_edges);
    while (a != b) {
        if (a < 0 || b < 0) throw ValidationError("edge endpoints lie in different tree components");
        climb(a, a_vertices, a_edges);
        climb(b, b_vertices, b_edges);
    }
    Cycle cyc;
    cyc.vertices = std::move(a_vertices);  // lower endpoint .. lca
    cyc.vertices.insert(cyc.vertices.end(), b_vertices.rbegin() + 1, b_vertices.rend());
    cyc.vertices.push_back(cyc.vertices.front());
    cyc.edges = std::move(a_edges);
    cyc.edges.insert(cyc.edges.end(), b_edges.rbegin(), b_edges.rend());
    cyc.edges.push_back(edge);
    return cyc;
}

}  // namespace

// ---------------------------------------------------------------------------

CellComplex build_skeleton_structure(const TextualGraph& graph) {
    validate_graph(graph);
    return skeleton_from(static_cast<int>(graph.num_nodes()), edges_of(graph));
}

CellComplex build_skeleton(const TextualGraph& graph, std::vector<EmbeddingVector> node_vecs,
                           std::vector<EmbeddingVector> edge_vecs, std::string fingerprint) {
    if (node_vecs.size() != graph.num_nodes() || edge_vecs.size() != graph.num_edges()) {
        throw DimensionMismatch("need one embedding per node and per edge (got " +
                                std::to_string(node_vecs.size()) + " and " +
                                std::to_string(edge_vecs.size()) + ")");
    }
    const std::size_t dim = !node_vecs.empty() ? node_vecs.front().dim()
                            : !edge_vecs.empty() ? edge_vecs.front().dim()
                                                 : 0;
    for (const auto* vecs : {&node_vecs, &edge_vecs}) {
        for (const auto& v : *vecs) {
            if (v.dim() != dim || dim == 0) {
                throw DimensionMismatch("cell embeddings must share one positive dim");
            }
        }
    }
    CellComplex cx = build_skeleton_structure(graph);
    cx.embeddings.z0 = std::move(node_vecs);
    cx.embeddings.z1 = std::move(edge_vecs);
    cx.embeddings.fingerprint = std::move(fingerprint);
    return cx;
}

SpanningForest spanning_tree(const TextualGraph& graph, const SpanningTreePolicy& policy) {
    validate_graph(graph);
    const auto edges = edges_of(graph);
    return forest_for(static_cast<int>(graph.num_nodes()), edges, policy);
}

SpanningForest spanning_tree(const CellComplex& complex, const SpanningTreePolicy& policy) {
    return forest_for(complex.num_vertices, complex.one_cells, policy);
}

Cycle find_fundamental_cycle(const CellComplex& complex, int edge, const SpanningForest& forest) {
    return fundamental_cycle(complex.one_cells, edge, forest);
}

Cycle find_fundamental_cycle(const TextualGraph& graph, int edge, const SpanningForest& forest) {
    const auto edges = edges_of(graph);
    return fundamental_cycle(edges, edge, forest);
}

CycleAggregation parse_cycle_aggregation(const std::string& name) {
    if (name == "mean") return CycleAggregation::kMean;
    if (name == "max") return CycleAggregation::kMax;
    throw ValidationError("unknown cycle aggregation '" + name + "'");
}

EmbeddingVector aggregate_cycle_embedding(const Cycle& cycle, std::span<const EmbeddingVector> z0,
                                          std::span<const EmbeddingVector> z1, CycleAggregation mode) {
    std::vector<const EmbeddingVector*> members;
    for (int v : cycle.distinct_vertices()) members.push_back(&z0[static_cast<std::size_t>(v)]);
    for (int e : cycle.edges) members.push_back(&z1[static_cast<std::size_t>(e)]);
    if (members.empty()) throw DimensionMismatch("cannot aggregate an empty cycle");
    const std::size_t dim = members.front()->dim();
    for (const auto* m : members) {
        if (m->dim() != dim) throw DimensionMismatch("cycle cells have different embedding dims");
    }
    std::vector<float> out(dim);
    if (mode == CycleAggregation::kMean) {
        std::vector<double> acc(dim, 0.0);
        for (const auto* m : members) {
            const auto vals = m->values();
            for (std::size_t i = 0; i < dim; ++i) acc[i] += vals[i];
        }
        for (std::size_t i = 0; i < dim; ++i) {
            out[i] = static_cast<float>(acc[i] / static_cast<double>(members.size()));
        }
    } else {
        const auto first = members.front()->values();
        std::copy(first.begin(), first.end(), out.begin());
        for (const auto* m : members) {
            const auto vals = m->values();
            for (std::size_t i = 0; i < dim; ++i) out[i] = std::max(out[i], vals[i]);
        }
    }
    return EmbeddingVector(std::move(out));
}

CellComplex attach_two_cells(CellComplex cx, const SpanningForest& forest, CycleAggregation mode) {
    if (forest.in_tree.size() != cx.one_cells.size() ||
        forest.parent.size() != static_cast<std::size_t>(cx.num_vertices)) {
        throw ValidationError("spanning forest does not match the skeleton");
    }
    cx.two_cells.clear();
    cx.excluded_self_loops.clear();
    cx.edge_cofaces.assign(cx.one_cells.size(), {});
    cx.embeddings.z2.clear();
    const bool embed = !cx.embeddings.z0.empty() || !cx.embeddings.z1.empty();

    for (std::size_t e = 0; e < cx.one_cells.size(); ++e) {
        if (forest.in_tree[e]) continue;
        if (cx.one_cells[e].is_self_loop()) {
            cx.excluded_self_loops.push_back(static_cast<int>(e));
            cx.warnings.push_back("self-loop 1-cell " + std::to_string(e) + " on 0-cell " +
                                  std::to_string(cx.one_cells[e].u) + " gets no 2-cell");
            continue;
        }
        TwoCell face{static_cast<int>(e), fundamental_cycle(cx.one_cells, static_cast<int>(e), forest)};
        const int id = static_cast<int>(cx.two_cells.size());
        for (int edge : face.cycle.edges) cx.edge_cofaces[static_cast<std::size_t>(edge)].push_back(id);
        if (embed) {
            cx.embeddings.z2.push_back(
                aggregate_cycle_embedding(face.cycle, cx.embeddings.z0, cx.embeddings.z1, mode));
        }
        cx.two_cells.push_back(std::move(face));
    }
    cx.forest = forest;
    return cx;
}

CellComplex lift(const TextualGraph& graph, std::vector<EmbeddingVector> node_vecs,
                 std::vector<EmbeddingVector> edge_vecs, const SpanningTreePolicy& policy,
                 CycleAggregation mode, std::string fingerprint) {
    auto skeleton = build_skeleton(graph, std::move(node_vecs), std::move(edge_vecs), std::move(fingerprint));
    const auto forest = spanning_tree(skeleton, policy);
    return attach_two_cells(std::move(skeleton), forest, mode);
}

CellComplex lift_structure(const TextualGraph& graph, const SpanningTreePolicy& policy) {
    auto skeleton = build_skeleton_structure(graph);
    const auto forest = spanning_tree(skeleton, policy);
    return attach_two_cells(std::move(skeleton), forest);
}

int count_components(int num_vertices, std::span<const OneCell> edges) {
    DisjointSets sets(num_vertices);
    int components = num_vertices;
    for (const auto& c : edges) {
        if (sets.unite(c.u, c.v)) --components;
    }
    return components;
}

namespace {

int betti1_of(int n, std::span<const OneCell> edges) {
    const auto loops = std::count_if(edges.begin(), edges.end(), [](const OneCell& c) { return c.is_self_loop(); });
    return static_cast<int>(edges.size()) - static_cast<int>(loops) - n + count_components(n, edges);
}

}  // namespace

int betti1(const TextualGraph& graph) {
    const auto edges = edges_of(graph);
    return betti1_of(static_cast<int>(graph.num_nodes()), edges);
}

int betti1(const CellComplex& complex) { return betti1_of(complex.num_vertices, complex.one_cells); }

CycleBasisReport verify_cycle_basis(const CellComplex& complex) {
    const std::size_t words = (complex.one_cells.size() + 63) / 64;
    std::vector<std::vector<std::uint64_t>> rows;
    rows.reserve(complex.two_cells.size());
    for (const auto& face : complex.two_cells) {
        std::vector<std::uint64_t> row(words, 0);
        for (int e : face.cycle.edges) row[static_cast<std::size_t>(e) / 64] ^= 1ULL << (e % 64);
        rows.push_back(std::move(row));
    }
    int rank = 0;
    for (std::size_t col = 0; col < complex.one_cells.size() && static_cast<std::size_t>(rank) < rows.size(); ++col) {
        const std::size_t w = col / 64;
        const std::uint64_t bit = 1ULL << (col % 64);
        std::size_t pivot = static_cast<std::size_t>(rank);
        while (pivot < rows.size() && !(rows[pivot][w] & bit)) ++pivot;
        if (pivot == rows.size()) continue;
        std::swap(rows[pivot], rows[static_cast<std::size_t>(rank)]);
        const auto& p = rows[static_cast<std::size_t>(rank)];
        for (std::size_t r = static_cast<std::size_t>(rank) + 1; r < rows.size(); ++r) {
            if (rows[r][w] & bit) {
                for (std::size_t k = w; k < words; ++k) rows[r][k] ^= p[k];
            }
        }
        ++rank;
    }
    CycleBasisReport report;
    report.rank_gf2 = rank;
    report.num_two_cells = static_cast<int>(complex.two_cells.size());
    report.betti1 = betti1(complex);
    report.independent = rank == report.num_two_cells;
    report.spans = rank == report.betti1;
    return report;
}

std::vector<std::string> check_complex(const CellComplex& cx) {
    std::vector<std::string> bad;
    const auto n = static_cast<std::size_t>(cx.num_vertices);
    if (cx.vertex_cofaces.size() != n) bad.push_back("vertex coface index has wrong size");
    if (cx.edge_cofaces.size() != cx.one_cells.size()) bad.push_back("edge coface index has wrong size");
    if (!bad.empty()) return bad;

    // boundary -> coboundary
    for (std::size_t e = 0; e < cx.one_cells.size(); ++e) {
        for (int v : cx.boundary(1, static_cast<int>(e))) {
            const auto& cof = cx.vertex_cofaces[static_cast<std::size_t>(v)];
            if (std::count(cof.begin(), cof.end(), static_cast<int>(e)) != 1) {
                bad.push_back("0-cell " + std::to_string(v) + " misses coface 1-cell " + std::to_string(e));
            }
        }
    }
    for (std::size_t f = 0; f < cx.two_cells.size(); ++f) {
        for (int e : cx.two_cells[f].cycle.edges) {
            if (e < 0 || static_cast<std::size_t>(e) >= cx.one_cells.size()) {
                bad.push_back("2-cell " + std::to_string(f) + " references missing 1-cell");
                continue;
            }
            const auto& cof = cx.edge_cofaces[static_cast<std::size_t>(e)];
            if (std::count(cof.begin(), cof.end(), static_cast<int>(f)) != 1) {
                bad.push_back("1-cell " + std::to_string(e) + " misses coface 2-cell " + std::to_string(f));
            }
        }
    }
    // coboundary -> boundary
    for (std::size_t v = 0; v < n; ++v) {
        for (int e : cx.vertex_cofaces[v]) {
            const auto b = cx.boundary(1, e);
            if (std::find(b.begin(), b.end(), static_cast<int>(v)) == b.end()) {
                bad.push_back("coface 1-cell " + std::to_string(e) + " of 0-cell " + std::to_string(v) +
                              " does not bound it");
            }
        }
    }
    for (std::size_t e = 0; e < cx.one_cells.size(); ++e) {
        for (int f : cx.edge_cofaces[e]) {
            const auto& es = cx.two_cells.at(static_cast<std::size_t>(f)).cycle.edges;
            if (std::find(es.begin(), es.end(), static_cast<int>(e)) == es.end()) {
                bad.push_back("coface 2-cell " + std::to_string(f) + " of 1-cell " + std::to_string(e) +
                              " does not contain it");
            }
        }
    }
    // closed simple walks
    for (std::size_t f = 0; f < cx.two_cells.size(); ++f) {
        const auto& c = cx.two_cells[f].cycle;
        const std::string tag = "2-cell " + std::to_string(f);
        if (c.vertices.size() != c.edges.size() + 1 || c.edges.size() < 2 || c.vertices.front() != c.vertices.back()) {
            bad.push_back(tag + " is not a closed walk");
            continue;
        }
        for (std::size_t i = 0; i < c.edges.size(); ++i) {
            const auto& oc = cx.one_cells[static_cast<std::size_t>(c.edges[i])];
            const int a = c.vertices[i], b = c.vertices[i + 1];
            if (!((oc.u == a && oc.v == b) || (oc.u == b && oc.v == a))) {
                bad.push_back(tag + " step " + std::to_string(i) + " does not follow its edge");
            }
        }
        std::set<int> seen(c.vertices.begin(), c.vertices.end() - 1);
        std::set<int> seen_edges(c.edges.begin(), c.edges.end());
        if (seen.size() != c.vertices.size() - 1 || seen_edges.size() != c.edges.size()) {
            bad.push_back(tag + " is not simple");
        }
    }
    // one face per non-tree, non-loop edge
    if (cx.forest.in_tree.size() == cx.one_cells.size()) {
        std::vector<int> generated(cx.one_cells.size(), 0);
        for (const auto& f : cx.two_cells) ++generated[static_cast<std::size_t>(f.generator_edge)];
        for (std::size_t e = 0; e < cx.one_cells.size(); ++e) {
            const bool needs = !cx.forest.in_tree[e] && !cx.one_cells[e].is_self_loop();
            if (needs && (generated[e] != 1 || cx.edge_cofaces[e].size() != 1)) {
                bad.push_back("non-tree 1-cell " + std::to_string(e) + " is not on exactly one 2-cell");
            }
            if (!needs && generated[e] != 0) {
                bad.push_back("1-cell " + std::to_string(e) + " generates a 2-cell but should not");
            }
        }
    }
    return bad;
}

std::string complex_to_json(const CellComplex& cx, const ComplexDumpInfo& info) {
    json zero = json::array();
    for (int v = 0; v < cx.num_vertices; ++v) zero.push_back(v);
    json one = json::array();
    for (std::size_t e = 0; e < cx.one_cells.size(); ++e) {
        one.push_back({{"id", e}, {"boundary", cx.boundary(1, static_cast<int>(e))}});
    }
    json two = json::array();
    for (std::size_t f = 0; f < cx.two_cells.size(); ++f) {
        const auto& face = cx.two_cells[f];
        two.push_back({{"id", f},
                       {"generator", face.generator_edge},
                       {"vertices", face.cycle.vertices},
                       {"boundary", face.cycle.edges}});
    }
    json doc = {
        {"cells", {{"0", std::move(zero)}, {"1", std::move(one)}, {"2", std::move(two)}}},
        {"tree_edges", cx.forest.tree_edges()},
        {"components", cx.forest.num_components()},
        {"excluded_self_loops", cx.excluded_self_loops},
        {"policy", info.policy},
        {"embedding",
         {{"cache", info.embedding_cache},
          {"fingerprint", cx.embeddings.fingerprint},
          {"dim", cx.embeddings.dim()}}},
        {"warnings", cx.warnings},
    };
    return doc.dump(1) + "\n";
}

CellComplex complex_from_json(const std::string& text) {
    try {
        const auto doc = json::parse(text);
        const auto& cells = doc.at("cells");
        const int n = static_cast<int>(cells.at("0").size());
        std::vector<OneCell> edges;
        for (const auto& c : cells.at("1")) {
            const auto b = c.at("boundary").get<std::vector<int>>();
            if (b.empty() || b.size() > 2) throw ParseError("1-cell boundary must have 1 or 2 entries");
            edges.push_back({b.front(), b.back()});
        }
        CellComplex cx = skeleton_from(n, edges);
        std::vector<bool> in_tree(edges.size(), false);
        for (int e : doc.at("tree_edges").get<std::vector<int>>()) in_tree.at(static_cast<std::size_t>(e)) = true;
        cx.forest = orient_forest(n, cx.one_cells, std::move(in_tree));
        for (const auto& c : cells.at("2")) {
            TwoCell face;
            face.generator_edge = c.at("generator").get<int>();
            face.cycle.vertices = c.at("vertices").get<std::vector<int>>();
            face.cycle.edges = c.at("boundary").get<std::vector<int>>();
            const int id = static_cast<int>(cx.two_cells.size());
            for (int e : face.cycle.edges) cx.edge_cofaces.at(static_cast<std::size_t>(e)).push_back(id);
            cx.two_cells.push_back(std::move(face));
        }
        cx.excluded_self_loops = doc.value("excluded_self_loops", std::vector<int>{});
        cx.warnings = doc.value("warnings", std::vector<std::string>{});
        return cx;
    } catch (const json::exception& e) {
        throw ParseError(std::string("complex dump: ") + e.what());
    } catch (const std::out_of_range& e) {
        throw ParseError(std::string("complex dump: ") + e.what());
    }
}

}  // namespace toporag

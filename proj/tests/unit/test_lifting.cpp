#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>

#include "support.hpp"
#include "toporag/errors.hpp"
#include "toporag/lifting.hpp"

using namespace toporag;

namespace {

// Rank over GF(2) by elimination on dense boolean rows.
int oracle_rank(std::vector<std::vector<bool>> rows) {
    int rank = 0;
    const std::size_t cols = rows.empty() ? 0 : rows[0].size();
    for (std::size_t c = 0; c < cols; ++c) {
        std::size_t pivot = static_cast<std::size_t>(rank);
        while (pivot < rows.size() && !rows[pivot][c]) ++pivot;
        if (pivot == rows.size()) continue;
        std::swap(rows[pivot], rows[static_cast<std::size_t>(rank)]);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r != static_cast<std::size_t>(rank) && rows[r][c]) {
                for (std::size_t k = 0; k < cols; ++k) rows[r][k] = rows[r][k] != rows[static_cast<std::size_t>(rank)][k];
            }
        }
        ++rank;
    }
    return rank;
}

int oracle_components(const TextualGraph& g) {
    std::vector<int> parent(g.num_nodes());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    int comps = static_cast<int>(g.num_nodes());
    for (const auto& e : g.edges) {
        const int a = find(e.src), b = find(e.dst);
        if (a != b) {
            parent[a] = b;
            --comps;
        }
    }
    return comps;
}

std::vector<std::vector<bool>> incidence_rows(const CellComplex& cx) {
    std::vector<std::vector<bool>> rows;
    for (const auto& f : cx.two_cells) {
        std::vector<bool> row(cx.one_cells.size(), false);
        for (int e : f.cycle.edges) row[e] = !row[e];
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

TEST_SUITE("lifting") {

TEST_CASE("triangle lifts to one 2-cell") {
    const auto g = load_graph(testing::fixture("triangle.json"));
    const auto cx = lift_structure(g, SpanningTreePolicy::dfs());
    CHECK(cx.num_cells(0) == 3);
    CHECK(cx.num_cells(1) == 3);
    REQUIRE(cx.num_cells(2) == 1);
    // edges: 0=(0,1) 1=(1,2) 2=(0,2); the DFS tree keeps (0,1) and (1,2)
    const auto& cyc = cx.two_cells[0].cycle;
    CHECK(cx.two_cells[0].generator_edge == 2);
    CHECK(cyc.vertices == std::vector<int>{0, 1, 2, 0});
    CHECK(cyc.edges == std::vector<int>{0, 1, 2});
    CHECK(betti1(cx) == 1);
    CHECK(verify_cycle_basis(cx).ok());
    CHECK(check_complex(cx).empty());
}

TEST_CASE("bfs tree on the triangle closes through the far edge") {
    const auto g = load_graph(testing::fixture("triangle.json"));
    const auto cx = lift_structure(g, SpanningTreePolicy::bfs());
    REQUIRE(cx.num_cells(2) == 1);
    CHECK(cx.two_cells[0].generator_edge == 1);
    CHECK(cx.two_cells[0].cycle.vertices == std::vector<int>{1, 0, 2, 1});
}

TEST_CASE("tree has no 2-cells and the four-cycle has one") {
    CHECK(lift_structure(load_graph(testing::fixture("tree.json"))).num_cells(2) == 0);
    const auto room = lift_structure(load_graph(testing::fixture("loop_room")));
    REQUIRE(room.num_cells(2) == 1);
    CHECK(room.two_cells[0].cycle.length() == 4);
    CHECK(room.boundary(2, 0).size() == 4);
}

TEST_CASE("self-loops are excluded with a warning; parallel edges give 2-gons") {
    const auto g = make_graph({{0, "a"}, {1, "b"}}, {{0, 0, "loop"}, {0, 1, "x"}, {1, 0, "y"}});
    const auto cx = lift_structure(g);
    CHECK(cx.excluded_self_loops == std::vector<int>{0});
    CHECK(cx.warnings.size() == 1);
    REQUIRE(cx.num_cells(2) == 1);
    CHECK(cx.two_cells[0].cycle.length() == 2);
    CHECK(betti1(g) == 1);
    CHECK(verify_cycle_basis(cx).ok());
    CHECK(cx.boundary(1, 0) == std::vector<int>{0});
    const auto forest = spanning_tree(g, SpanningTreePolicy::dfs());
    CHECK_THROWS_AS(find_fundamental_cycle(g, 0, forest), SelfLoopExcluded);
    CHECK_THROWS_AS(find_fundamental_cycle(g, forest.tree_edges().front(), forest), ValidationError);
}

TEST_CASE("upper adjacency on the filled triangle") {
    const auto cx = lift_structure(load_graph(testing::fixture("triangle.json")));
    for (int e = 0; e < 3; ++e) CHECK(cx.upper_adjacent(1, e).size() == 2);
    for (int v = 0; v < 3; ++v) CHECK(cx.upper_adjacent(0, v).size() == 2);
    CHECK(cx.upper_adjacent(2, 0).empty());
    CHECK(cx.coboundary(1, 0) == std::vector<int>{0});
}

TEST_CASE("random graphs: counts, rank and structure against independent oracles") {
    SplitMix64 rng(2024);
    for (int t = 0; t < 60; ++t) {
        const int n = 1 + static_cast<int>(rng.below(40));
        const int m = static_cast<int>(rng.below(static_cast<std::uint64_t>(3 * n + 1)));
        const auto g = testing::random_graph(rng, {.nodes = n, .edges = m, .connected = rng.below(2) == 0,
                                                   .self_loops = rng.below(3) == 0, .parallel = rng.below(3) == 0});
        int loops = 0;
        for (const auto& e : g.edges) loops += e.is_self_loop();
        const int expected = static_cast<int>(g.num_edges()) - loops - n + oracle_components(g);
        for (const auto& policy : {SpanningTreePolicy::dfs(), SpanningTreePolicy::bfs(), SpanningTreePolicy::random(t)}) {
            const auto cx = lift_structure(g, policy);
            CHECK(static_cast<int>(cx.num_cells(2)) == expected);
            CHECK(oracle_rank(incidence_rows(cx)) == expected);
            CHECK(verify_cycle_basis(cx).rank_gf2 == expected);
            CHECK(check_complex(cx).empty());
            CHECK(cx.forest.tree_edges().size() == static_cast<std::size_t>(n - oracle_components(g)));
            for (const auto& f : cx.two_cells) {
                const auto& c = f.cycle;
                REQUIRE(c.vertices.size() == c.edges.size() + 1);
                CHECK(c.vertices.front() == c.vertices.back());
                for (std::size_t i = 0; i < c.edges.size(); ++i) {
                    const auto& e = g.edges[c.edges[i]];
                    const bool joins = (e.src == c.vertices[i] && e.dst == c.vertices[i + 1]) ||
                                       (e.dst == c.vertices[i] && e.src == c.vertices[i + 1]);
                    CHECK(joins);
                }
                std::vector<int> distinct(c.vertices.begin(), c.vertices.end() - 1);
                std::sort(distinct.begin(), distinct.end());
                CHECK(std::adjacent_find(distinct.begin(), distinct.end()) == distinct.end());
            }
        }
    }
}

TEST_CASE("bfs forest depths equal shortest-path distances") {
    SplitMix64 rng(8);
    for (int t = 0; t < 20; ++t) {
        const auto g = testing::random_graph(rng, {.nodes = 30, .edges = 50});
        const auto forest = spanning_tree(g, SpanningTreePolicy::bfs());
        std::vector<int> dist(g.num_nodes(), -1);
        std::queue<int> q;
        dist[0] = 0;
        q.push(0);
        while (!q.empty()) {
            const int x = q.front();
            q.pop();
            for (const auto& e : g.edges) {
                for (auto [a, b] : {std::pair{e.src, e.dst}, std::pair{e.dst, e.src}}) {
                    if (a == x && dist[b] < 0) {
                        dist[b] = dist[x] + 1;
                        q.push(b);
                    }
                }
            }
        }
        CHECK(forest.depth == dist);
    }
}

TEST_CASE("random policy is seed-determined") {
    SplitMix64 rng(4);
    const auto g = testing::random_graph(rng, {.nodes = 25, .edges = 60});
    CHECK(spanning_tree(g, SpanningTreePolicy::random(9)).in_tree ==
          spanning_tree(g, SpanningTreePolicy::random(9)).in_tree);
}

TEST_CASE("cycle embedding is the mean over distinct vertices and edges") {
    SplitMix64 rng(1);
    const auto g = load_graph(testing::fixture("loop_room"));
    const auto cx = testing::random_lift(rng, g, 6);
    REQUIRE(cx.embeddings.z2.size() == 1);
    const auto& cyc = cx.two_cells[0].cycle;
    for (std::size_t k = 0; k < 6; ++k) {
        double sum = 0;
        for (int v : cyc.distinct_vertices()) sum += cx.embeddings.z0[v][k];
        for (int e : cyc.edges) sum += cx.embeddings.z1[e][k];
        CHECK(cx.embeddings.z2[0][k] == doctest::Approx(sum / 8.0).epsilon(1e-6));
    }
}

TEST_CASE("skeleton rejects mismatched embedding counts") {
    const auto g = load_graph(testing::fixture("triangle.json"));
    std::vector<EmbeddingVector> z0(3, EmbeddingVector({1.0f, 0.0f}));
    std::vector<EmbeddingVector> z1(2, EmbeddingVector({1.0f, 0.0f}));
    CHECK_THROWS(build_skeleton(g, z0, z1));
}

TEST_CASE("complex dump round-trips its structure") {
    SplitMix64 rng(77);
    const auto g = testing::random_graph(rng, {.nodes = 12, .edges = 20, .self_loops = true});
    const auto cx = lift_structure(g, SpanningTreePolicy::bfs());
    const auto text = complex_to_json(cx, {.embedding_cache = "", .policy = "bfs"});
    const auto back = complex_from_json(text);
    CHECK(back.num_cells(2) == cx.num_cells(2));
    CHECK(complex_to_json(back, {.embedding_cache = "", .policy = "bfs"}) == text);
}

}

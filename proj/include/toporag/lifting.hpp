#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "toporag/embedding.hpp"
#include "toporag/graph_io.hpp"

namespace toporag {

enum class TreePolicyKind { kDfs, kBfs, kRandom };

struct SpanningTreePolicy {
    TreePolicyKind kind = TreePolicyKind::kDfs;
    std::uint64_t seed = 0;  // only used by kRandom

    static SpanningTreePolicy dfs() { return {TreePolicyKind::kDfs, 0}; }
    static SpanningTreePolicy bfs() { return {TreePolicyKind::kBfs, 0}; }
    static SpanningTreePolicy random(std::uint64_t seed) { return {TreePolicyKind::kRandom, seed}; }
    // "dfs", "bfs" or "random"
    static SpanningTreePolicy parse(const std::string& name, std::uint64_t seed = 0);
};

std::string to_string(const SpanningTreePolicy& policy);

// A spanning forest rooted at the smallest vertex id of every component.
struct SpanningForest {
    std::vector<bool> in_tree;     // per edge
    std::vector<int> parent;       // per vertex, -1 at roots
    std::vector<int> parent_edge;  // per vertex, -1 at roots
    std::vector<int> depth;        // per vertex
    std::vector<int> component;    // per vertex
    std::vector<int> roots;        // per component

    std::size_t num_components() const noexcept { return roots.size(); }
    std::vector<int> tree_edges() const;  // ascending
};

// Endpoints of a 1-cell. A self-loop has a single boundary vertex.
struct OneCell {
    int u = 0;
    int v = 0;

    bool is_self_loop() const noexcept { return u == v; }
};

// A closed walk: vertices.front() == vertices.back() and edges[i] joins
// vertices[i] and vertices[i + 1].
struct Cycle {
    std::vector<int> vertices;
    std::vector<int> edges;

    std::size_t length() const noexcept { return edges.size(); }
    std::span<const int> distinct_vertices() const noexcept {
        return {vertices.data(), vertices.empty() ? 0 : vertices.size() - 1};
    }
};

struct TwoCell {
    int generator_edge = -1;  // the non-tree edge that closes the cycle
    Cycle cycle;
};

struct EmbeddingTable {
    std::vector<EmbeddingVector> z0;
    std::vector<EmbeddingVector> z1;
    std::vector<EmbeddingVector> z2;
    std::string fingerprint;

    bool empty() const noexcept { return z0.empty() && z1.empty() && z2.empty(); }
    std::size_t dim() const noexcept;
};

// A neighbour reached through a shared coface.
struct UpperNeighbor {
    int cell = -1;
    int coface = -1;

    bool operator==(const UpperNeighbor&) const = default;
};

// Regular 2-dimensional cell complex lifted from a graph. Cells are indexed
// per dimension: 0-cell i is node i, 1-cell j is edge j, 2-cell k is the k-th
// attached face (ordered by generator edge id).
struct CellComplex {
    int num_vertices = 0;
    std::vector<OneCell> one_cells;
    std::vector<TwoCell> two_cells;

    std::vector<std::vector<int>> vertex_cofaces;  // incident 1-cells, ascending
    std::vector<std::vector<int>> edge_cofaces;    // 2-cells on the edge, ascending

    SpanningForest forest;  // empty until attach_two_cells
    std::vector<int> excluded_self_loops;
    std::vector<std::string> warnings;

    EmbeddingTable embeddings;

    std::size_t num_cells(int dim) const;
    std::size_t total_cells() const { return num_cells(0) + num_cells(1) + num_cells(2); }

    // Faces of a cell, in boundary order (2-cells list their edges).
    std::vector<int> boundary(int dim, int id) const;
    std::vector<int> coboundary(int dim, int id) const;
    // Cells of the same dimension sharing a coface, one entry per shared coface.
    std::vector<UpperNeighbor> upper_adjacent(int dim, int id) const;
    // Distinct boundary vertices of a 2-cell.
    std::span<const int> two_cell_vertices(int id) const {
        return two_cells.at(static_cast<std::size_t>(id)).cycle.distinct_vertices();
    }
};

// 1-skeleton with embeddings; one vector per node and per edge, one dim.
CellComplex build_skeleton(const TextualGraph& graph, std::vector<EmbeddingVector> node_vecs,
                           std::vector<EmbeddingVector> edge_vecs, std::string fingerprint = {});
// 1-skeleton without embeddings (structure only).
CellComplex build_skeleton_structure(const TextualGraph& graph);

SpanningForest spanning_tree(const TextualGraph& graph, const SpanningTreePolicy& policy);
SpanningForest spanning_tree(const CellComplex& complex, const SpanningTreePolicy& policy);

// Tree path from the lower endpoint of `edge` to the higher one, closed by
// `edge`. Throws SelfLoopExcluded for self-loops and ValidationError when the
// edge belongs to the tree.
Cycle find_fundamental_cycle(const CellComplex& complex, int edge, const SpanningForest& forest);
Cycle find_fundamental_cycle(const TextualGraph& graph, int edge, const SpanningForest& forest);

enum class CycleAggregation { kMean, kMax };

CycleAggregation parse_cycle_aggregation(const std::string& name);

// Pools the vectors of the cycle's distinct 0-cells and its 1-cells.
EmbeddingVector aggregate_cycle_embedding(const Cycle& cycle, std::span<const EmbeddingVector> z0,
                                          std::span<const EmbeddingVector> z1,
                                          CycleAggregation mode = CycleAggregation::kMean);

// One 2-cell per non-tree edge that is not a self-loop. Self-loops are
// recorded in `excluded_self_loops` with a warning.
CellComplex attach_two_cells(CellComplex skeleton, const SpanningForest& forest,
                             CycleAggregation mode = CycleAggregation::kMean);

// Skeleton, spanning tree and 2-cells in one call.
CellComplex lift(const TextualGraph& graph, std::vector<EmbeddingVector> node_vecs,
                 std::vector<EmbeddingVector> edge_vecs, const SpanningTreePolicy& policy = {},
                 CycleAggregation mode = CycleAggregation::kMean, std::string fingerprint = {});
CellComplex lift_structure(const TextualGraph& graph, const SpanningTreePolicy& policy = {});

// Cyclomatic number summed over components, self-loops excluded.
int betti1(const TextualGraph& graph);
int betti1(const CellComplex& complex);
int count_components(int num_vertices, std::span<const OneCell> edges);

struct CycleBasisReport {
    int rank_gf2 = 0;
    int num_two_cells = 0;
    int betti1 = 0;
    bool independent = false;
    bool spans = false;

    bool ok() const noexcept { return independent && spans; }
};

// Rank over GF(2) of the 2-cell/edge incidence matrix.
CycleBasisReport verify_cycle_basis(const CellComplex& complex);

// Structural invariants (transpose consistency, closed simple cycles, one
// face per non-tree edge). Returns human-readable violations; empty if valid.
std::vector<std::string> check_complex(const CellComplex& complex);

struct ComplexDumpInfo {
    std::string embedding_cache;  // may be empty
    std::string policy;
};

// JSON dump printed by `toporag lift --json`.
std::string complex_to_json(const CellComplex& complex, const ComplexDumpInfo& info = {});
// Rebuilds the structure (no embeddings) from a dump.
CellComplex complex_from_json(const std::string& text);

}  // namespace toporag

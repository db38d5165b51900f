#pragma once

#include <span>
#include <string>
#include <vector>

#include "toporag/embedding.hpp"
#include "toporag/lifting.hpp"

namespace toporag {

EmbeddingVector encode_query(const std::string& question, EmbeddingProvider& provider);

struct RankedCell {
    int cell = -1;
    double similarity = 0.0;

    bool operator==(const RankedCell&) const = default;
};

// Cells of dimension 0 or 1 sorted by descending cosine to `query`, ties by
// ascending id, truncated to min(k, |X^dim|).
std::vector<RankedCell> topk_cells(const CellComplex& complex, const EmbeddingVector& query, int dim, int k);

// How a rank r (0 = most similar) maps to a prize.
//   kFromK:        k - r      (best cell receives k)
//   kFromKMinusOne: k - r - 1 (best cell receives k - 1; 1-indexed reading)
enum class PrizeIndexing { kFromK, kFromKMinusOne };

PrizeIndexing parse_prize_indexing(const std::string& name);
std::string to_string(PrizeIndexing indexing);

struct PrizeParams {
    int k0 = 3;           // prize base for ranked 0-cells
    int k1 = 3;           // prize base for ranked 1-cells
    double c2 = 1.0;      // per-boundary-edge face penalty
    double c_edge = 1.0;  // cost of a selected 1-cell outside the ranked set
    PrizeIndexing indexing = PrizeIndexing::kFromK;
};

struct PrizeAssignment {
    std::vector<double> prize0, prize1, prize2;
    std::vector<double> cost2;  // |boundary edges| * c2
    std::vector<int> rank0, rank1;  // -1 when unranked
    std::vector<RankedCell> ranked0, ranked1;
    PrizeParams params;

    double prize(int dim, int cell) const;
    int rank(int dim, int cell) const;
    // Cost a 1-cell adds to a selection.
    double edge_cost(int edge) const {
        return rank1[static_cast<std::size_t>(edge)] >= 0 ? 0.0 : params.c_edge;
    }
};

// Face prize: boundary prize sum minus |boundary edges| * c2.
double two_cell_prize(double boundary_prize_sum, std::size_t boundary_edges, double c2);

PrizeAssignment assign_prizes(std::span<const RankedCell> ranked0, std::span<const RankedCell> ranked1,
                              const CellComplex& complex, const PrizeParams& params);

// 2-cells with positive prize, descending by prize then ascending id, at
// most k2 of them.
std::vector<int> topk_two_cells(const PrizeAssignment& assignment, const CellComplex& complex, int k2);

struct CellProvenance {
    int dim = 0;
    int cell = -1;
    int rank = -1;            // -1 when the cell was not ranked
    double similarity = 0.0;  // meaningful only when rank >= 0
    double prize = 0.0;
};

// Spanning tree of the selected 1-skeleton inside one graph component.
struct ConnectivityCertificate {
    int component = -1;
    int root = -1;
    std::vector<int> tree_edges;
};

struct Subcomplex {
    std::vector<int> cells0, cells1, cells2;  // ascending ids
    double prize = 0.0;
    double cost = 0.0;
    bool degenerate = false;  // no cell had positive prize
    std::vector<ConnectivityCertificate> certificates;
    std::vector<CellProvenance> provenance;

    double objective() const noexcept { return prize - cost; }
    std::size_t size() const noexcept { return cells0.size() + cells1.size() + cells2.size(); }
    bool empty() const noexcept { return size() == 0; }
    bool same_cells(const Subcomplex& other) const {
        return cells0 == other.cells0 && cells1 == other.cells1 && cells2 == other.cells2;
    }
};

// Adds every missing boundary cell (2-cell edges and vertices, 1-cell
// endpoints). Idempotent; leaves prize and cost untouched.
Subcomplex enforce_boundary_consistency(const CellComplex& complex, Subcomplex selection);

struct ObjectiveValue {
    double prize = 0.0;
    double cost = 0.0;
};

// prize: sum of cell prizes. cost: c_edge per selected unranked 1-cell plus
// the cost of every selected 2-cell.
ObjectiveValue evaluate_objective(const CellComplex& complex, const PrizeAssignment& assignment,
                                  const Subcomplex& selection);

// Empty when the selection is boundary-closed and its 1-skeleton is connected
// inside every graph component it touches.
std::vector<std::string> check_subcomplex(const CellComplex& complex, const Subcomplex& selection);

// Fills prize, cost, certificates and provenance for a feasible selection.
Subcomplex finalize_subcomplex(const CellComplex& complex, const PrizeAssignment& assignment,
                               Subcomplex selection);

// Two-phase approximation: a Goemans-Williamson style growth over the
// 1-skeleton followed by greedy insertion of `selected_two_cells` in order.
Subcomplex solve_subcomplex(const CellComplex& complex, const PrizeAssignment& assignment,
                            std::span<const int> selected_two_cells);
// The same solver without 2-cells.
Subcomplex solve_skeleton(const CellComplex& complex, const PrizeAssignment& assignment);

// Exact maximiser by enumeration; throws TooLarge above `max_cells` cells.
Subcomplex brute_force_subcomplex(const CellComplex& complex, const PrizeAssignment& assignment,
                                  std::size_t max_cells = 20);

struct SubcomplexStats {
    std::size_t n0 = 0, n1 = 0, n2 = 0;
    double total_prize = 0.0;
    double total_cost = 0.0;
};

SubcomplexStats subcomplex_stats(const Subcomplex& subcomplex);

// {"cells":{"0":[..],"1":[..],"2":[..]},"prize":..,"cost":..,"provenance":[..]}
std::string subcomplex_to_json(const Subcomplex& subcomplex, int indent = -1);

}  // namespace toporag

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "toporag/errors.hpp"
#include "toporag/retrieval.hpp"

using namespace toporag;

namespace {

std::vector<RankedCell> ranked(std::initializer_list<int> ids) {
    std::vector<RankedCell> out;
    double s = 1.0;
    for (int id : ids) out.push_back({id, s -= 0.1});
    return out;
}

// Assignment with explicit per-cell prizes; ranked 1-cells are those with
// positive prize.
PrizeAssignment manual(const CellComplex& cx, std::vector<double> p0, std::vector<double> p1, double c2,
                       double c_edge = 1.0) {
    PrizeAssignment pa;
    pa.params.c2 = c2;
    pa.params.c_edge = c_edge;
    pa.prize0 = std::move(p0);
    pa.prize1 = std::move(p1);
    pa.rank0.assign(pa.prize0.size(), -1);
    pa.rank1.assign(pa.prize1.size(), -1);
    int r = 0;
    for (std::size_t i = 0; i < pa.prize0.size(); ++i) {
        if (pa.prize0[i] > 0) {
            pa.rank0[i] = r++;
            pa.ranked0.push_back({static_cast<int>(i), 0.5});
        }
    }
    r = 0;
    for (std::size_t i = 0; i < pa.prize1.size(); ++i) {
        if (pa.prize1[i] > 0) {
            pa.rank1[i] = r++;
            pa.ranked1.push_back({static_cast<int>(i), 0.5});
        }
    }
    for (const auto& f : cx.two_cells) {
        double sum = 0;
        for (int v : f.cycle.distinct_vertices()) sum += pa.prize0[v];
        for (int e : f.cycle.edges) sum += pa.prize1[e];
        pa.prize2.push_back(two_cell_prize(sum, f.cycle.length(), c2));
        pa.cost2.push_back(c2 * static_cast<double>(f.cycle.length()));
    }
    return pa;
}

CellComplex triangle() { return lift_structure(load_graph(testing::fixture("triangle.json"))); }

void check_feasible(const CellComplex& cx, const Subcomplex& s) {
    CHECK(check_subcomplex(cx, s).empty());
    CHECK(enforce_boundary_consistency(cx, s).same_cells(s));
}

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("top-k equals a full sort with id tie-break") {
    SplitMix64 rng(5);
    for (int t = 0; t < 40; ++t) {
        const auto g = testing::random_graph(rng, {.nodes = 30, .edges = 40});
        auto cx = testing::random_lift(rng, g, 8);
        // duplicate a few vectors to force ties
        cx.embeddings.z0[3] = cx.embeddings.z0[7];
        cx.embeddings.z0[11] = cx.embeddings.z0[7];
        std::vector<float> q(8);
        for (auto& x : q) x = static_cast<float>(rng.uniform(-1, 1));
        const EmbeddingVector query(q);
        const int k = static_cast<int>(rng.below(35));
        std::vector<std::pair<double, int>> all;
        for (int v = 0; v < 30; ++v) all.emplace_back(-cosine(query, cx.embeddings.z0[v]), v);
        std::sort(all.begin(), all.end());
        const auto got = topk_cells(cx, query, 0, k);
        REQUIRE(got.size() == static_cast<std::size_t>(std::min(k, 30)));
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].cell == all[i].second);
            CHECK(got[i].similarity == -all[i].first);
        }
    }
}

TEST_CASE("top-k edge cases") {
    SplitMix64 rng(1);
    const auto cx = testing::random_lift(rng, load_graph(testing::fixture("triangle.json")), 4);
    const EmbeddingVector q({1.0f, 0.0f, 0.0f, 0.0f});
    CHECK(topk_cells(cx, q, 0, 0).empty());
    CHECK(topk_cells(cx, q, 1, 10).size() == 3);
    CHECK_THROWS_AS(topk_cells(cx, EmbeddingVector({1.0f, 0.0f}), 0, 2), DimensionMismatch);
    CHECK_THROWS_AS(topk_cells(cx, q, 0, -1), ValidationError);
}

TEST_CASE("prizes follow rank") {
    const auto cx = triangle();
    PrizeParams params;
    const auto pa = assign_prizes(ranked({2, 0, 1}), ranked({1}), cx, params);
    CHECK(pa.prize0 == std::vector<double>{2, 1, 3});
    CHECK(pa.prize1 == std::vector<double>{0, 3, 0});
    CHECK(pa.rank0 == std::vector<int>{1, 2, 0});
    params.indexing = PrizeIndexing::kFromKMinusOne;
    const auto eq = assign_prizes(ranked({2, 0, 1}), {}, cx, params);
    CHECK(eq.prize0 == std::vector<double>{1, 0, 2});
    CHECK(parse_prize_indexing("from_k_minus_one") == PrizeIndexing::kFromKMinusOne);
    CHECK(to_string(PrizeIndexing::kFromK) == "from_k");
    CHECK_THROWS_AS(parse_prize_indexing("k_plus_one"), ValidationError);
}

TEST_CASE("face prize by substitution") {
    CHECK(two_cell_prize(3 + 2 + 0 + 3 + 0 + 0, 3, 1.0) == 5.0);
    CHECK(two_cell_prize(0, 4, 1.0) == -4.0);
    const auto cx = triangle();
    // nodes 0,1,2 ranked 3,2,- and edge 0 ranked 3
    const auto pa = assign_prizes(ranked({0, 1}), ranked({0}), cx, {});
    CHECK(pa.prize2[0] == 3 + 2 + 3 - 3.0);
    CHECK(pa.cost2[0] == 3.0);
}

TEST_CASE("top 2-cells by prize") {
    PrizeAssignment pa;
    pa.prize2 = {2.0, 5.0, -1.0, 5.0};
    CellComplex cx;
    cx.two_cells.resize(4);
    CHECK(topk_two_cells(pa, cx, 1) == std::vector<int>{1});
    CHECK(topk_two_cells(pa, cx, 3) == std::vector<int>{1, 3, 0});
    CHECK(topk_two_cells(pa, cx, 9) == std::vector<int>{1, 3, 0});
    CHECK(topk_two_cells(pa, cx, 0).empty());
    pa.prize2 = {-1.0, -3.0, 0.0, -2.0};
    CHECK(topk_two_cells(pa, cx, 3).empty());
}

TEST_CASE("boundary closure") {
    const auto cx = triangle();
    Subcomplex face;
    face.cells2 = {0};
    const auto closed = enforce_boundary_consistency(cx, face);
    CHECK(closed.cells0 == std::vector<int>{0, 1, 2});
    CHECK(closed.cells1 == std::vector<int>{0, 1, 2});
    CHECK(enforce_boundary_consistency(cx, closed).same_cells(closed));
    Subcomplex edge;
    edge.cells1 = {1};
    CHECK(enforce_boundary_consistency(cx, edge).cells0 == std::vector<int>{1, 2});
    CHECK(subcomplex_stats(closed).n2 == 1);
}

TEST_CASE("single prized node stays alone") {
    const auto cx = triangle();
    const auto pa = manual(cx, {0, 4, 0}, {0, 0, 0}, 1.0);
    const auto s = solve_skeleton(cx, pa);
    CHECK(s.cells0 == std::vector<int>{1});
    CHECK(s.cells1.empty());
    CHECK(s.objective() == 4.0);
    CHECK_FALSE(s.degenerate);
}

TEST_CASE("fully ranked triangle with its face") {
    const auto cx = triangle();
    const auto pa = assign_prizes(ranked({0, 1, 2}), ranked({0, 1, 2}), cx, {});
    const auto two = topk_two_cells(pa, cx, 1);
    REQUIRE(two == std::vector<int>{0});
    const auto s = solve_subcomplex(cx, pa, two);
    CHECK(s.cells0 == std::vector<int>{0, 1, 2});
    CHECK(s.cells1 == std::vector<int>{0, 1, 2});
    CHECK(s.cells2 == std::vector<int>{0});
    check_feasible(cx, s);
}

TEST_CASE("brute force on the triangle") {
    const auto cx = triangle();
    // one edge and its endpoints carry the prize
    const auto path = brute_force_subcomplex(cx, manual(cx, {2, 2, 0}, {3, 0, 0}, 1.0));
    CHECK(path.cells0 == std::vector<int>{0, 1});
    CHECK(path.cells1 == std::vector<int>{0});
    CHECK(path.cells2.empty());
    // with a face prize of 5 the optimum takes the face
    auto pa = manual(cx, {3, 2, 0}, {3, 0, 0}, 1.0);
    REQUIRE(pa.prize2[0] == 5.0);
    pa.cost2[0] = 0.0;
    const auto full = brute_force_subcomplex(cx, pa);
    CHECK(full.cells2 == std::vector<int>{0});
    check_feasible(cx, full);
    CHECK_THROWS_AS(brute_force_subcomplex(cx, pa, 6), TooLarge);
}

TEST_CASE("nothing prized gives the degenerate answer") {
    const auto cx = triangle();
    const auto pa = manual(cx, {0, 0, 0}, {0, 0, 0}, 1.0);
    const auto s = solve_skeleton(cx, pa);
    CHECK(s.degenerate);
    CHECK(s.cells0 == std::vector<int>{0});
    CellComplex empty;
    PrizeAssignment none;
    CHECK_THROWS_AS(solve_skeleton(empty, none), EmptyCandidates);
}

TEST_CASE("prizes in separate components give one piece per component") {
    const auto g = make_graph({{0, "a"}, {1, "b"}, {2, "c"}, {3, "d"}}, {{0, 1, "x"}, {2, 3, "y"}});
    const auto cx = lift_structure(g);
    const auto pa = manual(cx, {3, 3, 2, 2}, {0, 0}, 1.0);
    const auto s = solve_skeleton(cx, pa);
    CHECK(s.cells0 == std::vector<int>{0, 1, 2, 3});
    CHECK(s.certificates.size() == 2);
    check_feasible(cx, s);
    const auto exact = brute_force_subcomplex(cx, pa);
    CHECK(exact.objective() == s.objective());
}

TEST_CASE("solver is feasible, bounded by the oracle and beats singletons") {
    SplitMix64 rng(99);
    for (int t = 0; t < 150; ++t) {
        const int n = 2 + static_cast<int>(rng.below(4));
        const auto g = testing::random_graph(rng, {.nodes = n, .edges = n + static_cast<int>(rng.below(3)),
                                                   .connected = rng.below(4) != 0, .self_loops = rng.below(5) == 0,
                                                   .parallel = rng.below(5) == 0});
        const auto cx = lift_structure(g, SpanningTreePolicy::random(t));
        if (cx.total_cells() > 14) continue;
        std::vector<double> p0(cx.num_cells(0)), p1(cx.num_cells(1));
        for (auto& p : p0) p = rng.below(2) ? static_cast<double>(rng.below(4)) : 0.0;
        for (auto& p : p1) p = rng.below(2) ? static_cast<double>(rng.below(4)) : 0.0;
        const auto pa = manual(cx, p0, p1, rng.uniform(0.0, 1.5), rng.uniform(0.0, 2.0));
        const auto s = solve_subcomplex(cx, pa, topk_two_cells(pa, cx, 3));
        const auto exact = brute_force_subcomplex(cx, pa);
        check_feasible(cx, s);
        check_feasible(cx, exact);
        CHECK(s.objective() <= exact.objective() + 1e-9);
        const double best0 = *std::max_element(p0.begin(), p0.end());
        CHECK(s.objective() >= best0 - 1e-9);
        CHECK(evaluate_objective(cx, pa, s).prize == doctest::Approx(s.prize));
    }
}

TEST_CASE("k2 = 0 equals the skeleton path and n2 grows with k2") {
    SplitMix64 rng(17);
    for (int t = 0; t < 40; ++t) {
        const auto g = testing::random_graph(rng, {.nodes = 15, .edges = 30});
        const auto cx = testing::random_lift(rng, g, 8);
        std::vector<float> q(8);
        for (auto& x : q) x = static_cast<float>(rng.uniform(-1, 1));
        const auto pa = assign_prizes(topk_cells(cx, EmbeddingVector(q), 0, 3),
                                      topk_cells(cx, EmbeddingVector(q), 1, 3), cx, {});
        const auto zero = solve_subcomplex(cx, pa, topk_two_cells(pa, cx, 0));
        CHECK(zero.cells2.empty());
        CHECK(subcomplex_to_json(zero) == subcomplex_to_json(solve_skeleton(cx, pa)));
        std::size_t last = 0;
        for (int k2 = 0; k2 <= 3; ++k2) {
            const auto s = solve_subcomplex(cx, pa, topk_two_cells(pa, cx, k2));
            CHECK(s.cells2.size() >= last);
            last = s.cells2.size();
            check_feasible(cx, s);
        }
    }
}

TEST_CASE("json output carries cells, totals and provenance") {
    const auto cx = triangle();
    const auto pa = assign_prizes(ranked({0, 1, 2}), ranked({0, 1, 2}), cx, {});
    const auto s = solve_subcomplex(cx, pa, topk_two_cells(pa, cx, 1));
    const auto doc = nlohmann::json::parse(subcomplex_to_json(s));
    CHECK(doc["cells"]["2"] == nlohmann::json::array({0}));
    CHECK(doc["prize"].get<double>() == s.prize);
    CHECK(doc["provenance"].size() == s.size());
    CHECK(doc["provenance"][0]["rank"] == 0);
}

}

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "toporag/embedding.hpp"
#include "toporag/graph_io.hpp"
#include "toporag/lifting.hpp"
#include "toporag/rng.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(TOPORAG_FIXTURES) / name;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("toporag_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct GraphShape {
    int nodes = 10;
    int edges = 15;
    bool connected = true;
    bool self_loops = false;
    bool parallel = false;
};

// Random textual graph; connected graphs start from a random spanning tree.
inline toporag::TextualGraph random_graph(toporag::SplitMix64& rng, const GraphShape& shape) {
    std::vector<std::pair<std::int64_t, std::string>> nodes;
    for (int i = 0; i < shape.nodes; ++i) nodes.emplace_back(i, "node " + std::to_string(rng.below(50)));
    std::vector<std::tuple<std::int64_t, std::int64_t, std::string>> edges;
    std::set<std::pair<int, int>> used;
    auto add = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        if (!shape.parallel && used.count(key)) return false;
        if (!shape.self_loops && a == b) return false;
        used.insert(key);
        edges.emplace_back(a, b, "rel " + std::to_string(rng.below(20)));
        return true;
    };
    if (shape.connected) {
        for (int v = 1; v < shape.nodes; ++v) add(static_cast<int>(rng.below(static_cast<std::uint64_t>(v))), v);
    }
    const auto max_simple = static_cast<long>(shape.nodes) * (shape.nodes - 1) / 2;
    int guard = 0;
    while (static_cast<int>(edges.size()) < shape.edges && guard++ < 50 * shape.edges + 100) {
        if (!shape.parallel && !shape.self_loops && static_cast<long>(used.size()) >= max_simple) break;
        add(static_cast<int>(rng.below(static_cast<std::uint64_t>(shape.nodes))),
            static_cast<int>(rng.below(static_cast<std::uint64_t>(shape.nodes))));
    }
    return toporag::make_graph(std::move(nodes), edges);
}

// Lifts with random unit-free embeddings of width `dim`.
inline toporag::CellComplex random_lift(toporag::SplitMix64& rng, const toporag::TextualGraph& graph, int dim,
                                        const toporag::SpanningTreePolicy& policy = {}) {
    auto vec = [&] {
        std::vector<float> v(static_cast<std::size_t>(dim));
        for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
        return toporag::EmbeddingVector(std::move(v));
    };
    std::vector<toporag::EmbeddingVector> z0, z1;
    for (std::size_t i = 0; i < graph.num_nodes(); ++i) z0.push_back(vec());
    for (std::size_t i = 0; i < graph.num_edges(); ++i) z1.push_back(vec());
    return toporag::lift(graph, std::move(z0), std::move(z1), policy);
}

// Counts calls and delegates to the hash provider.
class CountingProvider final : public toporag::EmbeddingProvider {
public:
    explicit CountingProvider(std::uint64_t seed = 0, std::size_t dim = 32, std::string tag = "count")
        : inner_(seed, dim), tag_(std::move(tag)) {}
    std::vector<toporag::EmbeddingVector> embed(std::span<const std::string> texts) override {
        ++calls;
        texts_seen += texts.size();
        return inner_.embed(texts);
    }
    std::size_t dim() const noexcept override { return inner_.dim(); }
    std::string fingerprint() const override { return tag_ + ":" + inner_.fingerprint(); }

    int calls = 0;
    std::size_t texts_seen = 0;

private:
    toporag::HashEmbeddingProvider inner_;
    std::string tag_;
};

}  // namespace testing

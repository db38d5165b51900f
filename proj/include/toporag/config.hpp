#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "toporag/lifting.hpp"
#include "toporag/reasoning.hpp"
#include "toporag/retrieval.hpp"

namespace toporag {

inline constexpr const char* kDefaultPreamble =
    "Below is a graph rendered as node, edge and cycle lists. Use it to answer the question.";

struct PipelineConfig {
    PrizeParams prize;
    int k2 = 3;
    SpanningTreePolicy tree_policy = SpanningTreePolicy::dfs();
    CycleAggregation cycle_aggregation = CycleAggregation::kMean;

    std::string embedder = "hash";  // hash | http
    int embed_dim = 1024;
    std::uint64_t embed_seed = 0;
    std::string embed_cache;  // empty: no cache

    bool reasoning = true;
    ReasoningConfig reasoning_config;
    std::string weights_path;  // empty: seeded initialisation

    std::size_t max_input_tokens = 512;
    int max_new_tokens = 32;
    std::string preamble = kDefaultPreamble;
    std::string llm = "http";  // http | echo | lookup | contains-context
    int llm_timeout_ms = 30000;

    // Throws ValidationError for out-of-range values.
    void validate() const;
};

// `key = value` lines; `#` starts a comment; string values may be quoted.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_string(const PipelineConfig& config);

}  // namespace toporag

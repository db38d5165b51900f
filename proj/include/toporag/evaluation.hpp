#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "toporag/graph_io.hpp"
#include "toporag/pipeline.hpp"

namespace toporag {

enum class Metric { kAccuracy, kHit };

Metric metric_for(DatasetTag tag);
std::string to_string(Metric metric);

// Exact match after trimming and lowercasing, against any gold answer.
bool accuracy_match(const std::string& predicted, std::span<const std::string> gold);
// Some gold answer occurs in the prediction, case-insensitively.
bool hit_match(const std::string& predicted, std::span<const std::string> gold);

struct EvalRecord {
    int idx = 0;
    std::string question;
    std::string predicted;
    std::vector<std::string> gold;
    bool correct = false;
    std::size_t n0 = 0, n1 = 0, n2 = 0;
    double latency_ms = 0.0;
};

struct SizeRow {
    int k2 = 0;
    double n0 = 0, n1 = 0, n2 = 0;  // means over examples
    std::size_t examples = 0;
};

struct EvalReport {
    Metric metric = Metric::kAccuracy;
    std::vector<EvalRecord> records;
    double score = 0.0;  // mean of records[i].correct
    std::vector<SizeRow> sizes;  // one row per swept k2; the run's own k2 when not sweeping
    double total_ms = 0.0;
    double mean_ms = 0.0;
};

// Runs the pipeline on every example. With the contains-context mock the
// expected answer is "yes". `k2_sweep` adds a retrieval-only size row per
// value.
EvalReport evaluate(std::span<const QaExample> examples, const Pipeline& pipeline, std::span<const int> k2_sweep = {});

std::string report_to_json(const EvalReport& report, int indent = 2);
// Plain-text table: k2, avg 0-cells, avg 1-cells, avg 2-cells.
std::string size_table(const EvalReport& report);

// Gold strings keyed by question, as consumed by the mock LLM.
std::map<std::string, std::string> answer_table(std::span<const QaExample> examples);

}  // namespace toporag

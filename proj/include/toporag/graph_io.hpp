#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace toporag {

struct GraphNode {
    int id = 0;
    std::string text;

    bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
    int src = 0;
    int dst = 0;
    std::string text;

    bool is_self_loop() const noexcept { return src == dst; }
    bool operator==(const GraphEdge&) const = default;
};

// A graph whose nodes and edges carry text. Node ids are dense in [0, |V|)
// and nodes[i].id == i. `original_ids[i]` is the id node i had in the source
// file; it is used whenever ids are shown to a user.
struct TextualGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    std::vector<std::int64_t> original_ids;
    bool directed = false;

    std::size_t num_nodes() const noexcept { return nodes.size(); }
    std::size_t num_edges() const noexcept { return edges.size(); }
    std::int64_t original_id(int node) const { return original_ids.at(static_cast<std::size_t>(node)); }

    // Node ids, node texts, edge multiset, direction flag and the id map.
    bool operator==(const TextualGraph& other) const;
};

// Checks the dense-id and endpoint invariants; throws ValidationError.
void validate_graph(const TextualGraph& graph);

// Builds a validated graph from raw (possibly sparse) node ids. Dense ids are
// assigned in ascending order of the raw id.
TextualGraph make_graph(std::vector<std::pair<std::int64_t, std::string>> raw_nodes,
                        const std::vector<std::tuple<std::int64_t, std::int64_t, std::string>>& raw_edges,
                        bool directed = false);

enum class GraphFormat { kJson, kCsvPair };

GraphFormat parse_graph_format(const std::string& name);

// kJson: a single file. kCsvPair: a directory holding nodes.csv and edges.csv.
TextualGraph load_graph(const std::filesystem::path& path, GraphFormat format);
// Picks the format from the path: directories are CSV pairs, files are JSON.
TextualGraph load_graph(const std::filesystem::path& path);

TextualGraph parse_graph_json(const std::string& text);
std::string graph_to_json(const TextualGraph& graph);

// Writes JSON with the original ids, so load_graph(save_graph(g)) == g.
void save_graph(const TextualGraph& graph, const std::filesystem::path& path);
void save_graph_csv(const TextualGraph& graph, const std::filesystem::path& dir);

// RFC 4180 style CSV; quoted fields may contain commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::string csv_escape(const std::string& field);

enum class DatasetTag { kExplaGraphs, kSceneGraphs, kWebQsp, kCustom };

DatasetTag parse_dataset_tag(const std::string& name);
std::string to_string(DatasetTag tag);

struct QaExample {
    int idx = 0;
    std::string question;
    TextualGraph graph;
    std::vector<std::string> answers;
    DatasetTag dataset = DatasetTag::kCustom;
};

// Reads `questions.jsonl` from `dir`; each row names its graph file relative
// to `dir`. A directory without questions.jsonl yields an empty list.
std::vector<QaExample> load_qa_fixture(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace toporag

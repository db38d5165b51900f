#include "toporag/graph_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "toporag/errors.hpp"

namespace toporag {

namespace fs = std::filesystem;
using nlohmann::json;

bool TextualGraph::operator==(const TextualGraph& other) const {
    if (directed != other.directed || nodes != other.nodes || original_ids != other.original_ids) {
        return false;
    }
    if (edges.size() != other.edges.size()) return false;
    auto key = [](const GraphEdge& e) { return std::tie(e.src, e.dst, e.text); };
    auto less = [&](const GraphEdge& a, const GraphEdge& b) { return key(a) < key(b); };
    auto lhs = edges;
    auto rhs = other.edges;
    std::sort(lhs.begin(), lhs.end(), less);
    std::sort(rhs.begin(), rhs.end(), less);
    return lhs == rhs;
}

void validate_graph(const TextualGraph& graph) {
    const auto n = static_cast<int>(graph.nodes.size());
    if (graph.original_ids.size() != graph.nodes.size()) {
        throw ValidationError("id map has " + std::to_string(graph.original_ids.size()) +
                              " entries for " + std::to_string(n) + " nodes");
    }
    for (int i = 0; i < n; ++i) {
        if (graph.nodes[static_cast<std::size_t>(i)].id != i) {
            throw ValidationError("node ids are not dense at position " + std::to_string(i));
        }
    }
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const auto& edge = graph.edges[e];
        if (edge.src < 0 || edge.src >= n || edge.dst < 0 || edge.dst >= n) {
            throw ValidationError("edge " + std::to_string(e) + " references a missing node");
        }
    }
}

TextualGraph make_graph(std::vector<std::pair<std::int64_t, std::string>> raw_nodes,
                        const std::vector<std::tuple<std::int64_t, std::int64_t, std::string>>& raw_edges,
                        bool directed) {
    std::sort(raw_nodes.begin(), raw_nodes.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::map<std::int64_t, int> dense;
    TextualGraph graph;
    graph.directed = directed;
    graph.nodes.reserve(raw_nodes.size());
    graph.original_ids.reserve(raw_nodes.size());
    for (auto& [raw, text] : raw_nodes) {
        const int id = static_cast<int>(graph.nodes.size());
        if (!dense.emplace(raw, id).second) {
            throw ValidationError("duplicate node_id " + std::to_string(raw));
        }
        graph.nodes.push_back({id, std::move(text)});
        graph.original_ids.push_back(raw);
    }
    graph.edges.reserve(raw_edges.size());
    for (const auto& [src, dst, text] : raw_edges) {
        const auto s = dense.find(src);
        const auto d = dense.find(dst);
        if (s == dense.end() || d == dense.end()) {
            throw ValidationError("edge (" + std::to_string(src) + ", " + std::to_string(dst) +
                                  ") references a missing node_id " +
                                  std::to_string(s == dense.end() ? src : dst));
        }
        graph.edges.push_back({s->second, d->second, text});
    }
    return graph;
}

GraphFormat parse_graph_format(const std::string& name) {
    if (name == "json") return GraphFormat::kJson;
    if (name == "csv" || name == "csv-pair") return GraphFormat::kCsvPair;
    throw ValidationError("unknown graph format '" + name + "'");
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

TextualGraph parse_graph_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(e.what());
    }
    try {
        if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
            throw ParseError("graph JSON needs a \"nodes\" array");
        }
        std::vector<std::pair<std::int64_t, std::string>> nodes;
        for (const auto& n : doc.at("nodes")) {
            nodes.emplace_back(n.at("id").get<std::int64_t>(), n.at("text").get<std::string>());
        }
        std::vector<std::tuple<std::int64_t, std::int64_t, std::string>> edges;
        if (doc.contains("edges")) {
            for (const auto& e : doc.at("edges")) {
                edges.emplace_back(e.at("src").get<std::int64_t>(), e.at("dst").get<std::int64_t>(),
                                   e.at("text").get<std::string>());
            }
        }
        return make_graph(std::move(nodes), edges, doc.value("directed", false));
    } catch (const json::exception& e) {
        throw ParseError(e.what());
    }
}

std::string graph_to_json(const TextualGraph& graph) {
    json nodes = json::array();
    for (const auto& n : graph.nodes) {
        nodes.push_back({{"id", graph.original_id(n.id)}, {"text", n.text}});
    }
    json edges = json::array();
    for (const auto& e : graph.edges) {
        edges.push_back(
            {{"src", graph.original_id(e.src)}, {"dst", graph.original_id(e.dst)}, {"text", e.text}});
    }
    json doc = {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"directed", graph.directed}};
    return doc.dump() + "\n";
}

void save_graph(const TextualGraph& graph, const fs::path& path) {
    validate_graph(graph);
    write_file_atomic(path, graph_to_json(graph));
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty()) throw ParseError("stray quote in CSV field");
                in_quotes = true;
                row_has_content = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                if (row_has_content || !field.empty()) {
                    row.push_back(std::move(field));
                    rows.push_back(std::move(row));
                }
                row.clear();
                field.clear();
                row_has_content = false;
                break;
            default:
                field += c;
                row_has_content = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted CSV field");
    if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

std::int64_t parse_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const auto v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("bad ") + what + " '" + s + "'");
    }
}

TextualGraph load_csv_pair(const fs::path& dir) {
    const auto node_rows = parse_csv(read_file(dir / "nodes.csv"));
    const auto edge_rows = parse_csv(read_file(dir / "edges.csv"));
    if (node_rows.empty() || node_rows[0] != std::vector<std::string>{"node_id", "node_attr"}) {
        throw ParseError("nodes.csv must start with header node_id,node_attr");
    }
    if (edge_rows.empty() || edge_rows[0] != std::vector<std::string>{"src", "edge_attr", "dst"}) {
        throw ParseError("edges.csv must start with header src,edge_attr,dst");
    }
    std::vector<std::pair<std::int64_t, std::string>> nodes;
    for (std::size_t r = 1; r < node_rows.size(); ++r) {
        const auto& row = node_rows[r];
        if (row.size() != 2) throw ParseError("nodes.csv row " + std::to_string(r) + " has " +
                                              std::to_string(row.size()) + " fields");
        nodes.emplace_back(parse_int(row[0], "node_id"), row[1]);
    }
    std::vector<std::tuple<std::int64_t, std::int64_t, std::string>> edges;
    for (std::size_t r = 1; r < edge_rows.size(); ++r) {
        const auto& row = edge_rows[r];
        if (row.size() != 3) throw ParseError("edges.csv row " + std::to_string(r) + " has " +
                                              std::to_string(row.size()) + " fields");
        edges.emplace_back(parse_int(row[0], "src"), parse_int(row[2], "dst"), row[1]);
    }
    // GraphQA releases are knowledge-graph triples, hence directed.
    return make_graph(std::move(nodes), edges, true);
}

}  // namespace

void save_graph_csv(const TextualGraph& graph, const fs::path& dir) {
    validate_graph(graph);
    fs::create_directories(dir);
    std::string nodes = "node_id,node_attr\n";
    for (const auto& n : graph.nodes) {
        nodes += std::to_string(graph.original_id(n.id)) + "," + csv_escape(n.text) + "\n";
    }
    std::string edges = "src,edge_attr,dst\n";
    for (const auto& e : graph.edges) {
        edges += std::to_string(graph.original_id(e.src)) + "," + csv_escape(e.text) + "," +
                 std::to_string(graph.original_id(e.dst)) + "\n";
    }
    write_file_atomic(dir / "nodes.csv", nodes);
    write_file_atomic(dir / "edges.csv", edges);
}

TextualGraph load_graph(const fs::path& path, GraphFormat format) {
    if (!fs::exists(path)) throw IoError("no such file: " + path.string());
    switch (format) {
        case GraphFormat::kJson:
            return parse_graph_json(read_file(path));
        case GraphFormat::kCsvPair:
            return load_csv_pair(path);
    }
    throw ValidationError("unreachable graph format");
}

TextualGraph load_graph(const fs::path& path) {
    return load_graph(path, fs::is_directory(path) ? GraphFormat::kCsvPair : GraphFormat::kJson);
}

DatasetTag parse_dataset_tag(const std::string& name) {
    if (name == "explagraphs") return DatasetTag::kExplaGraphs;
    if (name == "scenegraphs") return DatasetTag::kSceneGraphs;
    if (name == "webqsp") return DatasetTag::kWebQsp;
    if (name == "custom") return DatasetTag::kCustom;
    throw ValidationError("unknown dataset tag '" + name + "'");
}

std::string to_string(DatasetTag tag) {
    switch (tag) {
        case DatasetTag::kExplaGraphs: return "explagraphs";
        case DatasetTag::kSceneGraphs: return "scenegraphs";
        case DatasetTag::kWebQsp: return "webqsp";
        case DatasetTag::kCustom: return "custom";
    }
    return "custom";
}

std::vector<QaExample> load_qa_fixture(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    const auto questions = dir / "questions.jsonl";
    if (!fs::exists(questions)) return {};

    std::vector<QaExample> out;
    std::istringstream lines(read_file(questions));
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        QaExample ex;
        std::string graph_ref;
        try {
            const auto row = json::parse(line);
            ex.idx = row.at("idx").get<int>();
            ex.question = row.at("question").get<std::string>();
            ex.answers = row.at("answers").get<std::vector<std::string>>();
            ex.dataset = parse_dataset_tag(row.value("dataset", std::string("custom")));
            graph_ref = row.value("graph", std::string());
        } catch (const json::exception& e) {
            throw ParseError("questions.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
        if (ex.question.empty()) {
            throw ValidationError("example " + std::to_string(ex.idx) + " has an empty question");
        }
        const auto graph_path = dir / graph_ref;
        if (graph_ref.empty() || !fs::exists(graph_path)) {
            throw MissingGraphError("example " + std::to_string(ex.idx) + " has no graph at '" +
                                    graph_ref + "'");
        }
        ex.graph = load_graph(graph_path);
        out.push_back(std::move(ex));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const QaExample& a, const QaExample& b) { return a.idx < b.idx; });
    return out;
}

}  // namespace toporag

#include "toporag/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "toporag/errors.hpp"
#include "toporag/graph_io.hpp"

namespace toporag {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ValidationError("config key '" + key + "': bad number '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ValidationError("config key '" + key + "': expected true or false");
}

std::string unquote(const std::string& key, const std::string& raw) {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
        try {
            return nlohmann::json::parse(raw).get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw ValidationError("config key '" + key + "': malformed string");
        }
    }
    return raw;
}

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

// Strips a trailing comment outside of a quoted string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && quoted) {
            ++i;
        } else if (line[i] == '"') {
            quoted = !quoted;
        } else if (line[i] == '#' && !quoted) {
            return line.substr(0, i);
        }
    }
    return line;
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"k0", [](auto& c, auto& k, auto& v) { c.prize.k0 = parse_number<int>(k, v); }},
        {"k1", [](auto& c, auto& k, auto& v) { c.prize.k1 = parse_number<int>(k, v); }},
        {"k2", [](auto& c, auto& k, auto& v) { c.k2 = parse_number<int>(k, v); }},
        {"c2", [](auto& c, auto& k, auto& v) { c.prize.c2 = parse_number<double>(k, v); }},
        {"c_edge", [](auto& c, auto& k, auto& v) { c.prize.c_edge = parse_number<double>(k, v); }},
        {"prize_indexing", [](auto& c, auto&, auto& v) { c.prize.indexing = parse_prize_indexing(v); }},
        {"tree_policy",
         [](auto& c, auto&, auto& v) { c.tree_policy = SpanningTreePolicy::parse(v, c.tree_policy.seed); }},
        {"tree_seed", [](auto& c, auto& k, auto& v) { c.tree_policy.seed = parse_number<std::uint64_t>(k, v); }},
        {"cycle_aggregation", [](auto& c, auto&, auto& v) { c.cycle_aggregation = parse_cycle_aggregation(v); }},
        {"embedder", [](auto& c, auto&, auto& v) { c.embedder = v; }},
        {"embed_dim", [](auto& c, auto& k, auto& v) { c.embed_dim = parse_number<int>(k, v); }},
        {"embed_seed", [](auto& c, auto& k, auto& v) { c.embed_seed = parse_number<std::uint64_t>(k, v); }},
        {"embed_cache", [](auto& c, auto&, auto& v) { c.embed_cache = v; }},
        {"reasoning", [](auto& c, auto& k, auto& v) { c.reasoning = parse_bool(k, v); }},
        {"layers", [](auto& c, auto& k, auto& v) { c.reasoning_config.layers = parse_number<int>(k, v); }},
        {"state_dim", [](auto& c, auto& k, auto& v) { c.reasoning_config.state_dim = parse_number<int>(k, v); }},
        {"llm_dim", [](auto& c, auto& k, auto& v) { c.reasoning_config.llm_dim = parse_number<int>(k, v); }},
        {"projection_hidden",
         [](auto& c, auto& k, auto& v) { c.reasoning_config.projection_hidden = parse_number<int>(k, v); }},
        {"activation", [](auto& c, auto&, auto& v) { c.reasoning_config.activation = parse_activation(v); }},
        {"aggregation", [](auto& c, auto&, auto& v) { c.reasoning_config.aggregation = parse_aggregation(v); }},
        {"reasoning_seed",
         [](auto& c, auto& k, auto& v) { c.reasoning_config.seed = parse_number<std::uint64_t>(k, v); }},
        {"weights", [](auto& c, auto&, auto& v) { c.weights_path = v; }},
        {"max_input_tokens",
         [](auto& c, auto& k, auto& v) { c.max_input_tokens = parse_number<std::size_t>(k, v); }},
        {"max_new_tokens", [](auto& c, auto& k, auto& v) { c.max_new_tokens = parse_number<int>(k, v); }},
        {"preamble", [](auto& c, auto&, auto& v) { c.preamble = v; }},
        {"llm", [](auto& c, auto&, auto& v) { c.llm = v; }},
        {"llm_timeout_ms", [](auto& c, auto& k, auto& v) { c.llm_timeout_ms = parse_number<int>(k, v); }},
    };
    return table;
}

}  // namespace

void PipelineConfig::validate() const {
    if (prize.k0 < 0 || prize.k1 < 0) throw ValidationError("k0 and k1 must be non-negative");
    if (k2 < 0 || k2 > 3) throw ValidationError("k2 must lie in [0, 3]");
    if (!(prize.c2 >= 0) || !(prize.c_edge >= 0)) throw ValidationError("c2 and c_edge must be non-negative");
    if (embedder != "hash" && embedder != "http") throw ValidationError("embedder must be hash or http");
    if (embed_dim <= 0) throw ValidationError("embed_dim must be positive");
    reasoning_config.validate();
    if (max_input_tokens == 0) throw ValidationError("max_input_tokens must be positive");
    if (max_new_tokens <= 0) throw ValidationError("max_new_tokens must be positive");
    if (llm != "http" && llm != "echo" && llm != "lookup" && llm != "contains-context") {
        throw ValidationError("llm must be http, echo, lookup or contains-context");
    }
    if (llm_timeout_ms <= 0) throw ValidationError("llm_timeout_ms must be positive");
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig config;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto body = trim(strip_comment(line));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(number) + ": expected key = value");
        }
        const auto key = trim(std::string_view(body).substr(0, eq));
        const auto value = unquote(key, trim(std::string_view(body).substr(eq + 1)));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ValidationError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
        it->second(config, key, value);
    }
    config.validate();
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string config_to_string(const PipelineConfig& c) {
    std::ostringstream out;
    out.precision(17);
    const auto& r = c.reasoning_config;
    out << "k0 = " << c.prize.k0 << "\n"
        << "k1 = " << c.prize.k1 << "\n"
        << "k2 = " << c.k2 << "\n"
        << "c2 = " << c.prize.c2 << "\n"
        << "c_edge = " << c.prize.c_edge << "\n"
        << "prize_indexing = " << to_string(c.prize.indexing) << "\n"
        << "tree_policy = "
        << (c.tree_policy.kind == TreePolicyKind::kDfs   ? "dfs"
            : c.tree_policy.kind == TreePolicyKind::kBfs ? "bfs"
                                                         : "random")
        << "\n"
        << "tree_seed = " << c.tree_policy.seed << "\n"
        << "cycle_aggregation = " << (c.cycle_aggregation == CycleAggregation::kMean ? "mean" : "max") << "\n"
        << "embedder = " << c.embedder << "\n"
        << "embed_dim = " << c.embed_dim << "\n"
        << "embed_seed = " << c.embed_seed << "\n"
        << "embed_cache = " << quote(c.embed_cache) << "\n"
        << "reasoning = " << (c.reasoning ? "true" : "false") << "\n"
        << "layers = " << r.layers << "\n"
        << "state_dim = " << r.state_dim << "\n"
        << "llm_dim = " << r.llm_dim << "\n"
        << "projection_hidden = " << r.projection_hidden << "\n"
        << "activation = " << to_string(r.activation) << "\n"
        << "aggregation = " << to_string(r.aggregation) << "\n"
        << "reasoning_seed = " << r.seed << "\n"
        << "weights = " << quote(c.weights_path) << "\n"
        << "max_input_tokens = " << c.max_input_tokens << "\n"
        << "max_new_tokens = " << c.max_new_tokens << "\n"
        << "preamble = " << quote(c.preamble) << "\n"
        << "llm = " << c.llm << "\n"
        << "llm_timeout_ms = " << c.llm_timeout_ms << "\n";
    return out.str();
}

}  // namespace toporag

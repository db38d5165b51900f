#include "toporag/generation.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "toporag/errors.hpp"

namespace toporag {

using nlohmann::json;

namespace {

std::size_t at(int i) { return static_cast<std::size_t>(i); }

std::string one_line(std::string text) {
    for (auto& c : text) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return text;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string rtrim(std::string s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r' ||
                          s.back() == '\f' || s.back() == '\v')) {
        s.pop_back();
    }
    return s;
}

}  // namespace

TextualizedSubcomplex textualize(const Subcomplex& sub, const CellComplex& complex, const TextualGraph& graph) {
    TextualizedSubcomplex out;
    auto node_id = [&](int v) { return std::to_string(graph.original_id(v)); };
    for (int v : sub.cells0) {
        if (v < 0 || at(v) >= graph.num_nodes()) throw DanglingCell("0-cell " + std::to_string(v));
        out.node_lines.push_back(node_id(v) + "," + csv_escape(graph.nodes[at(v)].text));
    }
    for (int e : sub.cells1) {
        if (e < 0 || at(e) >= graph.num_edges()) throw DanglingCell("1-cell " + std::to_string(e));
        const auto& edge = graph.edges[at(e)];
        out.edge_lines.push_back(node_id(edge.src) + "," + csv_escape(edge.text) + "," + node_id(edge.dst));
    }
    for (int f : sub.cells2) {
        if (f < 0 || at(f) >= complex.two_cells.size()) throw DanglingCell("2-cell " + std::to_string(f));
        const auto& cycle = complex.two_cells[at(f)].cycle;
        std::vector<std::string> ids, names, edges;
        for (int v : cycle.vertices) {
            if (v < 0 || at(v) >= graph.num_nodes()) throw DanglingCell("0-cell " + std::to_string(v));
            ids.push_back(node_id(v));
            names.push_back(one_line(graph.nodes[at(v)].text));
        }
        for (int e : cycle.edges) {
            if (e < 0 || at(e) >= graph.num_edges()) throw DanglingCell("1-cell " + std::to_string(e));
            edges.push_back(one_line(graph.edges[at(e)].text));
        }
        out.cycle_lines.push_back("cycle: " + join(ids, " -> ") + " | nodes: " + join(names, " -> ") +
                                  " | edges: " + join(edges, "; "));
    }
    if (sub.empty()) return out;
    std::vector<std::string> lines{kNodeHeader};
    lines.insert(lines.end(), out.node_lines.begin(), out.node_lines.end());
    lines.emplace_back(kEdgeHeader);
    lines.insert(lines.end(), out.edge_lines.begin(), out.edge_lines.end());
    lines.insert(lines.end(), out.cycle_lines.begin(), out.cycle_lines.end());
    out.rendered = join(lines, "\n");
    return out;
}

std::size_t estimate_tokens(const std::string& text) { return (text.size() + 3) / 4; }

PromptBundle build_prompt(const std::string& context, const std::string& question, const std::string& preamble,
                          std::size_t max_input_tokens) {
    PromptBundle b;
    b.preamble = preamble;
    b.context = context;
    b.question = question;
    b.prompt = preamble + "\n";
    if (!context.empty()) b.prompt += "[CONTEXT]\n" + context + "\n";
    b.prompt += "[QUESTION]\n" + question + "\n[ANSWER]\n";
    b.token_estimate = estimate_tokens(b.prompt);
    b.max_input_tokens = max_input_tokens;
    b.over_budget = b.token_estimate > max_input_tokens;
    return b;
}

HttpChatSettings HttpChatSettings::from_env() {
    auto env = [](const char* name, const char* fallback) {
        const char* v = std::getenv(name);
        return std::string(v ? v : fallback);
    };
    HttpChatSettings s;
    s.api_base = env("LLM_API_BASE", "http://127.0.0.1:8001");
    s.api_key = env("LLM_API_KEY", "");
    s.model = env("LLM_MODEL", "meta-llama/Llama-2-7b-chat-hf");
    const auto timeout = env("LLM_TIMEOUT_MS", "30000");
    try {
        s.timeout = std::chrono::milliseconds(std::stoll(timeout));
    } catch (const std::exception&) {
        throw ValidationError("LLM_TIMEOUT_MS is not an integer: '" + timeout + "'");
    }
    if (s.timeout.count() <= 0) throw ValidationError("LLM_TIMEOUT_MS must be positive");
    return s;
}

HttpChatClient::HttpChatClient(HttpChatSettings settings) : settings_(std::move(settings)) {}

std::string chat_request_body(const std::string& model, const std::string& prompt, int max_tokens) {
    json body = {
        {"model", model},
        {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
        {"max_tokens", max_tokens},
        {"temperature", 0},
    };
    return body.dump();
}

std::string parse_chat_response(const std::string& body) {
    try {
        const auto doc = json::parse(body);
        const auto& choice = doc.at("choices").at(0);
        if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
        return choice.at("text").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderUnavailable(std::string("malformed chat response: ") + e.what());
    }
}

Completion HttpChatClient::complete(const PromptBundle& bundle) {
    const auto response = detail::post_json(settings_.api_base, "/v1/chat/completions",
                                            chat_request_body(settings_.model, bundle.prompt, settings_.max_tokens),
                                            settings_.api_key, settings_.timeout);
    if (response.status >= 400 && response.status < 500) {
        throw ProviderRejected("chat endpoint answered HTTP " + std::to_string(response.status));
    }
    if (response.status != 200) {
        throw ProviderUnavailable("chat endpoint answered HTTP " + std::to_string(response.status));
    }
    return {parse_chat_response(response.body), response.body};
}

MockMode parse_mock_mode(const std::string& name) {
    if (name == "echo") return MockMode::kEcho;
    if (name == "lookup") return MockMode::kLookup;
    if (name == "contains-context") return MockMode::kContainsContext;
    throw ValidationError("unknown mock mode '" + name + "'");
}

std::string to_string(MockMode mode) {
    switch (mode) {
        case MockMode::kEcho: return "echo";
        case MockMode::kLookup: return "lookup";
        case MockMode::kContainsContext: return "contains-context";
    }
    return "echo";
}

MockLlm::MockLlm(MockMode mode, std::map<std::string, std::string> table) : mode_(mode), table_(std::move(table)) {}

Completion MockLlm::complete(const PromptBundle& bundle) {
    std::string answer;
    switch (mode_) {
        case MockMode::kEcho:
            answer = bundle.question.substr(0, bundle.question.find('\n'));
            break;
        case MockMode::kLookup: {
            auto it = table_.find(bundle.question);
            answer = it == table_.end() ? "unknown" : it->second;
            break;
        }
        case MockMode::kContainsContext: {
            auto it = table_.find(bundle.question);
            const bool hit = it != table_.end() && !it->second.empty() &&
                             bundle.context.find(it->second) != std::string::npos;
            answer = hit ? "yes" : "no";
            break;
        }
    }
    json raw = {{"mock", to_string(mode_)}, {"answer", answer}};
    return {answer, raw.dump()};
}

Completion generate(const PromptBundle& bundle, LlmClient& client) {
    auto c = client.complete(bundle);
    c.answer = rtrim(std::move(c.answer));
    return c;
}

}  // namespace toporag

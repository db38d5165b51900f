#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "toporag/graph_io.hpp"
#include "toporag/lifting.hpp"
#include "toporag/retrieval.hpp"

namespace toporag {

inline constexpr const char* kNodeHeader = "node_id,node_attr";
inline constexpr const char* kEdgeHeader = "src,edge_attr,dst";

struct TextualizedSubcomplex {
    std::vector<std::string> node_lines;
    std::vector<std::string> edge_lines;
    std::vector<std::string> cycle_lines;
    std::string rendered;  // empty for an empty subcomplex

    bool empty() const noexcept { return rendered.empty(); }
};

// Node lines `id,text`, edge lines `src,text,dst` (original ids, CSV
// quoting), then one line per 2-cell:
//   cycle: 0 -> 1 -> 2 -> 0 | nodes: a -> b -> c -> a | edges: x; y; z
// The cycle section is left out when there are no 2-cells.
TextualizedSubcomplex textualize(const Subcomplex& subcomplex, const CellComplex& complex,
                                 const TextualGraph& graph);

struct PromptBundle {
    std::string preamble;
    std::string context;
    std::string question;
    std::string prompt;
    std::size_t token_estimate = 0;  // ceil(bytes / 4)
    std::size_t max_input_tokens = 512;
    bool over_budget = false;  // the prompt is never truncated
};

// <preamble>\n[CONTEXT]\n<context>\n[QUESTION]\n<question>\n[ANSWER]\n
// The [CONTEXT] block is dropped when the context is empty.
PromptBundle build_prompt(const std::string& context, const std::string& question, const std::string& preamble,
                          std::size_t max_input_tokens = 512);

std::size_t estimate_tokens(const std::string& text);

struct Completion {
    std::string answer;
    std::string raw;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual Completion complete(const PromptBundle& bundle) = 0;
};

struct HttpChatSettings {
    std::string api_base;
    std::string api_key;
    std::string model;
    std::chrono::milliseconds timeout{30000};
    int max_tokens = 32;

    // LLM_API_BASE, LLM_API_KEY, LLM_MODEL, LLM_TIMEOUT_MS.
    static HttpChatSettings from_env();
};

// Client for the `POST /v1/chat/completions` JSON API. Thread-safe.
class HttpChatClient final : public LlmClient {
public:
    explicit HttpChatClient(HttpChatSettings settings);
    Completion complete(const PromptBundle& bundle) override;

private:
    HttpChatSettings settings_;
};

std::string chat_request_body(const std::string& model, const std::string& prompt, int max_tokens);
std::string parse_chat_response(const std::string& body);

enum class MockMode { kEcho, kLookup, kContainsContext };

MockMode parse_mock_mode(const std::string& name);
std::string to_string(MockMode mode);

// echo: first line of the question. lookup: the table entry for the
// question. contains-context: "yes" when the table's gold string for the
// question occurs verbatim in the context, else "no".
class MockLlm final : public LlmClient {
public:
    explicit MockLlm(MockMode mode, std::map<std::string, std::string> table = {});
    Completion complete(const PromptBundle& bundle) override;
    MockMode mode() const noexcept { return mode_; }

private:
    MockMode mode_;
    std::map<std::string, std::string> table_;
};

// Sends the bundle and trims trailing whitespace from the answer.
Completion generate(const PromptBundle& bundle, LlmClient& client);

}  // namespace toporag

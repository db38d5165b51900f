#include "toporag/pipeline.hpp"

#include <chrono>

#include "toporag/errors.hpp"

namespace toporag {

std::shared_ptr<EmbeddingProvider> make_embedder(const PipelineConfig& config) {
    const auto dim = static_cast<std::size_t>(config.embed_dim);
    if (config.embedder == "http") return std::make_shared<HttpEmbeddingProvider>(HttpEmbeddingSettings::from_env(dim));
    return std::make_shared<HashEmbeddingProvider>(config.embed_seed, dim);
}

std::shared_ptr<LlmClient> make_llm(const PipelineConfig& config, std::map<std::string, std::string> answers) {
    if (config.llm == "http") {
        auto settings = HttpChatSettings::from_env();
        settings.max_tokens = config.max_new_tokens;
        if (!std::getenv("LLM_TIMEOUT_MS")) settings.timeout = std::chrono::milliseconds(config.llm_timeout_ms);
        return std::make_shared<HttpChatClient>(std::move(settings));
    }
    return std::make_shared<MockLlm>(parse_mock_mode(config.llm), std::move(answers));
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<EmbeddingProvider> embedder, std::shared_ptr<LlmClient> llm)
    : config_(std::move(config)), embedder_(std::move(embedder)), llm_(std::move(llm)) {
    if (!embedder_) throw ValidationError("pipeline needs an embedding provider");
    if (static_cast<std::size_t>(config_.embed_dim) != embedder_->dim()) {
        config_.embed_dim = static_cast<int>(embedder_->dim());
    }
    config_.reasoning_config.input_dim = config_.embed_dim;
    config_.validate();
    if (config_.reasoning) {
        auto w = config_.weights_path.empty() ? ReasoningWeights::init(config_.reasoning_config)
                                              : load_weights(config_.weights_path);
        if (w.config.effective_input_dim() != config_.embed_dim) {
            throw DimensionMismatch("weights take inputs of width " + std::to_string(w.config.effective_input_dim()) +
                                    ", embeddings have width " + std::to_string(config_.embed_dim));
        }
        weights_ = std::make_shared<const ReasoningWeights>(std::move(w));
    }
}

std::vector<EmbeddingVector> Pipeline::embed(const std::vector<std::string>& texts) const {
    if (config_.embed_cache.empty()) return embed_texts(texts, *embedder_);
    return cache_get_or_embed(texts, *embedder_, config_.embed_cache);
}

LiftedGraph Pipeline::lift(TextualGraph graph) const {
    validate_graph(graph);
    std::vector<std::string> texts;
    texts.reserve(graph.num_nodes() + graph.num_edges());
    for (const auto& n : graph.nodes) texts.push_back(n.text);
    for (const auto& e : graph.edges) texts.push_back(e.text);
    auto vecs = embed(texts);
    std::vector<EmbeddingVector> edge_vecs(vecs.begin() + static_cast<std::ptrdiff_t>(graph.num_nodes()), vecs.end());
    vecs.resize(graph.num_nodes());
    auto complex = toporag::lift(graph, std::move(vecs), std::move(edge_vecs), config_.tree_policy,
                                 config_.cycle_aggregation, embedder_->fingerprint());
    return {std::move(graph), std::move(complex)};
}

RetrievalResult Pipeline::retrieve(const LiftedGraph& lifted, const std::string& question) const {
    return retrieve(lifted, question, config_.k2);
}

RetrievalResult Pipeline::retrieve(const LiftedGraph& lifted, const std::string& question, int k2) const {
    const auto& cx = lifted.complex;
    if (cx.num_vertices == 0) throw EmptyCandidates("graph has no nodes");
    const std::string texts[] = {question};
    const auto query = embed_texts(texts, *embedder_).front();
    RetrievalResult r;
    r.ranked0 = topk_cells(cx, query, 0, config_.prize.k0);
    r.ranked1 = topk_cells(cx, query, 1, config_.prize.k1);
    r.assignment = assign_prizes(r.ranked0, r.ranked1, cx, config_.prize);
    r.two_cells = topk_two_cells(r.assignment, cx, k2);
    r.subcomplex = solve_subcomplex(cx, r.assignment, r.two_cells);
    return r;
}

AnswerResult Pipeline::answer(const LiftedGraph& lifted, const std::string& question) const {
    if (!llm_) throw ValidationError("pipeline has no LLM client");
    const auto start = std::chrono::steady_clock::now();
    AnswerResult a;
    a.retrieval = retrieve(lifted, question);
    if (weights_) {
        a.soft_prompt = run_reasoning(lifted.complex, a.retrieval.subcomplex, *weights_).projected;
    }
    a.text = textualize(a.retrieval.subcomplex, lifted.complex, lifted.graph);
    a.prompt = build_prompt(a.text.rendered, question, config_.preamble, config_.max_input_tokens);
    a.completion = generate(a.prompt, *llm_);
    a.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return a;
}

}  // namespace toporag

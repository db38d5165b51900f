#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toporag/config.hpp"
#include "toporag/embedding.hpp"
#include "toporag/generation.hpp"
#include "toporag/graph_io.hpp"
#include "toporag/lifting.hpp"
#include "toporag/reasoning.hpp"
#include "toporag/retrieval.hpp"

namespace toporag {

struct LiftedGraph {
    TextualGraph graph;
    CellComplex complex;
};

struct RetrievalResult {
    std::vector<RankedCell> ranked0, ranked1;
    PrizeAssignment assignment;
    std::vector<int> two_cells;  // offered to the solver, in order
    Subcomplex subcomplex;
};

struct AnswerResult {
    Completion completion;
    RetrievalResult retrieval;
    TextualizedSubcomplex text;
    PromptBundle prompt;
    Eigen::VectorXd soft_prompt;  // empty when reasoning is disabled
    double latency_ms = 0.0;
};

std::shared_ptr<EmbeddingProvider> make_embedder(const PipelineConfig& config);
// `answers` maps questions to gold strings for the lookup and
// contains-context mocks.
std::shared_ptr<LlmClient> make_llm(const PipelineConfig& config, std::map<std::string, std::string> answers = {});

// lift -> retrieve -> reason -> textualize -> generate. All methods are const
// and may be called concurrently.
class Pipeline {
public:
    Pipeline(PipelineConfig config, std::shared_ptr<EmbeddingProvider> embedder, std::shared_ptr<LlmClient> llm);

    const PipelineConfig& config() const noexcept { return config_; }
    const ReasoningWeights* weights() const noexcept { return weights_.get(); }

    LiftedGraph lift(TextualGraph graph) const;
    RetrievalResult retrieve(const LiftedGraph& lifted, const std::string& question) const;
    RetrievalResult retrieve(const LiftedGraph& lifted, const std::string& question, int k2) const;
    AnswerResult answer(const LiftedGraph& lifted, const std::string& question) const;

private:
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const;

    PipelineConfig config_;
    std::shared_ptr<EmbeddingProvider> embedder_;
    std::shared_ptr<LlmClient> llm_;
    std::shared_ptr<const ReasoningWeights> weights_;
};

}  // namespace toporag

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "toporag/lifting.hpp"
#include "toporag/retrieval.hpp"

namespace toporag {

enum class Activation { kRelu, kTanh, kIdentity };
enum class Aggregation { kSum, kMean };

Activation parse_activation(const std::string& name);
std::string to_string(Activation activation);
Aggregation parse_aggregation(const std::string& name);
std::string to_string(Aggregation aggregation);

struct ReasoningConfig {
    int layers = 2;             // stage-1 hops
    int state_dim = 1024;
    int input_dim = 0;          // embedding width; 0 means state_dim
    int llm_dim = 4096;         // generator hidden width
    int projection_hidden = 0;  // 0: a single affine projection
    Activation activation = Activation::kRelu;
    Aggregation aggregation = Aggregation::kSum;
    std::uint64_t seed = 0;

    int effective_input_dim() const noexcept { return input_dim > 0 ? input_dim : state_dim; }
    void validate() const;
    bool operator==(const ReasoningConfig&) const = default;
};

// y = W x + b, stored in single precision.
struct AffineMap {
    Eigen::MatrixXf weight;  // out x in
    Eigen::VectorXf bias;

    int in_dim() const noexcept { return static_cast<int>(weight.cols()); }
    int out_dim() const noexcept { return static_cast<int>(weight.rows()); }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

    static AffineMap zeros(int in, int out);
    // Identity on the leading min(in, out) block, zero elsewhere.
    static AffineMap identity(int in, int out);
    bool operator==(const AffineMap& other) const;
};

// UPDATE takes [h; m_face; m_coface] in stage 1 and [h; m_face; m_coface;
// m_upper] in stage 2. face and coface take [h_x; h_y]; upper takes
// [h_x; h_w; h_coface]. `upper` is empty (0 x 0) for stage-1 layers.
struct MessageLayer {
    AffineMap update, face, coface, upper;
    bool operator==(const MessageLayer&) const = default;
};

struct ReasoningWeights {
    ReasoningConfig config;
    std::optional<AffineMap> input;  // present when input_dim != state_dim
    std::vector<MessageLayer> stage1;
    MessageLayer stage2;
    std::vector<AffineMap> projection;  // one map, or hidden + output

    // Seeded uniform in [-1/sqrt(d_s), 1/sqrt(d_s)].
    static ReasoningWeights init(const ReasoningConfig& config);
    void validate() const;
    std::vector<std::pair<std::string, const AffineMap*>> named_maps() const;
    bool operator==(const ReasoningWeights&) const = default;
};

// JSON header line followed by little-endian float32 weights then biases,
// map by map in named_maps() order.
std::string serialize_weights(const ReasoningWeights& weights);
ReasoningWeights deserialize_weights(std::string_view bytes);
void save_weights(const std::filesystem::path& path, const ReasoningWeights& weights);
ReasoningWeights load_weights(const std::filesystem::path& path);

struct CellKey {
    int dim = 0;
    int id = -1;
    auto operator<=>(const CellKey&) const = default;
};

// Incidence of a subcomplex in local indices (0-cells, then 1-cells, then
// 2-cells, each in the subcomplex's order).
struct SubcomplexIncidence {
    std::vector<CellKey> cells;
    std::vector<std::vector<int>> faces;
    std::vector<std::vector<int>> skeleton_cofaces;  // cofaces within the 1-skeleton
    std::vector<std::vector<int>> cofaces;
    std::vector<std::vector<std::pair<int, int>>> upper;  // (neighbour, shared coface)

    std::size_t size() const noexcept { return cells.size(); }
};

SubcomplexIncidence build_incidence(const CellComplex& complex, const Subcomplex& subcomplex);

struct CellStates {
    int layer = 0;
    std::vector<CellKey> cells;
    Eigen::MatrixXd values;  // d_s x |cells|, column per cell

    std::size_t size() const noexcept { return cells.size(); }
    Eigen::VectorXd state(CellKey key) const;
};

CellStates init_states(const CellComplex& complex, const Subcomplex& subcomplex, const ReasoningWeights& weights);
CellStates stage1_pass(const CellStates& states, const SubcomplexIncidence& incidence,
                       const ReasoningWeights& weights);
CellStates stage2_pass(const CellStates& states, const SubcomplexIncidence& incidence,
                       const ReasoningWeights& weights);
Eigen::VectorXd pool(const CellStates& states);
Eigen::VectorXd project(const Eigen::VectorXd& pooled, const ReasoningWeights& weights);

struct ReasoningOutput {
    CellStates states;
    Eigen::VectorXd pooled;
    Eigen::VectorXd projected;
};

ReasoningOutput run_reasoning(const CellComplex& complex, const Subcomplex& subcomplex,
                              const ReasoningWeights& weights);

}  // namespace toporag

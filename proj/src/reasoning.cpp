#include "toporag/reasoning.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <map>

#include <nlohmann/json.hpp>

#include "toporag/errors.hpp"
#include "toporag/graph_io.hpp"
#include "toporag/rng.hpp"

namespace toporag {

using nlohmann::json;

namespace {

std::size_t at(int i) { return static_cast<std::size_t>(i); }

constexpr std::string_view kWeightsFormat = "toporag-weights-v1";

void apply_activation(Eigen::Ref<Eigen::MatrixXd> x, Activation a) {
    switch (a) {
        case Activation::kRelu: x = x.cwiseMax(0.0); break;
        case Activation::kTanh: x = x.array().tanh().matrix(); break;
        case Activation::kIdentity: break;
    }
}

void check_map(const AffineMap& map, int in, int out, const std::string& name) {
    if (map.in_dim() != in || map.out_dim() != out || map.bias.size() != out) {
        throw DimensionMismatch(name + " has shape " + std::to_string(map.out_dim()) + "x" +
                                std::to_string(map.in_dim()) + ", expected " + std::to_string(out) + "x" +
                                std::to_string(in));
    }
    if (!map.weight.allFinite() || !map.bias.allFinite()) throw ValidationError(name + " has non-finite entries");
}

AffineMap random_map(int in, int out, double bound, SplitMix64& rng) {
    AffineMap m = AffineMap::zeros(in, out);
    for (int c = 0; c < in; ++c) {
        for (int r = 0; r < out; ++r) m.weight(r, c) = static_cast<float>(rng.uniform(-bound, bound));
    }
    for (int r = 0; r < out; ++r) m.bias(r) = static_cast<float>(rng.uniform(-bound, bound));
    return m;
}

}  // namespace

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::kRelu;
    if (name == "tanh") return Activation::kTanh;
    if (name == "identity") return Activation::kIdentity;
    throw ValidationError("unknown activation '" + name + "'");
}

std::string to_string(Activation activation) {
    switch (activation) {
        case Activation::kRelu: return "relu";
        case Activation::kTanh: return "tanh";
        case Activation::kIdentity: return "identity";
    }
    return "relu";
}

Aggregation parse_aggregation(const std::string& name) {
    if (name == "sum") return Aggregation::kSum;
    if (name == "mean") return Aggregation::kMean;
    throw ValidationError("unknown aggregation '" + name + "'");
}

std::string to_string(Aggregation aggregation) {
    return aggregation == Aggregation::kSum ? "sum" : "mean";
}

void ReasoningConfig::validate() const {
    if (layers < 1) throw ValidationError("layers must be at least 1");
    if (state_dim <= 0) throw ValidationError("state_dim must be positive");
    if (input_dim < 0) throw ValidationError("input_dim must be non-negative");
    if (llm_dim <= 0) throw ValidationError("llm_dim must be positive");
    if (projection_hidden < 0) throw ValidationError("projection_hidden must be non-negative");
}

Eigen::VectorXd AffineMap::apply(const Eigen::VectorXd& x) const {
    if (x.size() != in_dim()) {
        throw DimensionMismatch("input of size " + std::to_string(x.size()) + " for a map taking " +
                                std::to_string(in_dim()));
    }
    return weight.cast<double>() * x + bias.cast<double>();
}

AffineMap AffineMap::zeros(int in, int out) {
    return {Eigen::MatrixXf::Zero(out, in), Eigen::VectorXf::Zero(out)};
}

AffineMap AffineMap::identity(int in, int out) {
    return {Eigen::MatrixXf::Identity(out, in), Eigen::VectorXf::Zero(out)};
}

bool AffineMap::operator==(const AffineMap& other) const {
    return weight.rows() == other.weight.rows() && weight.cols() == other.weight.cols() &&
           bias.size() == other.bias.size() && weight == other.weight && bias == other.bias;
}

ReasoningWeights ReasoningWeights::init(const ReasoningConfig& config) {
    config.validate();
    const int d = config.state_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    SplitMix64 rng(config.seed);
    ReasoningWeights w;
    w.config = config;
    if (config.effective_input_dim() != d) w.input = random_map(config.effective_input_dim(), d, bound, rng);
    for (int l = 0; l < config.layers; ++l) {
        MessageLayer layer;
        layer.update = random_map(3 * d, d, bound, rng);
        layer.face = random_map(2 * d, d, bound, rng);
        layer.coface = random_map(2 * d, d, bound, rng);
        layer.upper = AffineMap::zeros(0, 0);
        w.stage1.push_back(std::move(layer));
    }
    w.stage2.update = random_map(4 * d, d, bound, rng);
    w.stage2.face = random_map(2 * d, d, bound, rng);
    w.stage2.coface = random_map(2 * d, d, bound, rng);
    w.stage2.upper = random_map(3 * d, d, bound, rng);
    if (config.projection_hidden > 0) {
        w.projection.push_back(random_map(d, config.projection_hidden, bound, rng));
        w.projection.push_back(random_map(config.projection_hidden, config.llm_dim, bound, rng));
    } else {
        w.projection.push_back(random_map(d, config.llm_dim, bound, rng));
    }
    return w;
}

void ReasoningWeights::validate() const {
    config.validate();
    const int d = config.state_dim;
    if (config.effective_input_dim() != d) {
        if (!input) throw DimensionMismatch("input projection missing");
        check_map(*input, config.effective_input_dim(), d, "input");
    } else if (input) {
        throw DimensionMismatch("unexpected input projection");
    }
    if (stage1.size() != at(config.layers)) throw DimensionMismatch("stage-1 layer count mismatch");
    for (std::size_t l = 0; l < stage1.size(); ++l) {
        const auto p = "stage1." + std::to_string(l) + ".";
        check_map(stage1[l].update, 3 * d, d, p + "update");
        check_map(stage1[l].face, 2 * d, d, p + "face");
        check_map(stage1[l].coface, 2 * d, d, p + "coface");
    }
    check_map(stage2.update, 4 * d, d, "stage2.update");
    check_map(stage2.face, 2 * d, d, "stage2.face");
    check_map(stage2.coface, 2 * d, d, "stage2.coface");
    check_map(stage2.upper, 3 * d, d, "stage2.upper");
    if (config.projection_hidden > 0) {
        if (projection.size() != 2) throw DimensionMismatch("projection expects two maps");
        check_map(projection[0], d, config.projection_hidden, "projection.0");
        check_map(projection[1], config.projection_hidden, config.llm_dim, "projection.1");
    } else {
        if (projection.size() != 1) throw DimensionMismatch("projection expects one map");
        check_map(projection[0], d, config.llm_dim, "projection.0");
    }
}

std::vector<std::pair<std::string, const AffineMap*>> ReasoningWeights::named_maps() const {
    std::vector<std::pair<std::string, const AffineMap*>> out;
    if (input) out.emplace_back("input", &*input);
    for (std::size_t l = 0; l < stage1.size(); ++l) {
        const auto p = "stage1." + std::to_string(l) + ".";
        out.emplace_back(p + "update", &stage1[l].update);
        out.emplace_back(p + "face", &stage1[l].face);
        out.emplace_back(p + "coface", &stage1[l].coface);
    }
    out.emplace_back("stage2.update", &stage2.update);
    out.emplace_back("stage2.face", &stage2.face);
    out.emplace_back("stage2.coface", &stage2.coface);
    out.emplace_back("stage2.upper", &stage2.upper);
    for (std::size_t i = 0; i < projection.size(); ++i) {
        out.emplace_back("projection." + std::to_string(i), &projection[i]);
    }
    return out;
}

namespace {

void put_float(std::string& out, float value) {
    auto bits = std::bit_cast<std::uint32_t>(value);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float get_float(std::string_view bytes, std::size_t offset) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + at(i)])) << (8 * i);
    }
    return std::bit_cast<float>(bits);
}

}  // namespace

std::string serialize_weights(const ReasoningWeights& weights) {
    weights.validate();
    const auto& c = weights.config;
    json maps = json::array();
    for (const auto& [name, map] : weights.named_maps()) {
        maps.push_back({{"name", name}, {"in", map->in_dim()}, {"out", map->out_dim()}});
    }
    json header = {
        {"format", kWeightsFormat},
        {"layers", c.layers},
        {"state_dim", c.state_dim},
        {"input_dim", c.input_dim},
        {"llm_dim", c.llm_dim},
        {"projection_hidden", c.projection_hidden},
        {"activation", to_string(c.activation)},
        {"aggregation", to_string(c.aggregation)},
        {"seed", c.seed},
        {"maps", std::move(maps)},
    };
    std::string out = header.dump() + "\n";
    for (const auto& [name, map] : weights.named_maps()) {
        for (int col = 0; col < map->in_dim(); ++col) {
            for (int row = 0; row < map->out_dim(); ++row) put_float(out, map->weight(row, col));
        }
        for (int row = 0; row < map->out_dim(); ++row) put_float(out, map->bias(row));
    }
    return out;
}

ReasoningWeights deserialize_weights(std::string_view bytes) {
    const auto newline = bytes.find('\n');
    if (newline == std::string_view::npos) throw ParseError("weight file has no header line");
    ReasoningConfig c;
    json header;
    try {
        header = json::parse(bytes.substr(0, newline));
        if (header.at("format").get<std::string>() != kWeightsFormat) throw ParseError("unknown weight format");
        c.layers = header.at("layers").get<int>();
        c.state_dim = header.at("state_dim").get<int>();
        c.input_dim = header.at("input_dim").get<int>();
        c.llm_dim = header.at("llm_dim").get<int>();
        c.projection_hidden = header.at("projection_hidden").get<int>();
        c.activation = parse_activation(header.at("activation").get<std::string>());
        c.aggregation = parse_aggregation(header.at("aggregation").get<std::string>());
        c.seed = header.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("weight header: ") + e.what());
    }
    c.validate();

    // Shapes follow from the config; the header's map list must agree.
    ReasoningWeights w;
    w.config = c;
    const int d = c.state_dim;
    if (c.effective_input_dim() != d) w.input = AffineMap::zeros(c.effective_input_dim(), d);
    for (int l = 0; l < c.layers; ++l) {
        w.stage1.push_back({AffineMap::zeros(3 * d, d), AffineMap::zeros(2 * d, d), AffineMap::zeros(2 * d, d),
                            AffineMap::zeros(0, 0)});
    }
    w.stage2 = {AffineMap::zeros(4 * d, d), AffineMap::zeros(2 * d, d), AffineMap::zeros(2 * d, d),
                AffineMap::zeros(3 * d, d)};
    if (c.projection_hidden > 0) {
        w.projection = {AffineMap::zeros(d, c.projection_hidden), AffineMap::zeros(c.projection_hidden, c.llm_dim)};
    } else {
        w.projection = {AffineMap::zeros(d, c.llm_dim)};
    }

    auto named = w.named_maps();
    const auto& listed = header.at("maps");
    if (!listed.is_array() || listed.size() != named.size()) throw ParseError("weight header map list mismatch");
    std::size_t expected = newline + 1;
    for (std::size_t i = 0; i < named.size(); ++i) {
        const auto& [name, map] = named[i];
        if (listed[i].value("name", "") != name || listed[i].value("in", -1) != map->in_dim() ||
            listed[i].value("out", -1) != map->out_dim()) {
            throw ParseError("weight header entry " + std::to_string(i) + " does not match " + name);
        }
        expected += 4 * (at(map->in_dim()) * at(map->out_dim()) + at(map->out_dim()));
    }
    if (bytes.size() != expected) {
        throw ParseError("weight payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                         std::to_string(expected));
    }
    std::size_t offset = newline + 1;
    for (auto& [name, cmap] : named) {
        auto* map = const_cast<AffineMap*>(cmap);
        for (int col = 0; col < map->in_dim(); ++col) {
            for (int row = 0; row < map->out_dim(); ++row, offset += 4) map->weight(row, col) = get_float(bytes, offset);
        }
        for (int row = 0; row < map->out_dim(); ++row, offset += 4) map->bias(row) = get_float(bytes, offset);
    }
    w.validate();
    return w;
}

void save_weights(const std::filesystem::path& path, const ReasoningWeights& weights) {
    write_file_atomic(path, serialize_weights(weights));
}

ReasoningWeights load_weights(const std::filesystem::path& path) {
    return deserialize_weights(read_file(path));
}

// ---------------------------------------------------------------------------

SubcomplexIncidence build_incidence(const CellComplex& complex, const Subcomplex& sub) {
    SubcomplexIncidence inc;
    std::map<CellKey, int> local;
    for (int v : sub.cells0) inc.cells.push_back({0, v});
    for (int e : sub.cells1) inc.cells.push_back({1, e});
    for (int f : sub.cells2) inc.cells.push_back({2, f});
    for (std::size_t i = 0; i < inc.cells.size(); ++i) {
        const auto& key = inc.cells[i];
        if (key.id < 0 || at(key.id) >= complex.num_cells(key.dim)) {
            throw DanglingCell(std::to_string(key.dim) + "-cell " + std::to_string(key.id) + " is not in the complex");
        }
        if (!local.emplace(key, static_cast<int>(i)).second) throw ValidationError("subcomplex lists a cell twice");
    }
    const auto n = inc.cells.size();
    inc.faces.resize(n);
    inc.skeleton_cofaces.resize(n);
    inc.cofaces.resize(n);
    inc.upper.resize(n);
    auto find = [&](int dim, int id) {
        auto it = local.find({dim, id});
        return it == local.end() ? -1 : it->second;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto [dim, id] = inc.cells[i];
        if (dim == 0) continue;
        std::vector<int> boundary = complex.boundary(dim, id);
        for (int face : boundary) {
            const int j = find(dim - 1, face);
            if (j < 0) throw ValidationError("subcomplex is not closed under boundary");
            inc.faces[i].push_back(j);
            inc.cofaces[at(j)].push_back(static_cast<int>(i));
            if (dim == 1) inc.skeleton_cofaces[at(j)].push_back(static_cast<int>(i));
        }
    }
    // Upper adjacency: every other face of a shared selected coface.
    for (std::size_t c = 0; c < n; ++c) {
        const auto& faces = inc.faces[c];
        for (std::size_t a = 0; a < faces.size(); ++a) {
            for (std::size_t b = 0; b < faces.size(); ++b) {
                if (a != b && faces[a] != faces[b]) inc.upper[at(faces[a])].emplace_back(faces[b], static_cast<int>(c));
            }
        }
    }
    return inc;
}

Eigen::VectorXd CellStates::state(CellKey key) const {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == key) return values.col(static_cast<Eigen::Index>(i));
    }
    throw ValidationError(std::to_string(key.dim) + "-cell " + std::to_string(key.id) + " has no state");
}

CellStates init_states(const CellComplex& complex, const Subcomplex& sub, const ReasoningWeights& weights) {
    const auto& z = complex.embeddings;
    const int in = weights.config.effective_input_dim();
    CellStates s;
    for (int v : sub.cells0) s.cells.push_back({0, v});
    for (int e : sub.cells1) s.cells.push_back({1, e});
    for (int f : sub.cells2) s.cells.push_back({2, f});
    s.values.resize(weights.config.state_dim, static_cast<Eigen::Index>(s.cells.size()));
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
        const auto [dim, id] = s.cells[i];
        const auto& table = dim == 0 ? z.z0 : dim == 1 ? z.z1 : z.z2;
        if (id < 0 || at(id) >= table.size()) {
            throw DimensionMismatch("no embedding for " + std::to_string(dim) + "-cell " + std::to_string(id));
        }
        const auto& vec = table[at(id)];
        if (static_cast<int>(vec.dim()) != in) {
            throw DimensionMismatch("embedding of width " + std::to_string(vec.dim()) + " for input width " +
                                    std::to_string(in));
        }
        Eigen::VectorXd x(in);
        for (int k = 0; k < in; ++k) x(k) = vec[at(k)];
        s.values.col(static_cast<Eigen::Index>(i)) = weights.input ? weights.input->apply(x) : x;
    }
    return s;
}

namespace {

struct SplitMap {
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::VectorXd bias;
};

SplitMap split(const AffineMap& map, int parts, int d) {
    SplitMap out;
    for (int p = 0; p < parts; ++p) out.blocks.push_back(map.weight.middleCols(p * d, d).cast<double>());
    out.bias = map.bias.cast<double>();
    return out;
}

// Aggregated pairwise messages: AGG_y act(A h_x + B h_y + b).
Eigen::MatrixXd pair_messages(const Eigen::MatrixXd& h, const SplitMap& map,
                              const std::vector<std::vector<int>>& neighbours, const ReasoningConfig& config,
                              const std::vector<char>& active) {
    const Eigen::MatrixXd self = map.blocks[0] * h;
    const Eigen::MatrixXd other = map.blocks[1] * h;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h.rows(), h.cols());
    Eigen::VectorXd msg(h.rows());
    for (Eigen::Index x = 0; x < h.cols(); ++x) {
        if (!active[at(static_cast<int>(x))] || neighbours[at(static_cast<int>(x))].empty()) continue;
        for (int y : neighbours[at(static_cast<int>(x))]) {
            msg = self.col(x) + other.col(y) + map.bias;
            apply_activation(msg, config.activation);
            out.col(x) += msg;
        }
        if (config.aggregation == Aggregation::kMean) {
            out.col(x) /= static_cast<double>(neighbours[at(static_cast<int>(x))].size());
        }
    }
    return out;
}

Eigen::MatrixXd upper_messages(const Eigen::MatrixXd& h, const SplitMap& map,
                               const std::vector<std::vector<std::pair<int, int>>>& upper,
                               const ReasoningConfig& config) {
    const Eigen::MatrixXd self = map.blocks[0] * h;
    const Eigen::MatrixXd neighbour = map.blocks[1] * h;
    const Eigen::MatrixXd coface = map.blocks[2] * h;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h.rows(), h.cols());
    Eigen::VectorXd msg(h.rows());
    for (Eigen::Index x = 0; x < h.cols(); ++x) {
        const auto& list = upper[at(static_cast<int>(x))];
        if (list.empty()) continue;
        for (auto [w, c] : list) {
            msg = self.col(x) + neighbour.col(w) + coface.col(c) + map.bias;
            apply_activation(msg, config.activation);
            out.col(x) += msg;
        }
        if (config.aggregation == Aggregation::kMean) out.col(x) /= static_cast<double>(list.size());
    }
    return out;
}

void check_states(const CellStates& states, const SubcomplexIncidence& inc, const ReasoningWeights& weights) {
    if (states.values.rows() != weights.config.state_dim) throw DimensionMismatch("state width does not match weights");
    if (states.cells != inc.cells || states.values.cols() != static_cast<Eigen::Index>(inc.size())) {
        throw DimensionMismatch("states do not match the subcomplex incidence");
    }
}

}  // namespace

CellStates stage1_pass(const CellStates& states, const SubcomplexIncidence& inc, const ReasoningWeights& weights) {
    weights.validate();
    check_states(states, inc, weights);
    const auto& config = weights.config;
    const auto n = inc.size();
    std::vector<char> skeleton(n);
    for (std::size_t i = 0; i < n; ++i) skeleton[i] = inc.cells[i].dim < 2;
    // Faces of 0- and 1-cells already live in the 1-skeleton.
    CellStates cur = states;
    for (const auto& layer : weights.stage1) {
        const Eigen::MatrixXd& h = cur.values;
        const Eigen::MatrixXd mf = pair_messages(h, split(layer.face, 2, config.state_dim), inc.faces, config, skeleton);
        const Eigen::MatrixXd mc =
            pair_messages(h, split(layer.coface, 2, config.state_dim), inc.skeleton_cofaces, config, skeleton);
        const auto up = split(layer.update, 3, config.state_dim);
        Eigen::MatrixXd next = up.blocks[0] * h + up.blocks[1] * mf + up.blocks[2] * mc;
        next.colwise() += up.bias;
        apply_activation(next, config.activation);
        for (std::size_t i = 0; i < n; ++i) {
            if (!skeleton[i]) next.col(static_cast<Eigen::Index>(i)) = h.col(static_cast<Eigen::Index>(i));
        }
        cur.values = std::move(next);
        ++cur.layer;
    }
    return cur;
}

CellStates stage2_pass(const CellStates& states, const SubcomplexIncidence& inc, const ReasoningWeights& weights) {
    weights.validate();
    check_states(states, inc, weights);
    const auto& config = weights.config;
    const int d = config.state_dim;
    const std::vector<char> all(inc.size(), 1);
    const Eigen::MatrixXd& h = states.values;
    const Eigen::MatrixXd mf = pair_messages(h, split(weights.stage2.face, 2, d), inc.faces, config, all);
    const Eigen::MatrixXd mc = pair_messages(h, split(weights.stage2.coface, 2, d), inc.cofaces, config, all);
    const Eigen::MatrixXd mu = upper_messages(h, split(weights.stage2.upper, 3, d), inc.upper, config);
    const auto up = split(weights.stage2.update, 4, d);
    Eigen::MatrixXd next = up.blocks[0] * h + up.blocks[1] * mf + up.blocks[2] * mc + up.blocks[3] * mu;
    next.colwise() += up.bias;
    apply_activation(next, config.activation);
    CellStates out;
    out.layer = states.layer + 1;
    out.cells = states.cells;
    out.values = std::move(next);
    return out;
}

Eigen::VectorXd pool(const CellStates& states) {
    if (states.values.cols() == 0) throw EmptySubcomplex("cannot pool an empty subcomplex");
    return states.values.rowwise().mean();
}

Eigen::VectorXd project(const Eigen::VectorXd& pooled, const ReasoningWeights& weights) {
    if (weights.projection.empty()) throw DimensionMismatch("no projection weights");
    Eigen::VectorXd x = pooled;
    for (std::size_t i = 0; i < weights.projection.size(); ++i) {
        x = weights.projection[i].apply(x);
        if (i + 1 < weights.projection.size()) apply_activation(x, weights.config.activation);
    }
    return x;
}

ReasoningOutput run_reasoning(const CellComplex& complex, const Subcomplex& subcomplex,
                              const ReasoningWeights& weights) {
    const auto inc = build_incidence(complex, subcomplex);
    auto states = init_states(complex, subcomplex, weights);
    states = stage2_pass(stage1_pass(states, inc, weights), inc, weights);
    ReasoningOutput out;
    out.pooled = pool(states);
    out.projected = project(out.pooled, weights);
    out.states = std::move(states);
    return out;
}

}  // namespace toporag

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace toporag {

// Dense text embedding. Entries are finite 32-bit floats.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<float> values);

    std::size_t dim() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    std::span<const float> values() const noexcept { return values_; }
    float operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<float> values_;
};

// Cosine similarity accumulated in double. Throws DimensionMismatch on
// unequal lengths and ZeroVector when both inputs are zero; a single zero
// input scores 0.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
    virtual std::size_t dim() const noexcept = 0;
    // Identifies the model and its settings; caches are keyed on it.
    virtual std::string fingerprint() const = 0;
};

std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                         EmbeddingProvider& provider);

// Offline provider. Each lowercase alphanumeric token seeds a SplitMix64
// stream that yields a pseudo-random direction; a text's vector is the unit
// normalized sum of its token directions. Texts that share tokens therefore
// have positive cosine, which is enough signal for hermetic retrieval tests.
// Pure function of (text, seed, dim) and bit-identical across platforms.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::uint64_t seed = 0, std::size_t dim = 1024);

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    std::size_t dim() const noexcept override { return dim_; }
    std::string fingerprint() const override;

    EmbeddingVector embed_one(const std::string& text) const;

private:
    std::uint64_t seed_;
    std::size_t dim_;
};

struct HttpEmbeddingSettings {
    std::string api_base;  // scheme://host[:port][/prefix]
    std::string api_key;
    std::string model;
    std::size_t dim = 1024;
    std::chrono::milliseconds timeout{30000};
    std::size_t batch_size = 64;

    // EMBED_API_BASE, EMBED_API_KEY, EMBED_MODEL.
    static HttpEmbeddingSettings from_env(std::size_t dim = 1024);
};

// Client for the `POST /v1/embeddings` JSON API.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpEmbeddingSettings settings);

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    std::size_t dim() const noexcept override { return settings_.dim; }
    std::string fingerprint() const override;

private:
    HttpEmbeddingSettings settings_;
};

// Request/response bodies of the embeddings API, exposed for testing.
std::string embeddings_request_body(const std::string& model, std::span<const std::string> texts);
std::vector<EmbeddingVector> parse_embeddings_response(const std::string& body, std::size_t expected,
                                                       std::size_t dim);

// On-disk embedding cache. File layout: one JSON header line
// {"count":N,"dim":D,"fingerprint":F,"texts":[...]} followed by N rows of D
// little-endian float32 values, row i holding the vector of texts[i].
// Writes are serialized; the file is replaced atomically.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path path);

    std::vector<EmbeddingVector> get_or_embed(std::span<const std::string> texts,
                                              EmbeddingProvider& provider);

    const std::filesystem::path& path() const noexcept { return path_; }

    struct Contents {
        std::string fingerprint;
        std::size_t dim = 0;
        std::vector<std::string> texts;
        std::vector<EmbeddingVector> rows;
    };
    // Throws CacheCorrupt on a malformed file.
    static Contents read(const std::filesystem::path& path);
    static std::string serialize(const Contents& contents);

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

std::vector<EmbeddingVector> cache_get_or_embed(std::span<const std::string> texts,
                                                EmbeddingProvider& provider,
                                                const std::filesystem::path& cache);

}  // namespace toporag

#include "toporag/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "toporag/errors.hpp"
#include "toporag/graph_io.hpp"
#include "toporag/rng.hpp"

namespace toporag {

namespace fs = std::filesystem;
using nlohmann::json;

EmbeddingVector::EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
    for (float v : values_) {
        if (!std::isfinite(v)) throw ValidationError("embedding has a non-finite entry");
    }
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw DimensionMismatch("cosine of dims " + std::to_string(a.dim()) + " and " +
                                std::to_string(b.dim()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double x = av[i];
        const double y = bv[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 && nb == 0.0) throw ZeroVector("cosine of two zero vectors");
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                         EmbeddingProvider& provider) {
    auto out = provider.embed(texts);
    if (out.size() != texts.size()) {
        throw DimensionMismatch("provider returned " + std::to_string(out.size()) + " vectors for " +
                                std::to_string(texts.size()) + " texts");
    }
    for (const auto& v : out) {
        if (v.dim() != provider.dim()) {
            throw DimensionMismatch("provider returned dim " + std::to_string(v.dim()) +
                                    ", expected " + std::to_string(provider.dim()));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

HashEmbeddingProvider::HashEmbeddingProvider(std::uint64_t seed, std::size_t dim)
    : seed_(seed), dim_(dim) {
    if (dim == 0) throw ValidationError("embedding dim must be positive");
}

std::string HashEmbeddingProvider::fingerprint() const {
    return "hash-v1:seed=" + std::to_string(seed_) + ":dim=" + std::to_string(dim_);
}

namespace {

std::vector<std::string> hash_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80) {
            cur += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

}  // namespace

EmbeddingVector HashEmbeddingProvider::embed_one(const std::string& text) const {
    auto tokens = hash_tokens(text);
    if (tokens.empty()) tokens.emplace_back();  // empty and punctuation-only texts share a direction

    std::vector<double> acc(dim_, 0.0);
    for (const auto& tok : tokens) {
        SplitMix64 rng(fnv1a64(tok) ^ (seed_ * 0x9e3779b97f4a7c15ULL));
        for (auto& a : acc) a += rng.uniform(-1.0, 1.0);
    }
    double norm = 0.0;
    for (double a : acc) norm += a * a;
    norm = std::sqrt(norm);
    std::vector<float> values(dim_);
    for (std::size_t i = 0; i < dim_; ++i) values[i] = static_cast<float>(acc[i] / norm);
    return EmbeddingVector(std::move(values));
}

std::vector<EmbeddingVector> HashEmbeddingProvider::embed(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

// ---------------------------------------------------------------------------

HttpEmbeddingSettings HttpEmbeddingSettings::from_env(std::size_t dim) {
    auto env = [](const char* name, const char* fallback) {
        const char* v = std::getenv(name);
        return std::string(v ? v : fallback);
    };
    HttpEmbeddingSettings s;
    s.api_base = env("EMBED_API_BASE", "http://127.0.0.1:8000");
    s.api_key = env("EMBED_API_KEY", "");
    s.model = env("EMBED_MODEL", "sentence-transformers/all-roberta-large-v1");
    s.dim = dim;
    return s;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingSettings settings)
    : settings_(std::move(settings)) {}

std::string HttpEmbeddingProvider::fingerprint() const {
    return "http:" + settings_.api_base + ":" + settings_.model + ":dim=" + std::to_string(settings_.dim);
}

std::string embeddings_request_body(const std::string& model, std::span<const std::string> texts) {
    json body = {{"model", model}, {"input", json(std::vector<std::string>(texts.begin(), texts.end()))}};
    return body.dump();
}

std::vector<EmbeddingVector> parse_embeddings_response(const std::string& body, std::size_t expected,
                                                       std::size_t dim) {
    std::vector<EmbeddingVector> out(expected);
    try {
        const auto doc = json::parse(body);
        const auto& data = doc.at("data");
        if (data.size() != expected) {
            throw DimensionMismatch("embeddings response has " + std::to_string(data.size()) +
                                    " rows, expected " + std::to_string(expected));
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto& row = data[i];
            const auto index = row.value("index", i);
            if (index >= expected) throw ParseError("embedding index out of range");
            auto values = row.at("embedding").get<std::vector<float>>();
            if (values.size() != dim) {
                throw DimensionMismatch("provider returned dim " + std::to_string(values.size()) +
                                        ", expected " + std::to_string(dim));
            }
            out[index] = EmbeddingVector(std::move(values));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("embeddings response: ") + e.what());
    }
    return out;
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += settings_.batch_size) {
        const auto batch = texts.subspan(start, std::min(settings_.batch_size, texts.size() - start));
        const auto res = detail::post_json(settings_.api_base, "/v1/embeddings",
                                           embeddings_request_body(settings_.model, batch),
                                           settings_.api_key, settings_.timeout);
        if (res.status == 401 || res.status == 403 || res.status >= 500) {
            throw ProviderUnavailable("embeddings endpoint returned HTTP " + std::to_string(res.status));
        }
        if (res.status != 200) {
            throw ProviderRejected("embeddings endpoint returned HTTP " + std::to_string(res.status) +
                                   ": " + res.body.substr(0, 200));
        }
        auto rows = parse_embeddings_response(res.body, batch.size(), settings_.dim);
        for (auto& r : rows) out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------

EmbeddingCache::EmbeddingCache(fs::path path) : path_(std::move(path)) {}

EmbeddingCache::Contents EmbeddingCache::read(const fs::path& path) {
    const std::string bytes = read_file(path);
    const auto eol = bytes.find('\n');
    if (eol == std::string::npos) throw CacheCorrupt(path.string() + ": missing header line");
    Contents c;
    std::size_t count = 0;
    try {
        const auto header = json::parse(bytes.substr(0, eol));
        c.fingerprint = header.at("fingerprint").get<std::string>();
        c.dim = header.at("dim").get<std::size_t>();
        count = header.at("count").get<std::size_t>();
        c.texts = header.at("texts").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw CacheCorrupt(path.string() + ": bad header: " + e.what());
    }
    if (c.texts.size() != count) throw CacheCorrupt(path.string() + ": header count disagrees with texts");
    const std::size_t row_bytes = c.dim * sizeof(float);
    if (bytes.size() - eol - 1 != count * row_bytes) {
        throw CacheCorrupt(path.string() + ": payload size does not match " + std::to_string(count) +
                           " rows of dim " + std::to_string(c.dim));
    }
    const char* p = bytes.data() + eol + 1;
    c.rows.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        std::vector<float> values(c.dim);
        for (std::size_t i = 0; i < c.dim; ++i, p += 4) {
            std::uint32_t bits = 0;
            for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(p[b]);
            values[i] = std::bit_cast<float>(bits);
        }
        try {
            c.rows.emplace_back(std::move(values));
        } catch (const ValidationError&) {
            throw CacheCorrupt(path.string() + ": non-finite value in row " + std::to_string(r));
        }
    }
    return c;
}

std::string EmbeddingCache::serialize(const Contents& c) {
    json header = {{"count", c.texts.size()}, {"dim", c.dim}, {"fingerprint", c.fingerprint},
                   {"texts", c.texts}};
    std::string out = header.dump();
    out += '\n';
    out.reserve(out.size() + c.rows.size() * c.dim * 4);
    for (const auto& row : c.rows) {
        for (float v : row.values()) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            for (int b = 0; b < 4; ++b) {
                out += static_cast<char>(bits & 0xff);
                bits >>= 8;
            }
        }
    }
    return out;
}

std::vector<EmbeddingVector> EmbeddingCache::get_or_embed(std::span<const std::string> texts,
                                                          EmbeddingProvider& provider) {
    std::lock_guard lock(mutex_);

    Contents contents;
    if (fs::exists(path_)) contents = read(path_);
    if (contents.fingerprint != provider.fingerprint() || contents.dim != provider.dim()) {
        contents = Contents{provider.fingerprint(), provider.dim(), {}, {}};
    }

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < contents.texts.size(); ++i) index.emplace(contents.texts[i], i);

    std::vector<std::string> missing;
    for (const auto& t : texts) {
        if (!index.contains(t)) {
            index.emplace(t, contents.texts.size() + missing.size());
            missing.push_back(t);
        }
    }
    if (!missing.empty()) {
        auto fresh = embed_texts(missing, provider);
        for (std::size_t i = 0; i < missing.size(); ++i) {
            contents.texts.push_back(std::move(missing[i]));
            contents.rows.push_back(std::move(fresh[i]));
        }
        write_file_atomic(path_, serialize(contents));
    }

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(contents.rows[index.at(t)]);
    return out;
}

std::vector<EmbeddingVector> cache_get_or_embed(std::span<const std::string> texts,
                                                EmbeddingProvider& provider, const fs::path& cache) {
    // One cache object per path keeps the single-writer contract across callers.
    static std::mutex registry_mutex;
    static std::map<fs::path, std::unique_ptr<EmbeddingCache>> registry;
    EmbeddingCache* c = nullptr;
    {
        std::lock_guard lock(registry_mutex);
        auto& slot = registry[fs::weakly_canonical(cache)];
        if (!slot) slot = std::make_unique<EmbeddingCache>(cache);
        c = slot.get();
    }
    return c->get_or_embed(texts, provider);
}

}  // namespace toporag

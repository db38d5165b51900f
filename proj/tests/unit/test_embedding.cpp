#include <doctest.h>

#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "support.hpp"
#include "toporag/embedding.hpp"
#include "toporag/errors.hpp"

using namespace toporag;

namespace {

EmbeddingVector vec(std::vector<float> v) { return EmbeddingVector(std::move(v)); }

// Plain double-precision reference.
double reference_cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += double(a[i]) * b[i];
        na += double(a[i]) * a[i];
        nb += double(b[i]) * b[i];
    }
    return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_SUITE("embedding") {

TEST_CASE("vectors reject non-finite entries") {
    CHECK_THROWS_AS(vec({1.0f, NAN}), ValidationError);
    CHECK_THROWS_AS(vec({INFINITY}), ValidationError);
}

TEST_CASE("cosine basics") {
    const auto v = vec({0.3f, -1.2f, 2.0f});
    const auto neg = vec({-0.3f, 1.2f, -2.0f});
    CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cosine(v, neg) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(cosine(vec({1, 0}), vec({0, 1})) == 0.0);
    CHECK_THROWS_AS(cosine(vec({1, 0}), vec({1, 0, 0})), DimensionMismatch);
    CHECK_THROWS_AS(cosine(vec({0, 0}), vec({0, 0})), ZeroVector);
    CHECK(cosine(vec({0, 0}), vec({1, 0})) == 0.0);
}

TEST_CASE("cosine is symmetric, scale invariant and matches a reference") {
    SplitMix64 rng(11);
    for (int t = 0; t < 200; ++t) {
        std::vector<float> a(16), b(16);
        for (auto& x : a) x = static_cast<float>(rng.uniform(-1, 1));
        for (auto& x : b) x = static_cast<float>(rng.uniform(-1, 1));
        const auto va = vec(a), vb = vec(b);
        const double alpha = rng.uniform(0.01, 100.0);
        std::vector<float> scaled(a);
        for (auto& x : scaled) x = static_cast<float>(x * alpha);
        CHECK(cosine(va, vb) == doctest::Approx(cosine(vb, va)).epsilon(1e-12));
        CHECK(cosine(vec(scaled), vb) == doctest::Approx(cosine(va, vb)).epsilon(1e-6));
        CHECK(cosine(va, vb) == doctest::Approx(reference_cosine(va, vb)).epsilon(1e-9));
    }
}

TEST_CASE("hash provider is deterministic with default width 1024") {
    HashEmbeddingProvider p;
    CHECK(p.dim() == 1024);
    const std::string texts[] = {"red apple", "red apple", "Red  APPLE!", "green pear", ""};
    const auto out = embed_texts(texts, p);
    REQUIRE(out.size() == 5);
    CHECK(out[0].dim() == 1024);
    CHECK(out[0] == out[1]);
    CHECK(out[0] == out[2]);  // tokenisation lowercases and drops punctuation
    CHECK_FALSE(out[0] == out[3]);
    CHECK(out[4].dim() == 1024);
    HashEmbeddingProvider other_seed(1);
    CHECK_FALSE(other_seed.embed_one("red apple") == out[0]);
    double norm = 0;
    for (float x : out[3].values()) norm += double(x) * x;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("shared tokens raise similarity") {
    HashEmbeddingProvider p(0, 256);
    const auto q = p.embed_one("where is the red apple");
    CHECK(cosine(q, p.embed_one("red apple")) > cosine(q, p.embed_one("blue whale")));
}

TEST_CASE("cache hits skip the provider and mismatched fingerprints re-embed") {
    const auto dir = testing::scratch_dir("embedding_cache");
    const auto path = dir / "cache.bin";
    testing::CountingProvider p(0, 16);
    const std::vector<std::string> texts = {"a", "b", "a", "c"};
    const auto first = cache_get_or_embed(texts, p, path);
    CHECK(p.calls == 1);
    CHECK(p.texts_seen == 3);
    const auto second = cache_get_or_embed(texts, p, path);
    CHECK(p.calls == 1);
    CHECK(first == second);

    testing::CountingProvider other(0, 16, "other");
    cache_get_or_embed(texts, other, path);
    CHECK(other.calls == 1);
    CHECK(EmbeddingCache::read(path).fingerprint == other.fingerprint());
}

TEST_CASE("cache of 10k texts stores 10k rows") {
    const auto dir = testing::scratch_dir("embedding_cache_10k");
    std::vector<std::string> texts;
    for (int i = 0; i < 10000; ++i) texts.push_back("text " + std::to_string(i));
    testing::CountingProvider p(0, 8);
    EmbeddingCache cache(dir / "big.bin");
    cache.get_or_embed(texts, p);
    const auto contents = EmbeddingCache::read(dir / "big.bin");
    CHECK(contents.rows.size() == 10000);
    CHECK(contents.texts.size() == 10000);
    CHECK(contents.dim == 8);
}

TEST_CASE("corrupt cache is reported") {
    const auto dir = testing::scratch_dir("embedding_cache_corrupt");
    write_file_atomic(dir / "bad.bin", "{\"count\":2,\"dim\":4,\"fingerprint\":\"x\",\"texts\":[\"a\",\"b\"]}\nshort");
    CHECK_THROWS_AS(EmbeddingCache::read(dir / "bad.bin"), CacheCorrupt);
    write_file_atomic(dir / "bad2.bin", "garbage");
    CHECK_THROWS_AS(EmbeddingCache::read(dir / "bad2.bin"), CacheCorrupt);
}

TEST_CASE("cache serialisation is byte-stable") {
    const auto dir = testing::scratch_dir("embedding_cache_bytes");
    HashEmbeddingProvider p(5, 12);
    const std::vector<std::string> texts = {"x", "y", "z"};
    EmbeddingCache(dir / "one.bin").get_or_embed(texts, p);
    EmbeddingCache(dir / "two.bin").get_or_embed(texts, p);
    CHECK(read_file(dir / "one.bin") == read_file(dir / "two.bin"));
    CHECK(EmbeddingCache::serialize(EmbeddingCache::read(dir / "one.bin")) == read_file(dir / "one.bin"));
}

TEST_CASE("embeddings response parsing") {
    const auto ok = parse_embeddings_response(R"({"data":[{"index":1,"embedding":[0,1]},{"index":0,"embedding":[1,0]}]})",
                                              2, 2);
    REQUIRE(ok.size() == 2);
    CHECK(ok[0][0] == 1.0f);
    CHECK(ok[1][1] == 1.0f);
    CHECK_THROWS_AS(parse_embeddings_response(R"({"data":[{"index":0,"embedding":[1,0,0]}]})", 1, 2),
                    DimensionMismatch);
    const auto body = nlohmann::json::parse(embeddings_request_body("m", std::vector<std::string>{"a", "b"}));
    CHECK(body["model"] == "m");
    CHECK(body["input"].size() == 2);
}

TEST_CASE("unreachable embedding endpoint") {
    HttpEmbeddingSettings s;
    s.api_base = "http://127.0.0.1:1";
    s.dim = 4;
    s.timeout = std::chrono::milliseconds(500);
    HttpEmbeddingProvider p(s);
    const std::vector<std::string> texts = {"a"};
    CHECK_THROWS_AS(p.embed(texts), ProviderUnavailable);
}

TEST_CASE("http provider against an in-process endpoint") {
    httplib::Server server;
    server.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json data = nlohmann::json::array();
        for (std::size_t i = 0; i < body["input"].size(); ++i) {
            data.push_back({{"index", i}, {"embedding", {1.0, double(i), 0.5}}});
        }
        res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    server.Post("/bad/v1/embeddings", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpEmbeddingSettings s;
    s.api_base = "http://127.0.0.1:" + std::to_string(port);
    s.dim = 3;
    s.batch_size = 2;
    HttpEmbeddingProvider p(s);
    const std::vector<std::string> texts = {"a", "b", "c"};
    const auto out = p.embed(texts);
    REQUIRE(out.size() == 3);
    CHECK(out[1][1] == 1.0f);
    CHECK(out[2][1] == 0.0f);  // second batch restarts its indices

    s.api_base += "/bad";
    HttpEmbeddingProvider bad(s);
    CHECK_THROWS_AS(bad.embed(texts), ProviderRejected);
    server.stop();
    t.join();
}

}

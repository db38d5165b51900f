#include <doctest.h>

#include <future>
#include <vector>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "toporag/config.hpp"
#include "toporag/generation.hpp"
#include "toporag/service.hpp"

// after Eigen: resolv.h defines a macro named _res
#include <httplib.h>

using namespace toporag;
using nlohmann::json;

namespace {

std::shared_ptr<const Pipeline> pipeline_with(std::shared_ptr<LlmClient> llm) {
    auto c = load_config(testing::fixture("mock.toml"));
    return std::make_shared<const Pipeline>(c, make_embedder(c), std::move(llm));
}

std::string request(const std::string& graph, const std::string& question) {
    return json{{"graph_id", graph}, {"question", question}}.dump();
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("handler status codes") {
    auto p = pipeline_with(std::make_shared<MockLlm>(MockMode::kEcho));
    Service svc(p, load_manifest(testing::fixture("manifest.json"), *p));

    const auto ok = svc.handle_retrieve(request("room", "where is the vase?"));
    CHECK(ok.status == 200);
    const auto doc = json::parse(ok.body);
    CHECK(doc.contains("cells"));
    CHECK_FALSE(doc["cells"]["0"].empty());

    const auto answered = svc.handle_answer(request("triangle", "which fruit is red?"));
    CHECK(answered.status == 200);
    CHECK(json::parse(answered.body)["answer"] == "which fruit is red?");

    CHECK(svc.handle_retrieve(request("nowhere", "q")).status == 404);
    CHECK(svc.handle_answer(request("nowhere", "q")).status == 404);
    CHECK(svc.handle_retrieve("{not json").status == 422);
    CHECK(svc.handle_retrieve(R"({"graph_id": 3, "question": "q"})").status == 422);
    CHECK(svc.handle_answer(R"({"question": "q"})").status == 422);
}

TEST_CASE("provider failures map to 503") {
    HttpChatSettings s;
    s.api_base = "http://127.0.0.1:9";
    s.model = "m";
    s.timeout = std::chrono::milliseconds(500);
    auto p = pipeline_with(std::make_shared<HttpChatClient>(s));
    Service svc(p, load_manifest(testing::fixture("manifest.json"), *p));
    const auto r = svc.handle_answer(request("triangle", "q"));
    CHECK(r.status == 503);
    CHECK(json::parse(r.body)["error"] == "ProviderUnavailable");
    CHECK(svc.handle_retrieve(request("triangle", "q")).status == 200);
}

TEST_CASE("concurrent requests over HTTP match serial handling") {
    auto p = pipeline_with(std::make_shared<MockLlm>(MockMode::kEcho));
    Service svc(p, load_manifest(testing::fixture("manifest.json"), *p));
    const int port = svc.bind("127.0.0.1", 0);
    svc.start();

    httplib::Client probe("127.0.0.1", port);
    const auto health = probe.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(health->body == "ok");

    const std::vector<std::string> graphs{"triangle", "room", "scene"};
    const std::vector<std::string> questions{"which fruit is red?", "where is the clock?", "what is on the table?",
                                             "what colour is the pear?"};
    std::vector<std::pair<std::string, std::string>> jobs;
    for (int i = 0; i < 24; ++i) jobs.emplace_back(graphs[i % 3], questions[i % 4]);

    std::vector<std::future<std::pair<int, std::string>>> futures;
    for (const auto& [g, q] : jobs) {
        futures.push_back(std::async(std::launch::async, [port, g, q] {
            httplib::Client c("127.0.0.1", port);
            const auto r = c.Post("/v1/retrieve", request(g, q), "application/json");
            return r ? std::pair{r->status, r->body} : std::pair{-1, std::string()};
        }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto [status, body] = futures[i].get();
        const auto serial = svc.handle_retrieve(request(jobs[i].first, jobs[i].second));
        CHECK(status == 200);
        CHECK(body == serial.body);
    }
    const auto missing = probe.Post("/v1/answer", request("nowhere", "q"), "application/json");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    svc.stop();
}

}

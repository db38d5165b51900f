#include <doctest.h>

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "support.hpp"
#include "toporag/errors.hpp"
#include "toporag/generation.hpp"

using namespace toporag;

namespace {

Subcomplex everything(const CellComplex& cx) {
    Subcomplex s;
    for (std::size_t i = 0; i < cx.num_cells(0); ++i) s.cells0.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < cx.num_cells(1); ++i) s.cells1.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < cx.num_cells(2); ++i) s.cells2.push_back(static_cast<int>(i));
    return s;
}

PromptBundle bundle(const std::string& question, const std::string& context = "ctx") {
    return build_prompt(context, question, "pre");
}

}  // namespace

TEST_SUITE("generation") {

TEST_CASE("a four-room loop renders its cycle") {
    const auto g = load_graph(testing::fixture("loop_room"));
    const auto cx = lift_structure(g);
    const auto t = textualize(everything(cx), cx, g);
    REQUIRE(t.cycle_lines.size() == 1);
    CHECK(t.cycle_lines[0].find("bookshelf -> vase -> mirror -> clock -> bookshelf") != std::string::npos);
    CHECK(t.cycle_lines[0].rfind("cycle: 0 -> 1 -> 2 -> 3 -> 0", 0) == 0);
    CHECK(t.node_lines == std::vector<std::string>{"0,bookshelf", "1,vase", "2,mirror", "3,clock"});
    CHECK(t.edge_lines.front() == "0,supports,1");
    CHECK(t.rendered.rfind(std::string(kNodeHeader) + "\n0,bookshelf", 0) == 0);
    CHECK(t.rendered.find(std::string("\n") + kEdgeHeader + "\n") != std::string::npos);
}

TEST_CASE("textualization uses original ids and CSV quoting") {
    const auto g = make_graph({{10, "a, b"}, {20, "say \"hi\""}}, {{10, 20, "x"}});
    const auto cx = lift_structure(g);
    const auto t = textualize(everything(cx), cx, g);
    CHECK(t.node_lines[0] == "10,\"a, b\"");
    CHECK(t.node_lines[1] == "20,\"say \"\"hi\"\"\"");
    CHECK(t.edge_lines[0] == "10,x,20");
    CHECK(t.cycle_lines.empty());
    CHECK(t.rendered.find("cycle:") == std::string::npos);

    CHECK(textualize(Subcomplex{}, cx, g).empty());
    Subcomplex bad;
    bad.cells0 = {5};
    CHECK_THROWS_AS(textualize(bad, cx, g), DanglingCell);
}

TEST_CASE("prompt layout") {
    const auto p = build_prompt("n1\nn2", "Where?", "You are helpful.");
    CHECK(p.prompt == "You are helpful.\n[CONTEXT]\nn1\nn2\n[QUESTION]\nWhere?\n[ANSWER]\n");
    CHECK(p.token_estimate == (p.prompt.size() + 3) / 4);
    CHECK_FALSE(p.over_budget);

    const auto bare = build_prompt("", "Where?", "P");
    CHECK(bare.prompt == "P\n[QUESTION]\nWhere?\n[ANSWER]\n");
    CHECK(bare.prompt.find("[CONTEXT]") == std::string::npos);

    const std::string big(4000, 'x');
    const auto over = build_prompt(big, "q", "p", 100);
    CHECK(over.over_budget);
    CHECK(over.prompt.find(big) != std::string::npos);  // never truncated
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("abcde") == 2);
}

TEST_CASE("mock modes") {
    MockLlm echo(MockMode::kEcho);
    const auto first = generate(bundle("what is it?\nsecond line"), echo).answer;
    CHECK(first == "what is it?");
    for (int i = 0; i < 100; ++i) CHECK(generate(bundle("what is it?\nsecond line"), echo).answer == first);

    MockLlm lookup(MockMode::kLookup, {{"q1", "gold one"}});
    CHECK(generate(bundle("q1"), lookup).answer == "gold one");
    CHECK(generate(bundle("q2"), lookup).answer == "unknown");

    MockLlm contains(MockMode::kContainsContext, {{"q", "vase"}});
    CHECK(generate(bundle("q", "0,vase"), contains).answer == "yes");
    CHECK(generate(bundle("q", "0,mirror"), contains).answer == "no");

    CHECK(parse_mock_mode("contains-context") == MockMode::kContainsContext);
    CHECK(to_string(MockMode::kLookup) == "lookup");
    CHECK_THROWS_AS(parse_mock_mode("oracle"), ValidationError);
}

TEST_CASE("chat request and response bodies") {
    const auto body = nlohmann::json::parse(chat_request_body("m", "hello", 32));
    CHECK(body["model"] == "m");
    CHECK(body["max_tokens"] == 32);
    CHECK(body["temperature"] == 0);
    CHECK(body["messages"][0]["content"] == "hello");
    CHECK(parse_chat_response(R"({"choices":[{"message":{"role":"assistant","content":"Paris"}}]})") == "Paris");
    CHECK_THROWS_AS(parse_chat_response("{}"), ProviderUnavailable);
    CHECK_THROWS_AS(parse_chat_response("not json"), ProviderUnavailable);
}

TEST_CASE("chat client against a local server") {
    httplib::Server server;
    std::string seen;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen = req.body;
        res.set_content(R"({"choices":[{"message":{"content":"Paris  \n"}}]})", "application/json");
    });
    server.Post("/reject/v1/chat/completions",
                [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    server.Post("/broken/v1/chat/completions",
                [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    HttpChatSettings s;
    s.api_base = base;
    s.model = "tiny";
    HttpChatClient client(s);
    CHECK(generate(bundle("capital?"), client).answer == "Paris");
    CHECK(nlohmann::json::parse(seen)["model"] == "tiny");

    s.api_base = base + "/reject";
    HttpChatClient rejecting(s);
    CHECK_THROWS_AS(rejecting.complete(bundle("q")), ProviderRejected);
    s.api_base = base + "/broken";
    HttpChatClient broken(s);
    CHECK_THROWS_AS(broken.complete(bundle("q")), ProviderUnavailable);

    server.stop();
    t.join();
}

TEST_CASE("unreachable chat endpoint") {
    HttpChatSettings s;
    s.api_base = "http://127.0.0.1:9";
    s.model = "m";
    s.timeout = std::chrono::milliseconds(500);
    HttpChatClient client(s);
    CHECK_THROWS_AS(client.complete(bundle("q")), ProviderUnavailable);
}

}

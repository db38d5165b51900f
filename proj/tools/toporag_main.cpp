#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "toporag/config.hpp"
#include "toporag/errors.hpp"
#include "toporag/evaluation.hpp"
#include "toporag/graph_io.hpp"
#include "toporag/lifting.hpp"
#include "toporag/pipeline.hpp"
#include "toporag/service.hpp"

using namespace toporag;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> k2;
    std::string policy;
    std::string mock_llm;
};

PipelineConfig resolve_config(const GlobalOptions& g) {
    PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
    if (g.seed) {
        c.tree_policy.seed = *g.seed;
        c.embed_seed = *g.seed;
        c.reasoning_config.seed = *g.seed;
    }
    if (g.k2) c.k2 = *g.k2;
    if (!g.policy.empty()) c.tree_policy = SpanningTreePolicy::parse(g.policy, c.tree_policy.seed);
    if (!g.mock_llm.empty()) {
        parse_mock_mode(g.mock_llm);
        c.llm = g.mock_llm;
    }
    c.validate();
    return c;
}

TextualGraph read_graph(const std::string& path, const std::string& format) {
    return format.empty() ? load_graph(path) : load_graph(path, parse_graph_format(format));
}

int cmd_lift(const GlobalOptions& g, const std::string& path, const std::string& format, bool dump) {
    const auto config = resolve_config(g);
    const auto graph = read_graph(path, format);
    const auto complex = lift_structure(graph, config.tree_policy);
    for (const auto& w : complex.warnings) std::cerr << "warning: " << w << "\n";
    const auto report = verify_cycle_basis(complex);
    if (dump) {
        std::cout << complex_to_json(complex, {.embedding_cache = config.embed_cache, .policy = to_string(config.tree_policy)});
        return 0;
    }
    std::cout << "X0=" << complex.num_cells(0) << " X1=" << complex.num_cells(1) << " X2=" << complex.num_cells(2)
              << " betti1=" << report.betti1 << " rank=" << report.rank_gf2
              << " basis=" << (report.ok() ? "OK" : "FAIL") << "\n";
    return report.ok() ? 0 : static_cast<int>(ExitCode::kInternal);
}

int cmd_stats(const GlobalOptions& g, const std::string& path, const std::string& format) {
    const auto config = resolve_config(g);
    const auto graph = read_graph(path, format);
    std::size_t loops = 0;
    for (const auto& e : graph.edges) loops += e.is_self_loop() ? 1 : 0;
    std::vector<OneCell> cells;
    for (const auto& e : graph.edges) cells.push_back({e.src, e.dst});
    std::cout << "nodes=" << graph.num_nodes() << " edges=" << graph.num_edges() << " self_loops=" << loops
              << " components=" << count_components(static_cast<int>(graph.num_nodes()), cells)
              << " betti1=" << betti1(graph) << "\n";
    for (const auto& policy : {SpanningTreePolicy::dfs(), SpanningTreePolicy::bfs(),
                               SpanningTreePolicy::random(config.tree_policy.seed)}) {
        const auto complex = lift_structure(graph, policy);
        const auto report = verify_cycle_basis(complex);
        std::cout << "policy=" << to_string(policy) << " X2=" << complex.num_cells(2) << " rank=" << report.rank_gf2
                  << " basis=" << (report.ok() ? "OK" : "FAIL") << "\n";
    }
    return 0;
}

int cmd_retrieve(const GlobalOptions& g, const std::string& path, const std::string& format,
                 const std::string& question, bool pretty) {
    auto config = resolve_config(g);
    config.reasoning = false;
    Pipeline pipeline(config, make_embedder(config), nullptr);
    const auto lifted = pipeline.lift(read_graph(path, format));
    std::cout << subcomplex_to_json(pipeline.retrieve(lifted, question).subcomplex, pretty ? 2 : -1) << "\n";
    return 0;
}

int cmd_answer(const GlobalOptions& g, const std::string& path, const std::string& format,
               const std::string& question, const std::string& gold, const std::string& soft_prompt_path,
               bool show_prompt) {
    const auto config = resolve_config(g);
    std::map<std::string, std::string> table;
    if (!gold.empty()) table[question] = gold;
    Pipeline pipeline(config, make_embedder(config), make_llm(config, table));
    const auto lifted = pipeline.lift(read_graph(path, format));
    const auto a = pipeline.answer(lifted, question);
    if (a.prompt.over_budget) {
        std::cerr << "warning: prompt is ~" << a.prompt.token_estimate << " tokens, over the "
                  << a.prompt.max_input_tokens << "-token budget\n";
    }
    if (show_prompt) std::cerr << a.prompt.prompt;
    if (!soft_prompt_path.empty()) {
        std::vector<double> values(a.soft_prompt.data(), a.soft_prompt.data() + a.soft_prompt.size());
        nlohmann::json doc = {{"dim", values.size()}, {"values", values}};
        write_file_atomic(soft_prompt_path, doc.dump() + "\n");
    }
    std::cout << a.completion.answer << "\n";
    return 0;
}

int cmd_eval(const GlobalOptions& g, const std::string& dir, bool sweep, const std::string& json_path) {
    const auto config = resolve_config(g);
    const auto examples = load_qa_fixture(dir);
    Pipeline pipeline(config, make_embedder(config), make_llm(config, answer_table(examples)));
    const std::vector<int> k2_values = {0, 1, 2, 3};
    const auto report = evaluate(examples, pipeline, sweep ? std::span<const int>(k2_values) : std::span<const int>{});
    if (!json_path.empty()) write_file_atomic(json_path, report_to_json(report) + "\n");
    std::printf("%s=%.4f examples=%zu mean_ms=%.2f\n", to_string(report.metric).c_str(), report.score,
                report.records.size(), report.mean_ms);
    std::cout << size_table(report);
    return 0;
}

int cmd_serve(const GlobalOptions& g, const std::string& manifest, const std::string& host, int port) {
    const auto config = resolve_config(g);
    // Signals are taken by a dedicated thread so the server can drain.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto pipeline = std::make_shared<const Pipeline>(config, make_embedder(config), make_llm(config));
    Service service(pipeline, load_manifest(manifest, *pipeline));
    const int bound = service.bind(host, port);
    std::cerr << "listening on " << host << ":" << bound << "\n";
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    service.run();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topology-aware retrieval over textual graphs"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config_path, "key = value configuration file");
    app.add_option("--seed", g.seed, "seed for spanning trees, embeddings and reasoning weights");
    app.add_option("--k2", g.k2, "number of 2-cells offered to the solver (0-3)");
    app.add_option("--policy", g.policy, "spanning-tree policy: dfs, bfs or random");
    app.add_option("--mock-llm", g.mock_llm, "echo, lookup or contains-context");

    std::string graph, format, question, gold, soft_prompt, dir, json_path, manifest, host = "127.0.0.1";
    bool dump = false, pretty = false, sweep = false, show_prompt = false;
    int port = 8080;

    auto* lift = app.add_subcommand("lift", "lift a graph and verify its cycle basis");
    lift->add_option("graph", graph, "graph JSON file or CSV-pair directory")->required();
    lift->add_option("--format", format, "json or csv");
    lift->add_flag("--json", dump, "print the complex as JSON");

    auto* stats = app.add_subcommand("stats", "graph statistics under every spanning-tree policy");
    stats->add_option("graph", graph)->required();
    stats->add_option("--format", format);

    auto* retrieve = app.add_subcommand("retrieve", "print the retrieved subcomplex as JSON");
    retrieve->add_option("graph", graph)->required();
    retrieve->add_option("question", question)->required();
    retrieve->add_option("--format", format);
    retrieve->add_flag("--pretty", pretty);

    auto* answer = app.add_subcommand("answer", "run the full pipeline and print the answer");
    answer->add_option("graph", graph)->required();
    answer->add_option("question", question)->required();
    answer->add_option("--format", format);
    answer->add_option("--gold", gold, "gold answer for the lookup and contains-context mocks");
    answer->add_option("--soft-prompt", soft_prompt, "write the projected subcomplex embedding here");
    answer->add_flag("--show-prompt", show_prompt, "echo the prompt to stderr");

    auto* eval = app.add_subcommand("eval", "evaluate a question fixture directory");
    eval->add_option("fixture", dir)->required();
    eval->add_flag("--sweep", sweep, "add a size row for every k2 in 0..3");
    eval->add_option("--json", json_path, "write the full report here");

    auto* serve = app.add_subcommand("serve", "HTTP retrieval and answer service");
    serve->add_option("--manifest", manifest)->required();
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::kValidation);
    }

    try {
        if (*lift) return cmd_lift(g, graph, format, dump);
        if (*stats) return cmd_stats(g, graph, format);
        if (*retrieve) return cmd_retrieve(g, graph, format, question, pretty);
        if (*answer) return cmd_answer(g, graph, format, question, gold, soft_prompt, show_prompt);
        if (*eval) return cmd_eval(g, dir, sweep, json_path);
        if (*serve) return cmd_serve(g, manifest, host, port);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::kInternal);
    }
    return static_cast<int>(ExitCode::kInternal);
}

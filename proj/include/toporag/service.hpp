#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "toporag/pipeline.hpp"

namespace toporag {

// {"graphs":[{"id":..., "path":..., "format":"json"|"csv"}]}; relative
// paths resolve against the manifest's directory.
std::map<std::string, LiftedGraph> load_manifest(const std::filesystem::path& manifest, const Pipeline& pipeline);

// HTTP front end over immutable, preloaded complexes.
//   POST /v1/retrieve {graph_id, question} -> subcomplex JSON
//   POST /v1/answer   {graph_id, question} -> {answer, subcomplex, latency_ms}
//   GET  /healthz -> "ok"
// 404 unknown graph_id, 422 malformed body, 503 provider failure.
class Service {
public:
    Service(std::shared_ptr<const Pipeline> pipeline, std::map<std::string, LiftedGraph> graphs);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds to host:port (0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    // Serves until stop(); requires a prior bind().
    void run();
    // Runs on a background thread after bind(); returns once accepting.
    void start();
    // Stops accepting and waits for in-flight requests.
    void stop();

    struct Reply {
        int status = 200;
        std::string body;
        std::string content_type = "application/json";
    };
    // Request handling without the socket layer.
    Reply handle_retrieve(const std::string& body) const;
    Reply handle_answer(const std::string& body) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace toporag

#include "toporag/service.hpp"

#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "toporag/errors.hpp"

namespace toporag {

using nlohmann::json;

std::map<std::string, LiftedGraph> load_manifest(const std::filesystem::path& manifest, const Pipeline& pipeline) {
    json doc;
    try {
        doc = json::parse(read_file(manifest));
    } catch (const json::exception& e) {
        throw ParseError("manifest " + manifest.string() + ": " + e.what());
    }
    std::map<std::string, LiftedGraph> graphs;
    try {
        for (const auto& entry : doc.at("graphs")) {
            const auto id = entry.at("id").get<std::string>();
            std::filesystem::path path = entry.at("path").get<std::string>();
            if (path.is_relative()) path = manifest.parent_path() / path;
            auto graph = entry.contains("format")
                             ? load_graph(path, parse_graph_format(entry.at("format").get<std::string>()))
                             : load_graph(path);
            if (!graphs.emplace(id, pipeline.lift(std::move(graph))).second) {
                throw ValidationError("manifest lists graph '" + id + "' twice");
            }
        }
    } catch (const json::exception& e) {
        throw ParseError("manifest " + manifest.string() + ": " + e.what());
    }
    return graphs;
}

struct Service::Impl {
    std::shared_ptr<const Pipeline> pipeline;
    std::map<std::string, LiftedGraph> graphs;
    httplib::Server server;
    std::thread thread;
    bool bound = false;
};

namespace {

Service::Reply error_reply(int status, const std::string& kind, const std::string& message) {
    return {status, json{{"error", kind}, {"message", message}}.dump()};
}

template <typename F>
Service::Reply guarded(F&& body) {
    try {
        return body();
    } catch (const ProviderUnavailable& e) {
        return error_reply(503, e.kind(), e.what());
    } catch (const ProviderRejected& e) {
        return error_reply(503, e.kind(), e.what());
    } catch (const Error& e) {
        if (e.exit_code() == ExitCode::kValidation) return error_reply(422, e.kind(), e.what());
        return error_reply(500, e.kind(), e.what());
    } catch (const std::exception& e) {
        return error_reply(500, "InternalError", e.what());
    }
}

struct Request {
    std::string graph_id;
    std::string question;
};

std::optional<Request> parse_request(const std::string& body) {
    try {
        const auto doc = json::parse(body);
        if (!doc.is_object() || !doc.contains("graph_id") || !doc.contains("question") ||
            !doc["graph_id"].is_string() || !doc["question"].is_string()) {
            return std::nullopt;
        }
        return Request{doc["graph_id"].get<std::string>(), doc["question"].get<std::string>()};
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

}  // namespace

Service::Service(std::shared_ptr<const Pipeline> pipeline, std::map<std::string, LiftedGraph> graphs)
    : impl_(std::make_unique<Impl>()) {
    if (!pipeline) throw ValidationError("service needs a pipeline");
    impl_->pipeline = std::move(pipeline);
    impl_->graphs = std::move(graphs);

    auto reply = [](httplib::Response& res, const Reply& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.status = 200;
        res.set_content("ok", "text/plain");
    });
    impl_->server.Post("/v1/retrieve", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, handle_retrieve(req.body));
    });
    impl_->server.Post("/v1/answer", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, handle_answer(req.body));
    });
}

Service::~Service() { stop(); }

Service::Reply Service::handle_retrieve(const std::string& body) const {
    const auto request = parse_request(body);
    if (!request) return error_reply(422, "ValidationError", "body must be {\"graph_id\": str, \"question\": str}");
    const auto it = impl_->graphs.find(request->graph_id);
    if (it == impl_->graphs.end()) return error_reply(404, "MissingGraphError", "unknown graph_id '" + request->graph_id + "'");
    return guarded([&] {
        return Reply{200, subcomplex_to_json(impl_->pipeline->retrieve(it->second, request->question).subcomplex)};
    });
}

Service::Reply Service::handle_answer(const std::string& body) const {
    const auto request = parse_request(body);
    if (!request) return error_reply(422, "ValidationError", "body must be {\"graph_id\": str, \"question\": str}");
    const auto it = impl_->graphs.find(request->graph_id);
    if (it == impl_->graphs.end()) return error_reply(404, "MissingGraphError", "unknown graph_id '" + request->graph_id + "'");
    return guarded([&] {
        const auto a = impl_->pipeline->answer(it->second, request->question);
        json doc = {{"answer", a.completion.answer},
                    {"subcomplex", json::parse(subcomplex_to_json(a.retrieval.subcomplex))},
                    {"latency_ms", a.latency_ms}};
        return Reply{200, doc.dump()};
    });
}

int Service::bind(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : impl_->server.bind_to_port(host, port)
                                                                            ? port
                                                                            : -1;
    if (bound <= 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    impl_->bound = true;
    return bound;
}

void Service::run() {
    if (!impl_->bound) throw ValidationError("service is not bound");
    impl_->server.listen_after_bind();
}

void Service::start() {
    if (!impl_->bound) throw ValidationError("service is not bound");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void Service::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace toporag

#include "http_util.hpp"

#include <httplib.h>

#include "toporag/errors.hpp"

namespace toporag::detail {

ParsedUrl parse_base_url(const std::string& base) {
    const auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) {
        throw ProviderUnavailable("API base '" + base + "' has no scheme");
    }
    const auto path_start = base.find('/', scheme_end + 3);
    ParsedUrl url;
    url.scheme_host_port = base.substr(0, path_start);
    if (path_start != std::string::npos) {
        url.path_prefix = base.substr(path_start);
        while (!url.path_prefix.empty() && url.path_prefix.back() == '/') url.path_prefix.pop_back();
    }
    return url;
}

std::string join_route(const std::string& prefix, const std::string& route) {
    const std::string v1 = "/v1";
    if (prefix.size() >= v1.size() && prefix.compare(prefix.size() - v1.size(), v1.size(), v1) == 0 &&
        route.rfind(v1 + "/", 0) == 0) {
        return prefix + route.substr(v1.size());
    }
    return prefix + route;
}

HttpResponse post_json(const std::string& base, const std::string& route, const std::string& body,
                       const std::string& api_key, std::chrono::milliseconds timeout) {
    const auto url = parse_base_url(base);
    httplib::Client client(url.scheme_host_port);
    if (!client.is_valid()) {
        throw ProviderUnavailable("cannot create client for " + url.scheme_host_port);
    }
    const auto secs = timeout.count() / 1000;
    const auto usecs = (timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    auto res = client.Post(join_route(url.path_prefix, route), headers, body, "application/json");
    if (!res) {
        throw ProviderUnavailable(base + route + ": " + httplib::to_string(res.error()));
    }
    return {res->status, res->body};
}

}  // namespace toporag::detail

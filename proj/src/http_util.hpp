#pragma once

#include <chrono>
#include <string>

namespace toporag::detail {

struct HttpResponse {
    int status = 0;
    std::string body;
};

struct ParsedUrl {
    std::string scheme_host_port;  // "http://host:port"
    std::string path_prefix;       // "" or "/prefix" without trailing slash
};

ParsedUrl parse_base_url(const std::string& base);

// Joins a base URL prefix with an API route, dropping a duplicated "/v1"
// when the base already ends in it.
std::string join_route(const std::string& prefix, const std::string& route);

// POSTs a JSON body. Transport failures throw ProviderUnavailable; HTTP
// status codes are returned to the caller untouched.
HttpResponse post_json(const std::string& base, const std::string& route, const std::string& body,
                       const std::string& api_key, std::chrono::milliseconds timeout);

}  // namespace toporag::detail

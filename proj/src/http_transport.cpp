#include "tvsh/llm_client.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines _res.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>

namespace tvsh::llm {

HttpResponse HttplibTransport::post(const HttpRequest& request) {
    httplib::Client client(request.base_url);
    if (!client.is_valid()) throw TransportError("invalid endpoint URL '" + request.base_url + "'");
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(request.timeout_s));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
        if (k == "Content-Type") content_type = v;
        else headers.emplace(k, v);
    }
    auto result = client.Post(request.path, headers, request.body, content_type);
    if (!result) throw TransportError("transport failure: " + httplib::to_string(result.error()));
    return {result->status, result->body};
}

}  // namespace tvsh::llm

#include "receval/http.hpp"

#include "receval/similarity.hpp"

#include "httplib.h"

namespace receval {

std::string http_post_json(const std::string& base_url, const std::string& path,
                           const std::string& body, int timeout_ms) {
    httplib::Client client(base_url);
    client.set_connection_timeout(0, timeout_ms * 1000);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);

    auto res = client.Post(path, body, "application/json");
    if (!res)
        throw ProviderError("no response from " + base_url + path + ": " +
                            httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw ProviderError("HTTP " + std::to_string(res->status) + " from " +
                            base_url + path);
    return res->body;
}

}  // namespace receval

#pragma once

#include <string>

namespace receval {

/// POSTs a JSON body and returns the response body. Throws ProviderError
/// on connection failure or non-2xx status. base_url is scheme://host:port.
std::string http_post_json(const std::string& base_url, const std::string& path,
                           const std::string& body, int timeout_ms);

}  // namespace receval

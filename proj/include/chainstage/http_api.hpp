#pragma once

#include "chainstage/error.hpp"
#include "chainstage/studio_service.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace chainstage {

// HTTP status for an error code.
int http_status(ErrorCode code);

// Accepts `"3"`, `W/"3"`, `3`; "*" means the current version. Throws INVALID_ARGUMENT.
std::optional<std::uint64_t> parse_if_match(std::string_view header, std::optional<std::uint64_t> current);
std::string make_etag(std::uint64_t version);

std::string_view openapi_document();

// Registers every endpoint on `server`. The service must outlive the server.
void install_routes(httplib::Server& server, StudioService& service);

// Blocks until the server stops. `listen` is "host:port".
void serve(StudioService& service, const std::string& listen);

}  // namespace chainstage

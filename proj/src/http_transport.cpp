#include "chainstage/error.hpp"
#include "chainstage/llm_gateway.hpp"
#include "chainstage/util.hpp"

#include <httplib.h>

namespace chainstage {

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttplibTransport(std::string host, std::string prefix) : host_(std::move(host)), prefix_(std::move(prefix)) {}

    HttpResponse post_json(const std::string& path, const std::string& body,
                           const std::map<std::string, std::string>& headers) override {
        // One client per call: requests from concurrent sessions stay independent.
        httplib::Client client(host_);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(60, 0);
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);

        HttpResponse out;
        auto res = client.Post(prefix_ + path, h, body, "application/json");
        if (!res) {
            out.error = httplib::to_string(res.error());
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        for (const auto& [k, v] : res->headers) out.headers.emplace(to_lower_ascii(k), v);
        return out;
    }

private:
    std::string host_;
    std::string prefix_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport(const std::string& api_base) {
    auto scheme_end = api_base.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "API base must look like https://host/prefix: " + api_base);
    auto path_start = api_base.find('/', scheme_end + 3);
    std::string host = path_start == std::string::npos ? api_base : api_base.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : api_base.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return std::make_shared<HttplibTransport>(std::move(host), std::move(prefix));
}

}  // namespace chainstage

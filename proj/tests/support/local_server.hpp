#pragma once

#include "chainstage/http_api.hpp"
#include "chainstage/studio_service.hpp"

#include <httplib.h>

#include <memory>
#include <thread>

namespace chainstage::testing {

// A studio service on 127.0.0.1 at an ephemeral port, stopped on destruction.
class LocalServer {
public:
    explicit LocalServer(StudioService& service) {
        install_routes(server_, service);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    LocalServer(const LocalServer&) = delete;
    LocalServer& operator=(const LocalServer&) = delete;

    int port() const { return port_; }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(30, 0);
        return c;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace chainstage::testing

#pragma once

#include <httplib.h>

#include <filesystem>
#include <string>
#include <thread>

namespace derfuzz::repo {

/// Minimal static HTTP endpoint for the RRDP side of a repository. Real
/// validators fetch notification/snapshot over HTTP(S); the simulated one
/// reads the filesystem directly, so this stays optional.
class RrdpServer {
public:
    RrdpServer() = default;
    ~RrdpServer() { stop(); }

    /// Serve `root` (the repository out dir) on 127.0.0.1. Port 0 picks a
    /// free port; returns the bound port.
    int start(const std::filesystem::path& root, int port = 0) {
        server_.set_mount_point("/", root.string());
        if (port == 0) {
            port_ = server_.bind_to_any_port("127.0.0.1");
        } else {
            server_.bind_to_port("127.0.0.1", port);
            port_ = port;
        }
        thread_ = std::thread([this]() { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    int port() const { return port_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace derfuzz::repo

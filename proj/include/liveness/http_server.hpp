#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "liveness/service.hpp"

namespace httplib {
class Server;
}

namespace liveness {

/// HTTP front end for LivenessService.
///
///   POST /v1/liveness   multipart part "image" (+ optional "bbox" "x,y,w,h",
///                       "padding_fraction") or JSON {"image_b64", "bbox",
///                       "padding_fraction"} -> verdict JSON
///   GET  /v1/health     {"status","model_checksum","uptime_s"}
///   GET  /v1/model      architecture, param count, threshold, checksum
///
/// Errors are {"error": {"code", "message"}} with the matching HTTP status.
/// Responses carry permissive CORS headers; an optional static directory is
/// mounted at "/".
class LivenessHttpServer {
public:
    LivenessHttpServer(std::shared_ptr<const LivenessService> service,
                       std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~LivenessHttpServer();

    LivenessHttpServer(const LivenessHttpServer&) = delete;
    LivenessHttpServer& operator=(const LivenessHttpServer&) = delete;

    /// Binds host:port (port 0 picks a free port). Throws IoError when the
    /// address is unavailable.
    int bind(const std::string& host, int port);
    /// Serves until stop(); returns after in-flight requests complete.
    void listen();
    void stop();
    bool running() const;

private:
    void install_routes();

    std::shared_ptr<const LivenessService> service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace liveness

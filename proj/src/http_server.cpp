#include "liveness/http_server.hpp"

#include <httplib.h>

#include "liveness/base64.hpp"

namespace liveness {

namespace {

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    res.status = status;
    const nlohmann::json body = {{"error", {{"code", code}, {"message", message}}}};
    res.set_content(body.dump(), "application/json");
}

LivenessRequest parse_liveness_request(const httplib::Request& req) {
    LivenessRequest out;
    if (req.is_multipart_form_data()) {
        if (!req.has_file("image")) throw ServiceError("bad_request", 400, "multipart body needs an 'image' part");
        const auto& part = req.get_file_value("image");
        out.image.assign(part.content.begin(), part.content.end());
        if (req.has_file("bbox")) out.bbox = parse_bbox(req.get_file_value("bbox").content);
        if (req.has_file("padding_fraction")) {
            out.padding_fraction = std::stod(req.get_file_value("padding_fraction").content);
        }
        return out;
    }
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
        throw ServiceError("bad_request", 400, std::string("body is neither multipart nor JSON: ") + e.what());
    }
    if (!body.is_object() || !body.contains("image_b64") || !body["image_b64"].is_string()) {
        throw ServiceError("bad_request", 400, "JSON body needs a string field 'image_b64'");
    }
    try {
        out.image = base64_decode(body["image_b64"].get<std::string>());
    } catch (const std::exception&) {
        throw ServiceError("bad_image", 400, "image_b64 is not valid base64");
    }
    if (body.contains("bbox") && !body["bbox"].is_null()) out.bbox = bbox_from_json(body["bbox"]);
    if (body.contains("padding_fraction") && !body["padding_fraction"].is_null()) {
        if (!body["padding_fraction"].is_number()) {
            throw ServiceError("bad_request", 400, "padding_fraction must be a number");
        }
        out.padding_fraction = body["padding_fraction"].get<double>();
    }
    return out;
}

}  // namespace

LivenessHttpServer::LivenessHttpServer(std::shared_ptr<const LivenessService> service,
                                       std::optional<std::filesystem::path> static_dir)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
    if (static_dir && !server_->set_mount_point("/", static_dir->string())) {
        throw IoError("static directory '" + static_dir->string() + "' does not exist");
    }
}

LivenessHttpServer::~LivenessHttpServer() { stop(); }

void LivenessHttpServer::install_routes() {
    // SO_REUSEADDR only: the library default adds SO_REUSEPORT, which would
    // let a second server share an occupied port instead of failing to bind.
    server_->set_socket_options([](auto sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server_->set_tcp_nodelay(true);
    server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                  {"Access-Control-Allow-Headers", "Content-Type"},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server_->Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_->Post("/v1/liveness", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            const LivenessVerdict v = service_->handle_liveness(parse_liveness_request(req));
            res.set_content(to_json(v).dump(), "application/json");
        } catch (const ServiceError& e) {
            send_error(res, e.status(), e.code(), e.what());
        } catch (const ConfigError& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const std::invalid_argument& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    });
    server_->Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(service_->handle_health().dump(), "application/json");
    });
    server_->Get("/v1/model", [this](const httplib::Request&, httplib::Response& res) {
        try {
            res.set_content(service_->handle_model_info().dump(), "application/json");
        } catch (const ServiceError& e) {
            send_error(res, e.status(), e.code(), e.what());
        }
    });
    server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        } catch (...) {
            send_error(res, 500, "internal", "unknown error");
        }
    });
}

int LivenessHttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) throw IoError("cannot bind " + host + " to any port");
        return bound;
    }
    if (!server_->bind_to_port(host, port)) {
        throw IoError("cannot bind " + host + ":" + std::to_string(port) + " (address in use or not permitted)");
    }
    return port;
}

void LivenessHttpServer::listen() { server_->listen_after_bind(); }

void LivenessHttpServer::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

bool LivenessHttpServer::running() const { return server_->is_running(); }

}  // namespace liveness

#include "liveness/service.hpp"

#include <httplib.h>

#include <cmath>

#include "liveness/base64.hpp"
#include "liveness/image.hpp"
#include "liveness/weights_io.hpp"

namespace liveness {

DetectorBinding DetectorBinding::parse(const std::string& spec) {
    DetectorBinding b;
    if (spec == "manifest" || spec == "request") {
        b.kind = Kind::RequestBBox;
    } else if (spec == "center") {
        b.kind = Kind::CenterCrop;
    } else if (spec.starts_with("external:")) {
        b.kind = Kind::External;
        b.url = spec.substr(9);
        if (!b.url.starts_with("http://")) throw ConfigError("external detector url must start with http://");
    } else {
        throw ConfigError("detector must be manifest, center or external:<url>, got '" + spec + "'");
    }
    return b;
}

std::string DetectorBinding::describe() const {
    switch (kind) {
        case Kind::RequestBBox: return "request_bbox";
        case Kind::CenterCrop: return "center_crop";
        case Kind::External: return "external:" + url;
    }
    return "?";
}

BBox center_crop_box(int width, int height) {
    const int side = std::max(1, static_cast<int>(std::floor(0.8 * std::min(width, height))));
    return {(width - side) / 2, (height - side) / 2, side, side};
}

nlohmann::json bbox_json(const BBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.width}, {"h", b.height}}; }

BBox bbox_from_json(const nlohmann::json& j) {
    if (j.is_string()) return parse_bbox(j.get<std::string>());
    if (!j.is_object()) throw ConfigError("bbox must be an object {x,y,w,h}");
    auto field = [&](const char* a, const char* b) -> int {
        const auto& v = j.contains(a) ? j.at(a) : j.at(b);
        if (!v.is_number_integer()) throw ConfigError(std::string("bbox field '") + a + "' must be an integer");
        return v.get<int>();
    };
    try {
        return {field("x", "x"), field("y", "y"), field("w", "width"), field("h", "height")};
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("bbox must have integer fields x, y, w, h");
    }
}

nlohmann::json to_json(const LivenessVerdict& v) {
    return {{"label", std::string(to_string(v.label))},
            {"score", v.score},
            {"bbox", bbox_json(v.bbox)},
            {"latency_ms", v.latency_ms},
            {"model_checksum", v.model_checksum}};
}

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host:port
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

BBox external_detector_call(const DetectorBinding& binding, std::span<const std::uint8_t> image,
                            int frame_width, int frame_height) {
    const ParsedUrl url = split_url(binding.url);
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(binding.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(binding.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const nlohmann::json body = {{"image_b64", base64_encode(image)}};
    const auto res = client.Post(url.path, body.dump(), "application/json");
    if (!res) {
        throw ServiceError("detector_unavailable", 502,
                           "face detector at " + binding.url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ServiceError("detector_unavailable", 502,
                           "face detector returned HTTP " + std::to_string(res->status));
    }
    BBox box;
    try {
        const auto reply = nlohmann::json::parse(res->body);
        const auto& b = reply.contains("bbox") ? reply.at("bbox") : reply;
        if (b.is_null()) throw ServiceError("no_face", 422, "face detector found no face");
        box = bbox_from_json(b);
    } catch (const ServiceError&) {
        throw;
    } catch (const std::exception& e) {
        throw ServiceError("detector_unavailable", 502, std::string("invalid detector reply: ") + e.what());
    }
    if (!box.valid() || !box.intersects(frame_width, frame_height)) {
        throw ServiceError("detector_unavailable", 502, "detector returned an invalid box " + box.to_string());
    }
    return box;
}

std::shared_ptr<const LoadedModel> load_served_model(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    auto model = std::make_shared<LoadedModel>(LoadedModel{decode_weights(bytes), weights_checksum(bytes), path});
    return model;
}

std::shared_ptr<const LoadedModel> make_served_model(LivenessNet net) {
    const auto bytes = encode_weights(net);
    return std::make_shared<LoadedModel>(LoadedModel{std::move(net), weights_checksum(bytes), {}});
}

LivenessService::LivenessService(std::shared_ptr<const LoadedModel> model, ServiceOptions options)
    : model_(std::move(model)), options_(std::move(options)), started_(std::chrono::steady_clock::now()) {}

LivenessVerdict LivenessService::handle_liveness(const LivenessRequest& request) const {
    const auto t0 = std::chrono::steady_clock::now();
    if (!model_) throw ServiceError("no_model", 503, "no model loaded");

    Image frame;
    try {
        frame = decode_image(request.image);
    } catch (const std::exception& e) {
        throw ServiceError("bad_image", 400, std::string("cannot decode image: ") + e.what());
    }
    const int face_size = static_cast<int>(model_->net.arch().input_size);
    if (frame.width < face_size || frame.height < face_size) {
        throw ServiceError("bad_image", 400,
                           "image must be at least " + std::to_string(face_size) + "x" + std::to_string(face_size));
    }

    BBox box;
    if (request.bbox) {
        box = *request.bbox;
        if (!box.valid() || !box.intersects(frame.width, frame.height)) {
            throw ServiceError("bad_bbox", 400, "bbox " + box.to_string() + " is empty or outside the frame");
        }
    } else {
        switch (options_.detector.kind) {
            case DetectorBinding::Kind::RequestBBox:
                throw ServiceError("no_face", 422, "no bbox supplied and the detector binding requires one");
            case DetectorBinding::Kind::CenterCrop:
                box = center_crop_box(frame.width, frame.height);
                break;
            case DetectorBinding::Kind::External:
                box = external_detector_call(options_.detector, request.image, frame.width, frame.height);
                break;
        }
    }

    const double padding = request.padding_fraction.value_or(options_.padding_fraction);
    if (!(padding >= 0.0) || !std::isfinite(padding)) {
        throw ServiceError("bad_request", 400, "padding_fraction must be a finite value >= 0");
    }
    const Image face = crop_face(frame, box, padding, face_size);
    const Prediction p = model_->net.predict(normalize_face(face, options_.input_scale));

    LivenessVerdict v;
    v.label = p.label;
    v.score = p.score;
    v.bbox = box;
    v.model_checksum = model_->checksum;
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    v.latency_ms = std::max(1e-6, std::chrono::duration<double, std::milli>(elapsed).count());
    return v;
}

nlohmann::json LivenessService::handle_health() const {
    const double uptime = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    nlohmann::json j = {{"status", model_ ? "ok" : "degraded"}, {"uptime_s", uptime}};
    j["model_checksum"] = model_ ? nlohmann::json(model_->checksum) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json LivenessService::handle_model_info() const {
    if (!model_) throw ServiceError("no_model", 503, "no model loaded");
    const ArchConfig& a = model_->net.arch();
    return {{"arch",
             {{"input", {a.input_size, a.input_size, a.input_channels}},
              {"block1", {{"convs", a.block1_convs}, {"channels", a.block1_channels}}},
              {"block2", {{"convs", a.block2_convs}, {"channels", a.block2_channels}}},
              {"latent_width", a.latent_width()},
              {"hidden_width", a.hidden_width},
              {"classes", a.classes},
              {"conv_dropout", a.conv_dropout},
              {"head_dropout", a.head_dropout}}},
            {"param_count", model_->net.param_count()},
            {"threshold", model_->net.threshold()},
            {"padding_fraction", options_.padding_fraction},
            {"detector", options_.detector.describe()},
            {"checksum", model_->checksum}};
}

}  // namespace liveness

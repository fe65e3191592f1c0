#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "liveness/face.hpp"
#include "liveness/model.hpp"

namespace liveness {

/// Request-level failure with a machine-readable code and HTTP status.
class ServiceError : public std::runtime_error {
public:
    ServiceError(std::string code, int status, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)), status_(status) {}
    const std::string& code() const { return code_; }
    int status() const { return status_; }

private:
    std::string code_;
    int status_;
};

/// Where face boxes come from when the request does not carry one.
struct DetectorBinding {
    enum class Kind { RequestBBox, CenterCrop, External };

    Kind kind = Kind::CenterCrop;
    std::string url;  // External only, e.g. http://127.0.0.1:9000/detect
    std::chrono::milliseconds timeout{2000};

    /// "manifest" (box must come with the request), "center", or "external:<url>".
    static DetectorBinding parse(const std::string& spec);
    std::string describe() const;
};

/// Centered square of side floor(0.8 * min(width, height)).
BBox center_crop_box(int width, int height);

/// Posts {"image_b64": ...} to the external detector and expects
/// {"bbox": {"x":..,"y":..,"w":..,"h":..}}; a null bbox means no face.
/// Throws ServiceError detector_unavailable on timeout, transport failure or
/// an invalid reply, and no_face for a null box.
BBox external_detector_call(const DetectorBinding& binding, std::span<const std::uint8_t> image,
                            int frame_width, int frame_height);

struct LivenessRequest {
    std::vector<std::uint8_t> image;  // encoded PNG or JPEG
    std::optional<BBox> bbox;
    std::optional<double> padding_fraction;
};

struct LivenessVerdict {
    Label label = Label::Attack;
    double score = 0.0;
    BBox bbox;
    double latency_ms = 0.0;
    std::string model_checksum;
};

nlohmann::json to_json(const LivenessVerdict& v);
nlohmann::json bbox_json(const BBox& b);
/// Accepts {"x","y","w","h"} (or width/height) objects and "x,y,w,h" strings.
BBox bbox_from_json(const nlohmann::json& j);

/// A model ready to serve: immutable weights plus the checksum of the file
/// they came from.
struct LoadedModel {
    LivenessNet net;
    std::string checksum;
    std::filesystem::path source;
};

std::shared_ptr<const LoadedModel> load_served_model(const std::filesystem::path& path);
std::shared_ptr<const LoadedModel> make_served_model(LivenessNet net);

struct ServiceOptions {
    DetectorBinding detector{};
    double padding_fraction = kDefaultPadding;
    InputScale input_scale = InputScale::Unit;
};

/// decode -> box (request, else detector) -> crop -> normalize -> forward ->
/// threshold. Stateless per request; the model is shared read-only, so
/// concurrent calls are safe.
class LivenessService {
public:
    LivenessService(std::shared_ptr<const LoadedModel> model, ServiceOptions options);

    LivenessVerdict handle_liveness(const LivenessRequest& request) const;
    nlohmann::json handle_health() const;
    nlohmann::json handle_model_info() const;

    bool has_model() const { return model_ != nullptr; }
    const ServiceOptions& options() const { return options_; }

private:
    std::shared_ptr<const LoadedModel> model_;
    ServiceOptions options_;
    std::chrono::steady_clock::time_point started_;
};

}  // namespace liveness

#include "liveness/weights_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace liveness {

namespace {

constexpr char kMagic[4] = {'L', 'V', 'W', '1'};

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }

    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw WeightFormatError("weight file: unexpected end of payload");
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

// Config blob: u32 x 8 (input_size, input_channels, block1_convs,
// block1_channels, block2_convs, block2_channels, hidden_width, classes),
// f64 x 5 (conv_dropout, head_dropout, bn_epsilon, bn_momentum, threshold).
void write_config(Writer& w, const ArchConfig& a, double threshold) {
    Writer c;
    for (Index v : {a.input_size, a.input_channels, a.block1_convs, a.block1_channels,
                    a.block2_convs, a.block2_channels, a.hidden_width, a.classes}) {
        c.u32(static_cast<std::uint32_t>(v));
    }
    for (double v : {a.conv_dropout, a.head_dropout, a.bn_epsilon, a.bn_momentum, threshold}) c.f64(v);
    w.u32(static_cast<std::uint32_t>(c.bytes.size()));
    w.bytes.insert(w.bytes.end(), c.bytes.begin(), c.bytes.end());
}

void write_tensor(Writer& w, const std::string& name, const Tensor32& t) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (Index d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.values()) w.f32(v);
}

void read_tensor_into(Reader& r, const std::string& expected_name, Tensor32& dst) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    if (name != expected_name) {
        throw ShapeMismatchError("weight file: expected tensor '" + expected_name + "', found '" + name + "'");
    }
    const std::uint32_t rank = r.u32();
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.u32());
    if (shape != dst.shape()) {
        throw ShapeMismatchError("weight file: tensor '" + name + "' has shape " + shape_string(shape) +
                                 ", architecture expects " + shape_string(dst.shape()));
    }
    for (Index i = 0; i < dst.size(); ++i) dst[i] = r.f32();
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

std::vector<std::uint8_t> encode_weights(const LivenessNet& net) {
    Writer w;
    w.raw(std::string_view(kMagic, 4));
    w.u32(kWeightFormatVersion);
    write_config(w, net.arch(), net.threshold());
    const auto params = net.params();
    const auto buffers = net.buffers();
    w.u32(static_cast<std::uint32_t>(params.size() + buffers.size()));
    for (const auto* p : params) write_tensor(w, p->name, p->value);
    for (const auto* b : buffers) write_tensor(w, b->name, b->value);
    w.u32(crc32_of(w.bytes));
    return std::move(w.bytes);
}

LivenessNet decode_weights(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12) throw ChecksumError("weight file: too short to hold header and checksum");
    if (!std::equal(kMagic, kMagic + 4, bytes.begin())) {
        throw WeightFormatError("weight file: bad magic (not an LVW1 file)");
    }
    Reader header(bytes.subspan(4));
    const std::uint32_t version = header.u32();
    if (version != kWeightFormatVersion) {
        throw VersionError("weight file: unsupported version " + std::to_string(version));
    }
    const auto body = bytes.first(bytes.size() - 4);
    Reader tail(bytes.last(4));
    const std::uint32_t stored = tail.u32();
    if (crc32_of(body) != stored) throw ChecksumError("weight file: CRC-32 mismatch (corrupt or truncated)");

    Reader r(body.subspan(8));
    const std::uint32_t config_len = r.u32();
    if (config_len != 8 * 4 + 5 * 8) throw WeightFormatError("weight file: unexpected config size");
    ArchConfig arch;
    for (Index* f : {&arch.input_size, &arch.input_channels, &arch.block1_convs, &arch.block1_channels,
                     &arch.block2_convs, &arch.block2_channels, &arch.hidden_width, &arch.classes}) {
        *f = r.u32();
    }
    for (double* f : {&arch.conv_dropout, &arch.head_dropout, &arch.bn_epsilon, &arch.bn_momentum}) {
        *f = r.f64();
    }
    const double threshold = r.f64();

    LivenessNet net = [&] {
        try {
            return LivenessNet(arch);
        } catch (const ConfigError& e) {
            throw WeightFormatError(std::string("weight file: invalid architecture: ") + e.what());
        }
    }();
    net.set_threshold(threshold);
    auto params = net.params();
    auto buffers = net.buffers();
    const std::uint32_t count = r.u32();
    if (count != params.size() + buffers.size()) {
        throw ShapeMismatchError("weight file: " + std::to_string(count) + " tensors, architecture has " +
                                 std::to_string(params.size() + buffers.size()));
    }
    for (auto* p : params) read_tensor_into(r, p->name, p->value);
    for (auto* b : buffers) read_tensor_into(r, b->name, b->value);
    if (r.remaining() != 0) throw WeightFormatError("weight file: trailing bytes after last tensor");
    for (auto* p : params) p->grad = Tensor32(p->value.shape());
    return net;
}

void save_weights(const LivenessNet& net, const std::filesystem::path& path) {
    const auto bytes = encode_weights(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

LivenessNet load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open weight file '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_weights(bytes);
}

std::string weights_checksum(std::span<const std::uint8_t> encoded) {
    if (encoded.size() < 4) throw ChecksumError("weight blob too short");
    Reader r(encoded.last(4));
    return hex32(r.u32());
}

}  // namespace liveness

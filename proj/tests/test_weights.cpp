#include <gtest/gtest.h>

#include "liveness/image.hpp"
#include "liveness/weights_io.hpp"
#include "support.hpp"

using namespace liveness;
using testing_support::random_tensor;
using testing_support::TempDir;

namespace {

// Overwrites the trailing CRC so that edits reach the parser.
void reseal(std::vector<std::uint8_t>& bytes) {
    const std::uint32_t crc = crc32_of(std::span(bytes).first(bytes.size() - 4));
    for (int i = 0; i < 4; ++i) bytes[bytes.size() - 4 + i] = static_cast<std::uint8_t>(crc >> (8 * i));
}

void put_u32(std::vector<std::uint8_t>& bytes, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

// Header: magic(4) version(4) config_len(4) then the u32 arch fields.
constexpr std::size_t kHiddenWidthOffset = 12 + 6 * 4;

LivenessNet trained_looking_model(std::uint64_t seed) {
    LivenessNet net = build_model(ArchConfig{}, seed);
    Rng rng(seed);
    // move the BN running statistics away from their initial values
    net.forward_train(random_tensor<float>({4, 3, 32, 32}, rng, 0, 1), rng);
    net.set_threshold(rng.uniform());
    return net;
}

}  // namespace

TEST(Weights, RoundTripIsBitExact) {
    const LivenessNet net = trained_looking_model(1);
    const auto bytes = encode_weights(net);
    const LivenessNet back = decode_weights(bytes);
    EXPECT_EQ(back.arch(), net.arch());
    EXPECT_EQ(back.threshold(), net.threshold());
    const auto a = net.params(), b = back.params();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
    const auto ab = net.buffers(), bb = back.buffers();
    for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_EQ(ab[i]->value, bb[i]->value) << ab[i]->name;
    Rng rng(2);
    const auto x = random_tensor<float>({3, 3, 32, 32}, rng, 0, 1);
    EXPECT_EQ(back.probabilities(x), net.probabilities(x));
    EXPECT_EQ(encode_weights(back), bytes);
}

TEST(Weights, FileRoundTripAndChecksum) {
    TempDir dir("weights");
    const LivenessNet net = trained_looking_model(3);
    save_weights(net, dir.path() / "m.lvw");
    const auto bytes = read_file(dir.path() / "m.lvw");
    EXPECT_EQ(bytes, encode_weights(net));
    EXPECT_EQ(weights_checksum(bytes), hex32(crc32_of(std::span(bytes).first(bytes.size() - 4))));
    EXPECT_EQ(weights_checksum(bytes).size(), 8u);
    EXPECT_EQ(load_weights(dir.path() / "m.lvw").threshold(), net.threshold());
    EXPECT_THROW(load_weights(dir.path() / "missing.lvw"), IoError);
}

TEST(Weights, LayoutStartsWithMagicAndVersion) {
    const auto bytes = encode_weights(LivenessNet(ArchConfig{}));
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LVW1");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
    EXPECT_EQ(bytes[8], 72);  // config blob length
    // all tensors as binary32 plus names, dims and headers
    EXPECT_GT(bytes.size(), 171570u * 4u);
    EXPECT_EQ(crc32_of(std::vector<std::uint8_t>{'1', '2', '3', '4', '5', '6', '7', '8', '9'}), 0xCBF43926u);
}

TEST(Weights, TruncatedFileIsAChecksumError) {
    auto bytes = encode_weights(trained_looking_model(4));
    for (std::size_t keep : {bytes.size() - 1, bytes.size() / 2, std::size_t{13}, std::size_t{5}}) {
        std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep));
        EXPECT_THROW(decode_weights(cut), ChecksumError) << keep;
    }
}

TEST(Weights, FlippedBitIsAChecksumError) {
    auto bytes = encode_weights(trained_looking_model(5));
    bytes[bytes.size() / 3] ^= 0x10;
    EXPECT_THROW(decode_weights(bytes), ChecksumError);
}

TEST(Weights, UnknownVersionIsAVersionError) {
    auto bytes = encode_weights(trained_looking_model(6));
    put_u32(bytes, 4, 999);
    EXPECT_THROW(decode_weights(bytes), VersionError);
    reseal(bytes);
    EXPECT_THROW(decode_weights(bytes), VersionError);
}

TEST(Weights, ArchitectureDisagreeingWithTensorsIsAShapeError) {
    auto bytes = encode_weights(trained_looking_model(7));
    put_u32(bytes, kHiddenWidthOffset, 32);
    reseal(bytes);
    try {
        decode_weights(bytes);
        FAIL() << "expected ShapeMismatchError";
    } catch (const ShapeMismatchError& e) {
        EXPECT_NE(std::string(e.what()).find("fc1.weight"), std::string::npos) << e.what();
    }
}

TEST(Weights, BadMagicIsRejected) {
    auto bytes = encode_weights(LivenessNet(ArchConfig{}));
    bytes[0] = 'X';
    EXPECT_THROW(decode_weights(bytes), WeightFormatError);
}

TEST(Weights, ErrorKindsAreDistinct) {
    auto bytes = encode_weights(LivenessNet(ArchConfig{}));
    auto version = bytes;
    put_u32(version, 4, 999);
    auto shape = bytes;
    put_u32(shape, kHiddenWidthOffset, 16);
    reseal(shape);
    auto crc = bytes;
    crc[100] ^= 1;
    int kinds = 0;
    try { decode_weights(version); } catch (const VersionError&) { kinds |= 1; } catch (...) {}
    try { decode_weights(shape); } catch (const ShapeMismatchError&) { kinds |= 2; } catch (...) {}
    try { decode_weights(crc); } catch (const ChecksumError&) { kinds |= 4; } catch (...) {}
    EXPECT_EQ(kinds, 7);
}

TEST(Weights, NonDefaultArchitectureRoundTrips) {
    ArchConfig a;
    a.hidden_width = 32;
    a.conv_dropout = 0.1;
    const LivenessNet net = build_model(a, 8);
    const LivenessNet back = decode_weights(encode_weights(net));
    EXPECT_EQ(back.arch(), a);
    EXPECT_EQ(back.param_count(), 105874);
}

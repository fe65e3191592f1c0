#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "liveness/dataset.hpp"
#include "liveness/image.hpp"
#include "liveness/synth.hpp"
#include "liveness/weights_io.hpp"
#include "support.hpp"

using namespace liveness;
using testing_support::TempDir;

namespace {

Image gradient_image(int w, int h) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = static_cast<std::uint8_t>(x * 4 % 256);
            img.at(x, y, 1) = static_cast<std::uint8_t>(y * 4 % 256);
            img.at(x, y, 2) = static_cast<std::uint8_t>((x + y) % 256);
        }
    return img;
}

}  // namespace

TEST(BBox, ParseAndFormat) {
    EXPECT_EQ(parse_bbox("1,2,30,40"), (BBox{1, 2, 30, 40}));
    EXPECT_EQ(parse_bbox("-3, 4, 5, 6"), (BBox{-3, 4, 5, 6}));
    EXPECT_EQ((BBox{1, 2, 3, 4}).to_string(), "1,2,3,4");
    EXPECT_THROW(parse_bbox("1,2,3"), ConfigError);
    EXPECT_THROW(parse_bbox("1;2;3;4"), ConfigError);
    EXPECT_THROW(parse_bbox("1,2,3,4,5"), ConfigError);
}

TEST(Crop, PaddingHalfOnCentredBoxCoversWholeFrame) {
    const BBox r = expand_box({16, 16, 32, 32}, 0.5, 64, 64);
    EXPECT_EQ(r, (BBox{0, 0, 64, 64}));
    const Image frame = gradient_image(64, 64);
    EXPECT_EQ(crop_face(frame, {16, 16, 32, 32}, 0.5, 64), frame);
}

TEST(Crop, ZeroPaddingIsTheBoxRegion) {
    const Image frame = gradient_image(80, 60);
    const Image crop = crop_face(frame, {10, 5, 32, 32}, 0.0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            for (int c = 0; c < 3; ++c) ASSERT_EQ(crop.at(x, y, c), frame.at(x + 10, y + 5, c));
}

TEST(Crop, CornerBoxIsClampedToFrame) {
    const BBox r = expand_box({0, 0, 20, 20}, 0.3, 50, 40);
    EXPECT_EQ(r, (BBox{0, 0, 26, 26}));
    const BBox s = expand_box({40, 30, 20, 20}, 0.3, 50, 40);
    EXPECT_EQ(s.x + s.width, 50);
    EXPECT_EQ(s.y + s.height, 40);
    const Image crop = crop_face(gradient_image(50, 40), {40, 30, 20, 20}, 0.3);
    EXPECT_EQ(crop.width, 32);
    EXPECT_EQ(crop.height, 32);
}

TEST(Crop, OutputIsAlways32x32) {
    Rng rng(3);
    const Image frame = gradient_image(97, 71);
    for (int i = 0; i < 50; ++i) {
        const BBox b{static_cast<int>(rng.below(90)) - 5, static_cast<int>(rng.below(65)) - 5,
                     1 + static_cast<int>(rng.below(60)), 1 + static_cast<int>(rng.below(60))};
        const Image c = crop_face(frame, b, rng.uniform(0.0, 0.8));
        EXPECT_EQ(c.width, 32);
        EXPECT_EQ(c.height, 32);
        EXPECT_EQ(c.pixels.size(), 32u * 32u * 3u);
    }
}

TEST(Crop, InvalidOrOutsideBoxIsRejected) {
    const Image frame = gradient_image(40, 40);
    EXPECT_THROW(crop_face(frame, {0, 0, 0, 10}, 0.3), ConfigError);
    EXPECT_THROW(crop_face(frame, {50, 50, 10, 10}, 0.3), ConfigError);
    EXPECT_THROW(crop_face(frame, {-20, 0, 10, 10}, 0.3), ConfigError);
    EXPECT_THROW(crop_face(frame, {0, 0, 10, 10}, -0.1), ConfigError);
}

TEST(Resize, ConstantImageStaysConstantAndUpscaleInterpolates) {
    EXPECT_EQ(resize_bilinear(Image(7, 5, 200), 32, 32), Image(32, 32, 200));
    Image two(2, 1);
    two.at(0, 0, 0) = 0;
    two.at(1, 0, 0) = 200;
    const Image up = resize_bilinear(two, 4, 1);
    // half-pixel centres: sample positions -0.25, 0.25, 0.75, 1.25 (clamped)
    EXPECT_EQ(up.at(0, 0, 0), 0);
    EXPECT_EQ(up.at(1, 0, 0), 50);
    EXPECT_EQ(up.at(2, 0, 0), 150);
    EXPECT_EQ(up.at(3, 0, 0), 200);
}

TEST(Normalize, ExhaustiveUnitScale) {
    Image img(256, 1);
    for (int v = 0; v < 256; ++v)
        for (int c = 0; c < 3; ++c) img.at(v, 0, c) = static_cast<std::uint8_t>(v);
    const Tensor32 t = normalize_face(img);
    ASSERT_EQ(t.shape(), (Shape{3, 1, 256}));
    for (int v = 0; v < 256; ++v) {
        const float f = t(0, 0, v);
        EXPECT_GE(f, 0.0f);
        EXPECT_LE(f, 1.0f);
        EXPECT_EQ(static_cast<int>(std::lround(f * 255.0f)), v);
        if (v > 0) {
            EXPECT_GT(f, t(0, 0, v - 1));
        }
    }
    EXPECT_EQ(t(2, 0, 255), 1.0f);
    EXPECT_EQ(t(1, 0, 0), 0.0f);
}

TEST(Normalize, ChannelFirstLayoutAndRawScale) {
    Image img(2, 2);
    img.at(1, 0, 2) = 51;
    img.at(0, 1, 0) = 255;
    const Tensor32 unit = normalize_face(img);
    EXPECT_EQ(unit(2, 0, 1), 0.2f);
    EXPECT_EQ(unit(0, 1, 0), 1.0f);
    EXPECT_EQ(unit.sum(), 1.2f);
    const Tensor32 raw = normalize_face(img, InputScale::Raw);
    EXPECT_EQ(raw(2, 0, 1), 51.0f);
    EXPECT_EQ(normalize_face(Image(32, 32)), Tensor32({3, 32, 32}));
}

TEST(ImageCodec, PngRoundTripIsLossless) {
    const Image img = gradient_image(33, 17);
    EXPECT_EQ(decode_image(encode_png(img)), img);
}

TEST(ImageCodec, JpegDecodesToSameSize) {
    const Image img = gradient_image(40, 24);
    const Image back = decode_image(encode_jpeg(img, 95));
    EXPECT_EQ(back.width, 40);
    EXPECT_EQ(back.height, 24);
    int worst = 0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) worst = std::max(worst, std::abs(img.pixels[i] - back.pixels[i]));
    EXPECT_LT(worst, 40);
}

TEST(ImageCodec, GarbageIsRejected) {
    const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
    EXPECT_THROW(decode_image(junk), ImageDecodeError);
    auto png = encode_png(gradient_image(8, 8));
    png.resize(png.size() / 2);
    EXPECT_THROW(decode_image(png), ImageDecodeError);
    auto jpg = encode_jpeg(gradient_image(8, 8));
    jpg.resize(20);
    EXPECT_THROW(decode_image(jpg), ImageDecodeError);
    EXPECT_THROW(decode_image(std::vector<std::uint8_t>{}), ImageDecodeError);
}

TEST(Split, SizesFollowRatios) {
    EXPECT_EQ(split_sizes(60), (std::array<std::size_t, 3>{30, 20, 10}));
    EXPECT_EQ(split_sizes(6), (std::array<std::size_t, 3>{3, 2, 1}));
    EXPECT_EQ(split_sizes(20), (std::array<std::size_t, 3>{10, 7, 3}));
    EXPECT_EQ(split_sizes(7), (std::array<std::size_t, 3>{4, 2, 1}));
    EXPECT_EQ(split_sizes(3), (std::array<std::size_t, 3>{2, 1, 0}));
    for (std::size_t n = 0; n < 200; ++n) {
        const auto s = split_sizes(n);
        EXPECT_EQ(s[0] + s[1] + s[2], n);
        EXPECT_GE(s[0], s[1]);
        EXPECT_GE(s[1], s[2]);
    }
}

TEST(Split, DisjointExhaustiveDeterministic) {
    std::vector<std::string> ids;
    for (int i = 0; i < 60; ++i) ids.push_back("subject" + std::to_string(i));
    const SubjectSplit a = split_by_subject(ids, {}, 1);
    const SubjectSplit b = split_by_subject(ids, {}, 1);
    const SubjectSplit c = split_by_subject(ids, {}, 2);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.dev, b.dev);
    EXPECT_EQ(a.test, b.test);
    EXPECT_NE(a.train, c.train);
    EXPECT_EQ(a.train.size(), 30u);
    EXPECT_EQ(a.dev.size(), 20u);
    EXPECT_EQ(a.test.size(), 10u);
    std::set<std::string> all;
    for (const auto* v : {&a.train, &a.dev, &a.test}) all.insert(v->begin(), v->end());
    EXPECT_EQ(all.size(), 60u);
    // input order does not matter
    std::vector<std::string> reversed(ids.rbegin(), ids.rend());
    EXPECT_EQ(split_by_subject(reversed, {}, 1).test, a.test);
}

TEST(Split, TooFewSubjectsIsAnError) {
    EXPECT_THROW(split_by_subject({"a", "b"}, {}, 1), ConfigError);
    EXPECT_THROW(split_by_subject({"a", "a", "b"}, {}, 1), ConfigError);
    EXPECT_NO_THROW(split_by_subject({"a", "b", "c"}, {}, 1));
}

TEST(Batches, SizesAndPartition) {
    std::vector<std::size_t> idx(100);
    for (std::size_t i = 0; i < 100; ++i) idx[i] = i;
    const auto batches = iterate_batches(idx, 32, 5, 1);
    ASSERT_EQ(batches.size(), 4u);
    EXPECT_EQ(batches[0].size(), 32u);
    EXPECT_EQ(batches[2].size(), 32u);
    EXPECT_EQ(batches[3].size(), 4u);
    std::multiset<std::size_t> seen;
    for (const auto& b : batches) seen.insert(b.begin(), b.end());
    EXPECT_EQ(seen, std::multiset<std::size_t>(idx.begin(), idx.end()));
    EXPECT_EQ(iterate_batches(idx, 32, 5, 1), batches);
    EXPECT_NE(iterate_batches(idx, 32, 5, 2), batches);
    EXPECT_THROW(iterate_batches(idx, 0, 5, 1), ConfigError);
}

TEST(Batches, BalancedIndicesEqualiseClasses) {
    std::vector<int> labels(30, 1);
    for (int i = 0; i < 10; ++i) labels[static_cast<std::size_t>(i * 3)] = 0;
    Rng rng(2);
    const auto idx = balanced_indices(labels, rng);
    EXPECT_EQ(idx.size(), 20u);
    int bona = 0;
    for (auto i : idx) bona += labels[i] == 0;
    EXPECT_EQ(bona, 10);
    std::vector<int> even{0, 1, 0, 1};
    EXPECT_EQ(balanced_indices(even, rng), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(FaceSample, LabelAttackConsistency) {
    FaceSample s;
    s.subject_id = "s1";
    EXPECT_NO_THROW(s.validate());
    s.attack_type = AttackType::VideoReplay;
    EXPECT_THROW(s.validate(), ConfigError);
    s.label = Label::Attack;
    EXPECT_NO_THROW(s.validate());
    s.attack_type = AttackType::None;
    EXPECT_THROW(s.validate(), ConfigError);
    s.attack_type = AttackType::GlossyPrint;
    s.subject_id.clear();
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Labels, ParseRoundTrip) {
    for (AttackType t : {AttackType::None, AttackType::NormalPrint, AttackType::GlossyPrint, AttackType::VideoReplay,
                         AttackType::NormalPrintMask, AttackType::GlossyPrintMask}) {
        EXPECT_EQ(parse_attack_type(to_string(t)), t);
    }
    EXPECT_EQ(parse_label("bona_fide"), Label::BonaFide);
    EXPECT_EQ(parse_label("attack"), Label::Attack);
    EXPECT_EQ(parse_distance("close"), Distance::Close);
    EXPECT_THROW(parse_label("live"), ConfigError);
}

TEST(Manifest, WriteReadRoundTrip) {
    TempDir dir("manifest");
    CorpusManifest m;
    m.root = dir.path();
    m.records = {{"train/a/bona_fide/none/000_tight.png", Label::BonaFide, AttackType::None, "a", Distance::Mid, false},
                 {"dev/b/attack/video_replay/000_padded.png", Label::Attack, AttackType::VideoReplay, "b",
                  Distance::Close, true}};
    m.subject_split = {{"a", Split::Train}, {"b", Split::Dev}};
    write_manifest(m);
    const CorpusManifest back = read_manifest(dir.path());
    EXPECT_EQ(back.records, m.records);
    EXPECT_EQ(back.subject_split, m.subject_split);
    EXPECT_NO_THROW(back.validate(false));
    EXPECT_THROW(back.validate(true), IoError);  // files were never written
}

TEST(Manifest, MalformedOrInconsistentIsRejected) {
    TempDir dir("badmanifest");
    std::ofstream(dir.path() / kManifestName) << "train/a/x.png\tbona_fide\tnone\ta\tmid\n";
    EXPECT_THROW(read_manifest(dir.path()), ConfigError);
    std::ofstream(dir.path() / kManifestName) << "train/a/x.png\tbona_fide\tnone\ta\tmid\t0\n"
                                              << "dev/a/y.png\tbona_fide\tnone\ta\tmid\t0\n";
    EXPECT_THROW(read_manifest(dir.path()), ConfigError);
    EXPECT_THROW(read_manifest(dir.path() / "missing"), IoError);
}

TEST(Synth, RenderFrameIsDeterministicAndBoxInsideFrame) {
    const SubjectStyle s = make_subject("s07", 7);
    for (AttackType t : {AttackType::None, AttackType::NormalPrint, AttackType::VideoReplay,
                         AttackType::GlossyPrintMask}) {
        Rng a(1), b(1);
        const SynthFrame fa = render_frame(s, t, Distance::Mid, a);
        const SynthFrame fb = render_frame(s, t, Distance::Mid, b);
        EXPECT_EQ(fa.frame, fb.frame);
        EXPECT_EQ(fa.face, fb.face);
        EXPECT_EQ(fa.frame.width, kSynthFrameSize);
        EXPECT_TRUE(fa.face.valid());
        EXPECT_GE(fa.face.x, 0);
        EXPECT_LE(fa.face.x + fa.face.width, kSynthFrameSize);
    }
    Rng r1(1), r2(1);
    EXPECT_NE(render_frame(s, AttackType::None, Distance::Close, r1).face.width,
              render_frame(s, AttackType::None, Distance::Mid, r2).face.width);
}

TEST(Synth, CorpusCountsBalanceAndDisjointness) {
    TempDir dir("synth");
    SynthConfig cfg;
    cfg.subjects = 6;
    cfg.per_class = 5;
    const CorpusManifest m = synth_corpus(dir.path(), cfg);
    EXPECT_EQ(m.records.size(), 6u * 2u * 5u * 2u);
    EXPECT_NO_THROW(m.validate(true));
    std::map<std::string, int> balance;
    std::set<AttackType> types;
    for (const auto& r : m.records) {
        balance[r.subject_id] += r.label == Label::BonaFide ? 1 : -1;
        types.insert(r.attack_type);
    }
    for (const auto& [id, diff] : balance) EXPECT_EQ(diff, 0) << id;
    EXPECT_EQ(types.size(), 6u);
    std::array<int, 3> per_split{};
    for (const auto& [id, s] : m.subject_split) per_split[static_cast<std::size_t>(s)]++;
    EXPECT_EQ(per_split, (std::array<int, 3>{3, 2, 1}));
    const Image first = read_image(dir.path() / m.records.front().path);
    EXPECT_EQ(first.width, 32);
    EXPECT_EQ(first.height, 32);
}

TEST(Synth, RegenerationIsByteIdentical) {
    TempDir a("synth_a"), b("synth_b");
    SynthConfig cfg;
    cfg.subjects = 3;
    cfg.per_class = 3;
    const CorpusManifest ma = synth_corpus(a.path(), cfg);
    synth_corpus(b.path(), cfg);
    EXPECT_EQ(read_file(a.path() / kManifestName), read_file(b.path() / kManifestName));
    for (const auto& r : ma.records) ASSERT_EQ(read_file(a.path() / r.path), read_file(b.path() / r.path)) << r.path;
    cfg.seed = 8;
    TempDir c("synth_c");
    const CorpusManifest mc = synth_corpus(c.path(), cfg);
    EXPECT_NE(read_file(a.path() / ma.records[0].path), read_file(c.path() / mc.records[0].path));
}

TEST(Synth, ZeroSubjectsIsAnError) {
    TempDir dir("synth0");
    SynthConfig cfg;
    cfg.subjects = 0;
    EXPECT_THROW(synth_corpus(dir.path(), cfg), ConfigError);
}

TEST(LoadSplit, TensorsMatchFilesAndLabels) {
    TempDir dir("load");
    SynthConfig cfg;
    cfg.subjects = 3;
    cfg.per_class = 2;
    const CorpusManifest m = synth_corpus(dir.path(), cfg);
    const LoadedSplit s = load_split(m, Split::Train);
    // 3 subjects split 2/1/0; 2 classes x 2 frames x 2 crops each
    ASSERT_EQ(s.size(), 2 * 2 * 2 * 2);
    EXPECT_EQ(s.faces.shape(), (Shape{16, 3, 32, 32}));
    const Tensor32 first = normalize_face(read_image(dir.path() / s.records[0]->path));
    for (Index i = 0; i < first.size(); ++i) ASSERT_EQ(s.faces[i], first[i]);
    for (Index i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s.labels[static_cast<std::size_t>(i)], static_cast<int>(s.records[static_cast<std::size_t>(i)]->label));
    }
    const LoadedSplit sub = select(s, {3, 1});
    EXPECT_EQ(sub.labels, (std::vector<int>{s.labels[3], s.labels[1]}));
    EXPECT_EQ(sub.records[0], s.records[3]);
}

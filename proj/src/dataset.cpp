#include "liveness/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace liveness {

void FaceSample::validate() const {
    if ((label == Label::BonaFide) != (attack_type == AttackType::None)) {
        throw ConfigError("face sample: label and attack type disagree");
    }
    if (subject_id.empty()) throw ConfigError("face sample: empty subject id");
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "test") return Split::Test;
    throw ConfigError("unknown split '" + std::string(s) + "' (expected train, dev or test)");
}

std::vector<const ManifestRecord*> CorpusManifest::records_in(Split split) const {
    std::vector<const ManifestRecord*> out;
    for (const auto& r : records) {
        if (subject_split.at(r.subject_id) == split) out.push_back(&r);
    }
    return out;
}

void CorpusManifest::validate(bool check_files) const {
    for (const auto& r : records) {
        const auto it = subject_split.find(r.subject_id);
        if (it == subject_split.end()) throw ConfigError("manifest: subject '" + r.subject_id + "' has no split");
        const auto first = r.path.substr(0, r.path.find('/'));
        if (parse_split(first) != it->second) {
            throw ConfigError("manifest: subject '" + r.subject_id + "' appears in more than one split");
        }
        if ((r.label == Label::BonaFide) != (r.attack_type == AttackType::None)) {
            throw ConfigError("manifest: label/attack type mismatch for " + r.path);
        }
        if (check_files && !std::filesystem::exists(root / r.path)) {
            throw IoError("manifest: missing file " + (root / r.path).string());
        }
    }
}

void write_manifest(const CorpusManifest& m) {
    std::ofstream out(m.root / kManifestName, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest in " + m.root.string());
    out << "# path\tlabel\tattack_type\tsubject\tdistance\tpadded\n";
    for (const auto& r : m.records) {
        out << r.path << '\t' << to_string(r.label) << '\t' << to_string(r.attack_type) << '\t' << r.subject_id
            << '\t' << to_string(r.distance) << '\t' << (r.padded ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("failed writing manifest in " + m.root.string());
}

CorpusManifest read_manifest(const std::filesystem::path& root) {
    const auto path = root / kManifestName;
    std::ifstream in(path);
    if (!in) throw IoError("no corpus manifest at " + path.string());
    CorpusManifest m;
    m.root = root;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string part; std::getline(ss, part, '\t');) f.push_back(part);
        if (f.size() != 6) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
        }
        ManifestRecord r{f[0], parse_label(f[1]), parse_attack_type(f[2]), f[3], parse_distance(f[4]), f[5] == "1"};
        const Split s = parse_split(r.path.substr(0, r.path.find('/')));
        const auto [it, inserted] = m.subject_split.emplace(r.subject_id, s);
        if (!inserted && it->second != s) {
            throw ConfigError("manifest: subject '" + r.subject_id + "' appears in more than one split");
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

std::array<std::size_t, 3> split_sizes(std::size_t subjects, SplitRatios ratios) {
    const std::array<unsigned, 3> w = {ratios.train, ratios.dev, ratios.test};
    const unsigned total = w[0] + w[1] + w[2];
    if (total == 0) throw ConfigError("split ratios must not all be zero");
    std::array<std::size_t, 3> sizes{};
    std::array<std::size_t, 3> rem{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        sizes[i] = subjects * w[i] / total;
        rem[i] = subjects * w[i] % total;
        assigned += sizes[i];
    }
    std::array<int, 3> order = {0, 1, 2};
    // stable: equal remainders keep train, dev, test order
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; assigned < subjects; ++k, ++assigned) sizes[order[k % 3]]++;
    return sizes;
}

SubjectSplit split_by_subject(std::vector<std::string> subjects, SplitRatios ratios, std::uint64_t seed) {
    std::sort(subjects.begin(), subjects.end());
    if (std::adjacent_find(subjects.begin(), subjects.end()) != subjects.end()) {
        throw ConfigError("split_by_subject: duplicate subject ids");
    }
    const std::size_t needed = (ratios.train > 0) + (ratios.dev > 0) + (ratios.test > 0);
    if (subjects.size() < needed) {
        throw ConfigError("split_by_subject: " + std::to_string(subjects.size()) + " subjects cannot fill " +
                          std::to_string(needed) + " splits");
    }
    const auto sizes = split_sizes(subjects.size(), ratios);
    Rng rng(Rng::mix(seed, 0x5B11));
    rng.shuffle(subjects);
    SubjectSplit out;
    auto it = subjects.begin();
    out.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
    it += static_cast<std::ptrdiff_t>(sizes[0]);
    out.dev.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
    it += static_cast<std::ptrdiff_t>(sizes[1]);
    out.test.assign(it, subjects.end());
    for (auto* v : {&out.train, &out.dev, &out.test}) std::sort(v->begin(), v->end());
    return out;
}

LoadedSplit load_split(const CorpusManifest& manifest, Split split, InputScale scale) {
    LoadedSplit out;
    out.records = manifest.records_in(split);
    if (out.records.empty()) {
        throw ConfigError("corpus has no samples in split '" + std::string(to_string(split)) + "'");
    }
    const Index n = static_cast<Index>(out.records.size());
    const Index face = 3 * kFaceSize * kFaceSize;
    out.faces = Tensor32({n, 3, kFaceSize, kFaceSize});
    for (Index i = 0; i < n; ++i) {
        const ManifestRecord& r = *out.records[static_cast<std::size_t>(i)];
        Image img = read_image(manifest.root / r.path);
        if (img.width != kFaceSize || img.height != kFaceSize) {
            img = resize_bilinear(img, kFaceSize, kFaceSize);
        }
        const Tensor32 t = normalize_face(img, scale);
        std::copy(t.data(), t.data() + face, out.faces.data() + i * face);
        out.labels.push_back(static_cast<int>(r.label));
        out.attack_types.push_back(r.attack_type);
    }
    return out;
}

LoadedSplit select(const LoadedSplit& data, const std::vector<std::size_t>& indices) {
    LoadedSplit out;
    const Index n = static_cast<Index>(indices.size());
    const Index face = data.faces.size() / data.size();
    out.faces = Tensor32({n, data.faces.dim(1), data.faces.dim(2), data.faces.dim(3)});
    for (Index i = 0; i < n; ++i) {
        const std::size_t src = indices[static_cast<std::size_t>(i)];
        std::copy(data.faces.data() + static_cast<Index>(src) * face,
                  data.faces.data() + static_cast<Index>(src + 1) * face, out.faces.data() + i * face);
        out.labels.push_back(data.labels[src]);
        out.attack_types.push_back(data.attack_types[src]);
        if (!data.records.empty()) out.records.push_back(data.records[src]);
    }
    return out;
}

std::vector<std::size_t> balanced_indices(const std::vector<int>& labels, Rng& rng) {
    std::vector<std::size_t> bona, attack;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == static_cast<int>(Label::BonaFide) ? bona : attack).push_back(i);
    }
    auto& major = bona.size() > attack.size() ? bona : attack;
    const std::size_t keep = std::min(bona.size(), attack.size());
    if (major.size() > keep) {
        rng.shuffle(major);
        major.resize(keep);
    }
    std::vector<std::size_t> out;
    out.reserve(bona.size() + attack.size());
    out.insert(out.end(), bona.begin(), bona.end());
    out.insert(out.end(), attack.begin(), attack.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<std::size_t>> iterate_batches(std::vector<std::size_t> indices, std::size_t batch_size,
                                                      std::uint64_t seed, std::uint64_t epoch) {
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    Rng rng(Rng::mix(seed, epoch));
    rng.shuffle(indices);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < indices.size(); i += batch_size) {
        const std::size_t end = std::min(indices.size(), i + batch_size);
        batches.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(i),
                             indices.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

}  // namespace liveness

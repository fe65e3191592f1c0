#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "liveness/face.hpp"
#include "liveness/labels.hpp"
#include "liveness/rng.hpp"

namespace liveness {

/// One labeled face crop.
struct FaceSample {
    Image image;
    Label label = Label::BonaFide;
    AttackType attack_type = AttackType::None;
    std::string subject_id;
    Distance distance = Distance::Mid;
    bool padded = false;

    /// label bona fide <=> attack type none; subject id non-empty.
    void validate() const;
};

enum class Split { Train, Dev, Test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

/// Metadata line of a corpus manifest. `path` is relative to the corpus root.
struct ManifestRecord {
    std::string path;
    Label label = Label::BonaFide;
    AttackType attack_type = AttackType::None;
    std::string subject_id;
    Distance distance = Distance::Mid;
    bool padded = false;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Corpus on disk: root/<split>/<subject>/<class>/<attack_type>/<index>_<padded|tight>.png
/// plus root/manifest.tsv listing one tab-separated record per line:
///   path  label  attack_type  subject  distance  padded(0|1)
/// Lines starting with '#' are comments. The split of a subject is the first
/// path component of its records.
struct CorpusManifest {
    std::filesystem::path root;
    std::vector<ManifestRecord> records;
    std::map<std::string, Split> subject_split;

    std::vector<const ManifestRecord*> records_in(Split split) const;

    /// Subject sets pairwise disjoint, every record's split consistent, every
    /// referenced file present (when check_files).
    void validate(bool check_files = true) const;
};

inline constexpr const char* kManifestName = "manifest.tsv";

void write_manifest(const CorpusManifest& manifest);
CorpusManifest read_manifest(const std::filesystem::path& root);

struct SplitRatios {
    unsigned train = 3;
    unsigned dev = 2;
    unsigned test = 1;
};

/// Subject counts per split: largest-remainder rounding, ties going to train
/// then dev.
std::array<std::size_t, 3> split_sizes(std::size_t subjects, SplitRatios ratios = {});

struct SubjectSplit {
    std::vector<std::string> train;
    std::vector<std::string> dev;
    std::vector<std::string> test;
};

/// Deterministic subject-disjoint partition (sorted ids, seeded shuffle).
/// Throws ConfigError if there are fewer subjects than non-empty splits.
SubjectSplit split_by_subject(std::vector<std::string> subjects, SplitRatios ratios, std::uint64_t seed);

/// Faces of one split decoded into network-ready tensors.
struct LoadedSplit {
    Tensor32 faces;  // [N,3,32,32]
    std::vector<int> labels;
    std::vector<AttackType> attack_types;
    std::vector<const ManifestRecord*> records;

    Index size() const { return static_cast<Index>(labels.size()); }
};

LoadedSplit load_split(const CorpusManifest& manifest, Split split, InputScale scale = InputScale::Unit);

/// Copies the rows `indices` of a loaded split into a batch.
LoadedSplit select(const LoadedSplit& data, const std::vector<std::size_t>& indices);

/// Sample indices per class drawn so both classes contribute equally
/// (majority class randomly subsampled); identity for balanced input.
std::vector<std::size_t> balanced_indices(const std::vector<int>& labels, Rng& rng);

/// Epoch batching: the given indices shuffled by (seed, epoch), cut into
/// consecutive batches of batch_size with a final short batch.
std::vector<std::vector<std::size_t>> iterate_batches(std::vector<std::size_t> indices, std::size_t batch_size,
                                                      std::uint64_t seed, std::uint64_t epoch);

}  // namespace liveness

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace embedkit::corpus {

// One training pair: a query and the passage it should retrieve.
// `extra_json` holds any unknown fields of the source record as a canonical
// JSON object string ("" when none) so they survive a load/persist round trip.
struct TextPair {
    std::string query;
    std::string positive;
    std::string dataset;
    std::string extra_json;

    bool operator==(const TextPair&) const = default;
};

struct Triplet {
    std::string query;
    std::string positive;
    std::string negative;
    std::string dataset;
    std::string extra_json;

    bool operator==(const Triplet&) const = default;
};

// (anchor, entailment, negative): entailment paraphrases the anchor, the
// negative contradicts both while staying syntactically close to the
// entailment.
struct NegationTriplet {
    std::string anchor;
    std::string entailment;
    std::string negative;
    std::string extra_json;

    bool operator==(const NegationTriplet&) const = default;
};

enum class DatasetKind { pairs, triplets, negation };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

struct DatasetHandle {
    std::string name;
    std::filesystem::path path;
    std::size_t record_count = 0;
    DatasetKind kind = DatasetKind::pairs;
};

struct LineError {
    std::size_t line = 0;  // 1-based
    std::string message;
};

// Malformed lines are excluded from `records` and reported here; they are
// never silently dropped.
template <typename Record>
struct LoadResult {
    std::vector<Record> records;
    std::vector<LineError> errors;

    std::size_t malformed_count() const { return errors.size(); }
};

// Line-delimited JSON, one object per line. Pairs use keys "query"/"pos"
// (+ optional "dataset"); triplets add "neg"; negation files use
// "anchor"/"entailment"/"negative". Records with a missing or non-string
// required field, invalid JSON, or invalid UTF-8 are reported per line.
// `dataset` defaults to the file stem when the key is absent.
LoadResult<TextPair> load_pairs(const std::filesystem::path& path);

// Also accepts negation-schema lines, mapping anchor -> query and
// entailment -> positive.
LoadResult<Triplet> load_triplets(const std::filesystem::path& path);

LoadResult<NegationTriplet> load_negation(const std::filesystem::path& path);

// Triplet view of negation records; the denoiser and losses then apply
// unchanged.
std::vector<Triplet> as_triplets(std::span<const NegationTriplet> records,
                                 const std::string& dataset_name);

std::size_t persist(std::span<const TextPair> records,
                    const std::filesystem::path& path);
std::size_t persist(std::span<const Triplet> records,
                    const std::filesystem::path& path);

// Sniffs the record schema from the first parseable line and counts
// parseable records.
DatasetHandle open_dataset(const std::filesystem::path& path);

}  // namespace embedkit::corpus

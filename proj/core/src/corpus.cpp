#include "embedkit/corpus.hpp"

#include <fstream>
#include <functional>
#include <stdexcept>

#include <json.hpp>

namespace embedkit::corpus {

namespace {

using nlohmann::json;

std::string file_stem(const std::filesystem::path& path) {
    return path.stem().string();
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path.string());
    }
    return in;
}

// Returns nullopt-style via bool; fills `field` when the key is present as a
// string, records an error otherwise.
bool take_string(json& obj, const char* key, std::string& field,
                 std::string& error) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        error = std::string("missing required field \"") + key + "\"";
        return false;
    }
    if (!it->is_string()) {
        error = std::string("field \"") + key + "\" is not a string";
        return false;
    }
    field = it->get<std::string>();
    obj.erase(it);
    return true;
}

std::string leftover_json(json& obj) {
    return obj.empty() ? std::string() : obj.dump();
}

// Parses each line of a JSONL file as an object and hands it to `consume`,
// which returns an error message (empty = success). Blank lines are skipped.
template <typename Consume>
std::vector<LineError> for_each_record(const std::filesystem::path& path,
                                       Consume consume) {
    std::ifstream in = open_input(path);
    std::vector<LineError> errors;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) {
            errors.push_back({line_no, "invalid JSON or invalid UTF-8"});
            continue;
        }
        if (!obj.is_object()) {
            errors.push_back({line_no, "record is not a JSON object"});
            continue;
        }
        std::string error = consume(obj);
        if (!error.empty()) {
            errors.push_back({line_no, std::move(error)});
        }
    }
    return errors;
}

std::string take_dataset(json& obj, const std::string& fallback) {
    auto it = obj.find("dataset");
    if (it != obj.end() && it->is_string()) {
        std::string value = it->get<std::string>();
        obj.erase(it);
        return value;
    }
    return fallback;
}

void put_extra(json& obj, const std::string& extra_json) {
    if (extra_json.empty()) return;
    json extra = json::parse(extra_json);
    for (auto& [key, value] : extra.items()) obj[key] = std::move(value);
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write file: " + path.string());
    }
    return out;
}

}  // namespace

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::pairs: return "pairs";
        case DatasetKind::triplets: return "triplets";
        case DatasetKind::negation: return "negation";
    }
    return "pairs";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
    if (name == "pairs") return DatasetKind::pairs;
    if (name == "triplets") return DatasetKind::triplets;
    if (name == "negation") return DatasetKind::negation;
    throw std::invalid_argument("unknown dataset kind: " + name);
}

LoadResult<TextPair> load_pairs(const std::filesystem::path& path) {
    LoadResult<TextPair> result;
    const std::string stem = file_stem(path);
    result.errors = for_each_record(path, [&](json& obj) -> std::string {
        TextPair pair;
        std::string error;
        if (!take_string(obj, "query", pair.query, error)) return error;
        if (!take_string(obj, "pos", pair.positive, error)) return error;
        pair.dataset = take_dataset(obj, stem);
        pair.extra_json = leftover_json(obj);
        result.records.push_back(std::move(pair));
        return {};
    });
    return result;
}

LoadResult<Triplet> load_triplets(const std::filesystem::path& path) {
    LoadResult<Triplet> result;
    const std::string stem = file_stem(path);
    result.errors = for_each_record(path, [&](json& obj) -> std::string {
        Triplet triplet;
        std::string error;
        if (obj.contains("anchor")) {
            // Negation schema viewed as a triplet.
            if (!take_string(obj, "anchor", triplet.query, error)) return error;
            if (!take_string(obj, "entailment", triplet.positive, error)) return error;
            if (!take_string(obj, "negative", triplet.negative, error)) return error;
        } else {
            if (!take_string(obj, "query", triplet.query, error)) return error;
            if (!take_string(obj, "pos", triplet.positive, error)) return error;
            if (!take_string(obj, "neg", triplet.negative, error)) return error;
        }
        triplet.dataset = take_dataset(obj, stem);
        triplet.extra_json = leftover_json(obj);
        result.records.push_back(std::move(triplet));
        return {};
    });
    return result;
}

LoadResult<NegationTriplet> load_negation(const std::filesystem::path& path) {
    LoadResult<NegationTriplet> result;
    result.errors = for_each_record(path, [&](json& obj) -> std::string {
        NegationTriplet record;
        std::string error;
        if (!take_string(obj, "anchor", record.anchor, error)) return error;
        if (!take_string(obj, "entailment", record.entailment, error)) return error;
        if (!take_string(obj, "negative", record.negative, error)) return error;
        record.extra_json = leftover_json(obj);
        result.records.push_back(std::move(record));
        return {};
    });
    return result;
}

std::vector<Triplet> as_triplets(std::span<const NegationTriplet> records,
                                 const std::string& dataset_name) {
    std::vector<Triplet> out;
    out.reserve(records.size());
    for (const NegationTriplet& record : records) {
        out.push_back(Triplet{record.anchor, record.entailment, record.negative,
                              dataset_name, record.extra_json});
    }
    return out;
}

std::size_t persist(std::span<const TextPair> records,
                    const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    for (const TextPair& pair : records) {
        json obj;
        obj["query"] = pair.query;
        obj["pos"] = pair.positive;
        if (!pair.dataset.empty()) obj["dataset"] = pair.dataset;
        put_extra(obj, pair.extra_json);
        out << obj.dump() << '\n';
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
    return records.size();
}

std::size_t persist(std::span<const Triplet> records,
                    const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    for (const Triplet& triplet : records) {
        json obj;
        obj["query"] = triplet.query;
        obj["pos"] = triplet.positive;
        obj["neg"] = triplet.negative;
        if (!triplet.dataset.empty()) obj["dataset"] = triplet.dataset;
        put_extra(obj, triplet.extra_json);
        out << obj.dump() << '\n';
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
    return records.size();
}

DatasetHandle open_dataset(const std::filesystem::path& path) {
    DatasetHandle handle;
    handle.name = file_stem(path);
    handle.path = path;

    bool kind_known = false;
    for_each_record(path, [&](json& obj) -> std::string {
        if (kind_known) return {};
        if (obj.contains("anchor")) {
            handle.kind = DatasetKind::negation;
        } else if (obj.contains("neg")) {
            handle.kind = DatasetKind::triplets;
        } else if (obj.contains("query") && obj.contains("pos")) {
            handle.kind = DatasetKind::pairs;
        } else {
            return "unrecognized record schema";
        }
        kind_known = true;
        return {};
    });
    if (!kind_known) {
        throw std::runtime_error("cannot determine dataset kind (no parseable records): " +
                                 path.string());
    }
    // record_count mirrors what the matching loader accepts.
    switch (handle.kind) {
        case DatasetKind::pairs:
            handle.record_count = load_pairs(path).records.size();
            break;
        case DatasetKind::triplets:
            handle.record_count = load_triplets(path).records.size();
            break;
        case DatasetKind::negation:
            handle.record_count = load_negation(path).records.size();
            break;
    }
    return handle;
}

}  // namespace embedkit::corpus

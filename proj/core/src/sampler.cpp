#include "embedkit/sampler.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace embedkit::sampler {

std::vector<double> sampling_distribution(std::span<const DatasetSpec> datasets) {
    if (datasets.empty()) {
        throw std::invalid_argument("sampling_distribution: no datasets");
    }
    double total = 0.0;
    std::vector<double> masses;
    masses.reserve(datasets.size());
    for (const DatasetSpec& d : datasets) {
        if (d.size == 0) {
            throw std::invalid_argument("sampling_distribution: dataset '" + d.name +
                                        "' has zero records");
        }
        if (!(d.scale > 0.0) || !std::isfinite(d.scale)) {
            throw std::invalid_argument("sampling_distribution: dataset '" + d.name +
                                        "' needs a positive finite scale");
        }
        const double mass = static_cast<double>(d.size) * d.scale;
        masses.push_back(mass);
        total += mass;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("sampling_distribution: zero total mass");
    }
    for (double& m : masses) m /= total;
    return masses;
}

std::vector<PlanEntry> load_plan(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open plan file: " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw std::runtime_error("plan file must be a JSON array: " + path.string());
    }
    std::vector<PlanEntry> entries;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("name") || !item["name"].is_string() ||
            !item.contains("path") || !item["path"].is_string()) {
            throw std::runtime_error("plan entries need string \"name\" and \"path\": " +
                                     path.string());
        }
        PlanEntry entry;
        entry.name = item["name"].get<std::string>();
        entry.path = item["path"].get<std::string>();
        if (item.contains("scale")) {
            if (!item["scale"].is_number()) {
                throw std::runtime_error("plan \"scale\" must be a number: " + path.string());
            }
            entry.scale = item["scale"].get<double>();
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::string FrequencyReport::to_json() const {
    nlohmann::json obj;
    obj["total_batches"] = total_batches;
    obj["datasets"] = nlohmann::json::array();
    for (const DatasetFrequency& d : datasets) {
        obj["datasets"].push_back({{"name", d.name},
                                   {"batches", d.batches},
                                   {"expected_rho", d.expected_rho},
                                   {"observed_freq", d.observed_freq},
                                   {"resets", d.resets}});
    }
    return obj.dump();
}

}  // namespace embedkit::sampler

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "embedkit/rng.hpp"

namespace embedkit::sampler {

struct DatasetSpec {
    std::string name;
    std::size_t size = 0;
    double scale = 1.0;
};

// rho_i = |D_i| * s_i / sum_j |D_j| * s_j. Entries sum to 1 within 1e-12.
std::vector<double> sampling_distribution(std::span<const DatasetSpec> datasets);

struct PlanEntry {
    std::string name;
    std::filesystem::path path;
    double scale = 1.0;
};

// Plan file: [{"name":..., "path":..., "scale":...}, ...]
std::vector<PlanEntry> load_plan(const std::filesystem::path& path);

struct DatasetFrequency {
    std::string name;
    std::size_t batches = 0;
    double expected_rho = 0.0;
    double observed_freq = 0.0;
    std::size_t resets = 0;
};

struct FrequencyReport {
    std::vector<DatasetFrequency> datasets;
    std::size_t total_batches = 0;

    std::string to_json() const;
};

template <typename Record>
struct SamplerDataset {
    std::string name;
    std::vector<Record> records;
    double scale = 1.0;
};

template <typename Record>
struct Batch {
    std::string dataset;
    std::vector<Record> records;  // exactly batch_size, single source
};

// Weighted multi-dataset batch sampler. Each call picks one dataset by a
// single draw from rho and takes the next batch_size records of that
// dataset's current permutation. When fewer than batch_size remain, the
// leftovers are discarded, the dataset reshuffles with a fresh stream forked
// from the seeded generator, and the batch comes wholly from the new
// permutation. The batch sequence is a pure function of (datasets, batch
// size, seed); scaling every s_i by a common positive factor leaves it
// unchanged.
template <typename Record>
class Sampler {
public:
    Sampler(std::vector<SamplerDataset<Record>> datasets, std::size_t batch_size,
            std::uint64_t seed)
        : datasets_(std::move(datasets)), batch_size_(batch_size), rng_(seed) {
        if (datasets_.empty()) throw std::invalid_argument("sampler: no datasets");
        if (batch_size_ == 0) throw std::invalid_argument("sampler: batch_size must be positive");
        std::vector<DatasetSpec> specs;
        specs.reserve(datasets_.size());
        for (const auto& d : datasets_) {
            if (d.records.empty()) {
                throw std::invalid_argument("sampler: dataset '" + d.name + "' is empty");
            }
            if (d.records.size() < batch_size_) {
                // A single permutation must be able to fill a whole batch.
                throw std::invalid_argument("sampler: dataset '" + d.name + "' has " +
                                            std::to_string(d.records.size()) +
                                            " records, fewer than the batch size " +
                                            std::to_string(batch_size_));
            }
            specs.push_back({d.name, d.records.size(), d.scale});
        }
        rho_ = sampling_distribution(specs);

        cursors_.resize(datasets_.size());
        for (std::size_t i = 0; i < datasets_.size(); ++i) {
            cursors_[i].order.resize(datasets_[i].records.size());
            std::iota(cursors_[i].order.begin(), cursors_[i].order.end(), std::size_t{0});
            reshuffle(i);
            cursors_[i].resets = 0;  // the initial shuffle is not a reset
        }
    }

    const std::vector<double>& distribution() const { return rho_; }
    std::size_t dataset_count() const { return datasets_.size(); }
    const std::string& dataset_name(std::size_t i) const { return datasets_[i].name; }
    std::size_t reset_count(std::size_t i) const { return cursors_[i].resets; }
    std::size_t batches_drawn(std::size_t i) const { return cursors_[i].batches; }
    std::size_t total_batches() const { return total_batches_; }

    Batch<Record> next_batch() {
        const std::size_t d = pick_dataset();
        Cursor& cursor = cursors_[d];
        const std::vector<Record>& records = datasets_[d].records;
        if (records.size() - cursor.position < batch_size_) {
            reshuffle(d);
            ++cursor.resets;
        }
        Batch<Record> batch;
        batch.dataset = datasets_[d].name;
        batch.records.reserve(batch_size_);
        for (std::size_t i = 0; i < batch_size_; ++i) {
            batch.records.push_back(records[cursor.order[cursor.position + i]]);
        }
        cursor.position += batch_size_;
        ++cursor.batches;
        ++total_batches_;
        return batch;
    }

    // Emits `count` batches into `sink` and reports selection frequencies
    // and resets.
    FrequencyReport run_epoch(std::size_t count,
                              const std::function<void(const Batch<Record>&)>& sink = {}) {
        const std::vector<std::size_t> batches_before = snapshot(&Sampler::batches_drawn);
        const std::vector<std::size_t> resets_before = snapshot(&Sampler::reset_count);
        for (std::size_t i = 0; i < count; ++i) {
            Batch<Record> batch = next_batch();
            if (sink) sink(batch);
        }
        FrequencyReport report;
        report.total_batches = count;
        for (std::size_t i = 0; i < datasets_.size(); ++i) {
            DatasetFrequency f;
            f.name = datasets_[i].name;
            f.batches = batches_drawn(i) - batches_before[i];
            f.expected_rho = rho_[i];
            f.observed_freq = count == 0 ? 0.0
                                         : static_cast<double>(f.batches) /
                                               static_cast<double>(count);
            f.resets = reset_count(i) - resets_before[i];
            report.datasets.push_back(std::move(f));
        }
        return report;
    }

private:
    struct Cursor {
        std::vector<std::size_t> order;
        std::size_t position = 0;
        std::size_t resets = 0;
        std::size_t batches = 0;
    };

    std::vector<std::size_t> snapshot(std::size_t (Sampler::*get)(std::size_t) const) const {
        std::vector<std::size_t> values(datasets_.size());
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = (this->*get)(i);
        return values;
    }

    std::size_t pick_dataset() {
        const double u = rng_.next_double();
        double cumulative = 0.0;
        for (std::size_t i = 0; i < rho_.size(); ++i) {
            cumulative += rho_[i];
            if (u < cumulative) return i;
        }
        return rho_.size() - 1;  // guard against rounding at the top end
    }

    void reshuffle(std::size_t i) {
        Rng stream = rng_.fork();
        stream.shuffle(std::span<std::size_t>(cursors_[i].order));
        cursors_[i].position = 0;
    }

    std::vector<SamplerDataset<Record>> datasets_;
    std::size_t batch_size_;
    Rng rng_;
    std::vector<double> rho_;
    std::vector<Cursor> cursors_;
    std::size_t total_batches_ = 0;
};

}  // namespace embedkit::sampler

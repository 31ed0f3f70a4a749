#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "embedkit/corpus.hpp"
#include "embedkit/providers.hpp"

namespace embedkit::eval {

// Pearson correlation of fractional (average-tie) ranks. Requires equal
// lengths >= 2 and non-constant inputs on both sides.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct Candidate {
    std::string id;
    double score = 0.0;
    int relevance = 0;  // binary
};

struct RankedList {
    std::string query_id;
    std::vector<Candidate> candidates;  // ids unique within the list
};

// DCG@k / ideal DCG@k with linear gain, candidates ordered by descending
// score (ties by ascending id). Lists without a relevant candidate score 0.
double ndcg_at_k(const RankedList& list, std::size_t k);

// AP@k = sum of Precision@i over relevant ranks i <= k, divided by
// min(R, k) with R the number of relevant candidates in the whole list.
// Requires at least one relevant candidate.
double average_precision_at_k(const RankedList& list, std::size_t k);

struct MetricSummary {
    double value = 0.0;
    std::size_t evaluated = 0;          // lists contributing to the mean
    std::size_t skipped_no_relevant = 0;  // excluded lists, reported
};

MetricSummary map_at_k(std::span<const RankedList> lists, std::size_t k);
MetricSummary mean_ndcg_at_k(std::span<const RankedList> lists, std::size_t k);

struct StsRecord {
    std::string sentence_a;
    std::string sentence_b;
    double gold = 0.0;
};

// Spearman correlation between provider cosine similarities and gold scores.
double evaluate_sts(std::span<const StsRecord> records,
                    const providers::EmbeddingProvider& provider);

struct NegationOutcome {
    bool easy = false;  // cos(anchor, entailment) > cos(anchor, negative)
    bool hard = false;  // cos(anchor, entailment) > cos(entailment, negative)
};

struct NegationResult {
    double easy_pct = 0.0;
    double hard_pct = 0.0;
    std::size_t n = 0;
    std::vector<NegationOutcome> outcomes;
};

// Strict inequalities; ties count as failures.
NegationResult evaluate_negation(std::span<const corpus::NegationTriplet> triples,
                                 const providers::EmbeddingProvider& provider);

// JSONL inputs: {"qid":...,"candidates":[{"id":...,"score":...,"rel":0|1}...]}
// and {"a":...,"b":...,"gold":...} respectively.
corpus::LoadResult<RankedList> load_ranked_lists(const std::filesystem::path& path);
corpus::LoadResult<StsRecord> load_sts(const std::filesystem::path& path);

}  // namespace embedkit::eval

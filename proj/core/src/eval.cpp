#include "embedkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "embedkit/losses.hpp"

namespace embedkit::eval {

namespace {

using nlohmann::json;

// Fractional ranks (1-based); tied values share the average of their ranks.
std::vector<double> fractional_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double average = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = average;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    const double n = static_cast<double>(xs.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= n;
    mean_y /= n;
    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = ys[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if (var_x == 0.0 || var_y == 0.0) {
        throw std::invalid_argument("spearman: constant input");
    }
    return cov / std::sqrt(var_x * var_y);
}

// Candidates by descending score, ties by ascending id.
std::vector<const Candidate*> ranked_order(const RankedList& list) {
    std::set<std::string_view> ids;
    for (const Candidate& c : list.candidates) {
        if (!ids.insert(c.id).second) {
            throw std::invalid_argument("ranked list '" + list.query_id +
                                        "': duplicate candidate id '" + c.id + "'");
        }
    }
    std::vector<const Candidate*> order;
    order.reserve(list.candidates.size());
    for (const Candidate& c : list.candidates) order.push_back(&c);
    std::sort(order.begin(), order.end(), [](const Candidate* a, const Candidate* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->id < b->id;
    });
    return order;
}

std::size_t relevant_count(const RankedList& list) {
    std::size_t r = 0;
    for (const Candidate& c : list.candidates) r += c.relevance != 0 ? 1 : 0;
    return r;
}

double provider_cosine(const providers::EmbeddingProvider& provider, std::string_view a,
                       std::string_view b) {
    const providers::EmbeddingVector va = provider.embed(a);
    const providers::EmbeddingVector vb = provider.embed(b);
    std::vector<double> da(va.begin(), va.end());
    std::vector<double> db(vb.begin(), vb.end());
    return losses::cosine_sim(da, db);
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("spearman: length mismatch");
    }
    if (xs.size() < 2) {
        throw std::invalid_argument("spearman: needs at least two observations");
    }
    const std::vector<double> rx = fractional_ranks(xs);
    const std::vector<double> ry = fractional_ranks(ys);
    return pearson(rx, ry);
}

double ndcg_at_k(const RankedList& list, std::size_t k) {
    if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    const std::size_t relevant = relevant_count(list);
    if (relevant == 0) return 0.0;

    const std::vector<const Candidate*> order = ranked_order(list);
    double dcg = 0.0;
    const std::size_t depth = std::min(k, order.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (order[i]->relevance != 0) {
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    double ideal = 0.0;
    const std::size_t ideal_depth = std::min(k, relevant);
    for (std::size_t i = 0; i < ideal_depth; ++i) {
        ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / ideal;
}

double average_precision_at_k(const RankedList& list, std::size_t k) {
    if (k < 1) throw std::invalid_argument("average_precision_at_k: k must be >= 1");
    const std::size_t relevant = relevant_count(list);
    if (relevant == 0) {
        throw std::invalid_argument("ranked list '" + list.query_id +
                                    "' has no relevant candidate");
    }
    const std::vector<const Candidate*> order = ranked_order(list);
    const std::size_t depth = std::min(k, order.size());
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (order[i]->relevance != 0) {
            ++hits;
            ap += static_cast<double>(hits) / (static_cast<double>(i) + 1.0);
        }
    }
    return ap / static_cast<double>(std::min(relevant, k));
}

MetricSummary map_at_k(std::span<const RankedList> lists, std::size_t k) {
    MetricSummary summary;
    double total = 0.0;
    for (const RankedList& list : lists) {
        if (relevant_count(list) == 0) {
            ++summary.skipped_no_relevant;
            continue;
        }
        total += average_precision_at_k(list, k);
        ++summary.evaluated;
    }
    if (summary.evaluated == 0) {
        throw std::invalid_argument("map_at_k: no list has a relevant candidate");
    }
    summary.value = total / static_cast<double>(summary.evaluated);
    return summary;
}

MetricSummary mean_ndcg_at_k(std::span<const RankedList> lists, std::size_t k) {
    MetricSummary summary;
    double total = 0.0;
    for (const RankedList& list : lists) {
        if (relevant_count(list) == 0) {
            ++summary.skipped_no_relevant;
            continue;
        }
        total += ndcg_at_k(list, k);
        ++summary.evaluated;
    }
    if (summary.evaluated == 0) {
        throw std::invalid_argument("mean_ndcg_at_k: no list has a relevant candidate");
    }
    summary.value = total / static_cast<double>(summary.evaluated);
    return summary;
}

double evaluate_sts(std::span<const StsRecord> records,
                    const providers::EmbeddingProvider& provider) {
    if (records.size() < 2) {
        throw std::invalid_argument("evaluate_sts: needs at least two records");
    }
    std::vector<double> model(records.size()), gold(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        model[i] = provider_cosine(provider, records[i].sentence_a, records[i].sentence_b);
        gold[i] = records[i].gold;
    }
    return spearman(model, gold);
}

NegationResult evaluate_negation(std::span<const corpus::NegationTriplet> triples,
                                 const providers::EmbeddingProvider& provider) {
    if (triples.empty()) {
        throw std::invalid_argument("evaluate_negation: no triples");
    }
    NegationResult result;
    result.n = triples.size();
    result.outcomes.reserve(triples.size());
    std::size_t easy = 0, hard = 0;
    for (const corpus::NegationTriplet& t : triples) {
        const double anchor_entailment = provider_cosine(provider, t.anchor, t.entailment);
        const double anchor_negative = provider_cosine(provider, t.anchor, t.negative);
        const double entailment_negative = provider_cosine(provider, t.entailment, t.negative);
        NegationOutcome outcome;
        outcome.easy = anchor_entailment > anchor_negative;
        outcome.hard = anchor_entailment > entailment_negative;
        easy += outcome.easy ? 1 : 0;
        hard += outcome.hard ? 1 : 0;
        result.outcomes.push_back(outcome);
    }
    result.easy_pct = 100.0 * static_cast<double>(easy) / static_cast<double>(result.n);
    result.hard_pct = 100.0 * static_cast<double>(hard) / static_cast<double>(result.n);
    return result;
}

corpus::LoadResult<RankedList> load_ranked_lists(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    corpus::LoadResult<RankedList> result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("qid") ||
            !obj["qid"].is_string() || !obj.contains("candidates") ||
            !obj["candidates"].is_array()) {
            result.errors.push_back({line_no, "malformed ranked-list record"});
            continue;
        }
        RankedList list;
        list.query_id = obj["qid"].get<std::string>();
        bool bad = false;
        for (const json& c : obj["candidates"]) {
            if (!c.is_object() || !c.contains("id") || !c["id"].is_string() ||
                !c.contains("score") || !c["score"].is_number() || !c.contains("rel") ||
                !c["rel"].is_number_integer()) {
                bad = true;
                break;
            }
            const int rel = c["rel"].get<int>();
            if (rel != 0 && rel != 1) {
                bad = true;
                break;
            }
            list.candidates.push_back({c["id"].get<std::string>(),
                                       c["score"].get<double>(), rel});
        }
        if (bad) {
            result.errors.push_back({line_no, "malformed candidate entry"});
            continue;
        }
        result.records.push_back(std::move(list));
    }
    return result;
}

corpus::LoadResult<StsRecord> load_sts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    corpus::LoadResult<StsRecord> result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("a") ||
            !obj["a"].is_string() || !obj.contains("b") || !obj["b"].is_string() ||
            !obj.contains("gold") || !obj["gold"].is_number()) {
            result.errors.push_back({line_no, "malformed STS record"});
            continue;
        }
        result.records.push_back({obj["a"].get<std::string>(), obj["b"].get<std::string>(),
                                  obj["gold"].get<double>()});
    }
    return result;
}

}  // namespace embedkit::eval

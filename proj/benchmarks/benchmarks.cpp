#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "embedkit/corpus.hpp"
#include "embedkit/eval.hpp"
#include "embedkit/filters.hpp"
#include "embedkit/losses.hpp"
#include "embedkit/providers.hpp"
#include "embedkit/rng.hpp"
#include "embedkit/sampler.hpp"

namespace {

using namespace embedkit;

std::vector<std::string> synthetic_texts(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> texts;
    texts.reserve(count);
    const std::vector<std::string> vocab = {"ocean", "wave",  "granite", "signal",
                                            "filter", "batch", "query",   "margin",
                                            "sample", "vector"};
    for (std::size_t i = 0; i < count; ++i) {
        std::string text;
        const std::size_t words = 4 + rng.next_below(8);
        for (std::size_t w = 0; w < words; ++w) {
            if (w) text.push_back(' ');
            text += vocab[rng.next_below(vocab.size())];
            text += std::to_string(rng.next_below(100));
        }
        texts.push_back(std::move(text));
    }
    return texts;
}

Matrix random_batch(std::size_t k, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(k, d);
    for (double& v : m.data()) v = rng.next_gaussian();
    return m;
}

void BM_normalize_text(benchmark::State& state) {
    const std::string text = "  The Quick\tBrown FOX   jumps\nover the LAZY dog  ";
    for (auto _ : state) {
        benchmark::DoNotOptimize(normalize_text(text));
    }
}
BENCHMARK(BM_normalize_text);

void BM_hash_embed(benchmark::State& state) {
    const std::string text = "a medium length query string about document retrieval";
    const std::size_t dim = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(providers::hash_embed(text, dim, 7));
    }
}
BENCHMARK(BM_hash_embed)->Arg(64)->Arg(256);

void BM_pair_key(benchmark::State& state) {
    const corpus::TextPair pair{"what is the boiling point of water",
                                "water boils at one hundred degrees celsius", "bench", ""};
    for (auto _ : state) {
        benchmark::DoNotOptimize(filters::pair_key(pair));
    }
}
BENCHMARK(BM_pair_key);

void BM_dedup_pairs(benchmark::State& state) {
    const auto texts = synthetic_texts(static_cast<std::size_t>(state.range(0)) * 2, 11);
    std::vector<corpus::TextPair> pairs;
    for (std::size_t i = 0; i + 1 < texts.size(); i += 2) {
        pairs.push_back({texts[i], texts[i + 1], "bench", ""});
    }
    // plant 10% duplicates
    for (std::size_t i = 0; i < pairs.size() / 10; ++i) pairs.push_back(pairs[i]);
    for (auto _ : state) {
        benchmark::DoNotOptimize(filters::dedup_pairs(pairs));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pairs.size()));
}
BENCHMARK(BM_dedup_pairs)->Arg(1000)->Arg(10000);

void BM_pair_loss(benchmark::State& state) {
    const bool with_grad = state.range(1) != 0;
    const std::size_t k = static_cast<std::size_t>(state.range(0));
    const Matrix q = random_batch(k, 64, 1);
    const Matrix p = random_batch(k, 64, 2);
    losses::LossParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(losses::pair_loss_bidirectional(q, p, params, with_grad));
    }
}
BENCHMARK(BM_pair_loss)->Args({16, 0})->Args({16, 1})->Args({64, 0})->Args({64, 1});

void BM_triplet_total_grad(benchmark::State& state) {
    const std::size_t k = static_cast<std::size_t>(state.range(0));
    const Matrix q = random_batch(k, 64, 1);
    const Matrix p = random_batch(k, 64, 2);
    const Matrix n = random_batch(k, 64, 3);
    losses::LossParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(losses::triplet_total(q, p, n, params, true));
    }
}
BENCHMARK(BM_triplet_total_grad)->Arg(16)->Arg(64);

void BM_sampler_next_batch(benchmark::State& state) {
    std::vector<sampler::SamplerDataset<corpus::TextPair>> datasets(4);
    Rng rng(5);
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        datasets[d].name = "d" + std::to_string(d);
        datasets[d].scale = 1.0 + static_cast<double>(d);
        for (int i = 0; i < 5000; ++i) {
            datasets[d].records.push_back({"q" + std::to_string(i), "p", datasets[d].name, ""});
        }
    }
    sampler::Sampler<corpus::TextPair> s(datasets, 32, 99);
    for (auto _ : state) {
        benchmark::DoNotOptimize(s.next_batch());
    }
}
BENCHMARK(BM_sampler_next_batch);

void BM_ndcg(benchmark::State& state) {
    Rng rng(17);
    eval::RankedList list;
    list.query_id = "q";
    for (int i = 0; i < 256; ++i) {
        list.candidates.push_back({"c" + std::to_string(i), rng.next_double(),
                                   rng.next_below(4) == 0 ? 1 : 0});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval::ndcg_at_k(list, 10));
    }
}
BENCHMARK(BM_ndcg);

void BM_language_classify(benchmark::State& state) {
    const filters::TrigramLanguageClassifier classifier;
    const std::string text =
        "she walked along the river with her dog and watched the boats move slowly";
    for (auto _ : state) {
        benchmark::DoNotOptimize(classifier.classify(text));
    }
}
BENCHMARK(BM_language_classify);

}  // namespace

BENCHMARK_MAIN();

// embedkit: corpus curation, weighted sampling, contrastive losses, adapter
// training and retrieval metrics behind one command-line tool.
//
// Exit codes: 0 success, 1 usage error, 2 data/provider error.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "embedkit/corpus.hpp"
#include "embedkit/eval.hpp"
#include "embedkit/filters.hpp"
#include "embedkit/http_client.hpp"
#include "embedkit/losses.hpp"
#include "embedkit/providers.hpp"
#include "embedkit/sampler.hpp"
#include "embedkit/trainer.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --provider hash:<dim>:<seed> | cache:<path> | http:<url>
std::unique_ptr<embedkit::providers::EmbeddingProvider> make_provider(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "hash") {
        const auto second = rest.find(':');
        if (rest.empty() || second == std::string::npos) {
            throw UsageError("provider spec must be hash:<dim>:<seed>");
        }
        std::size_t dim = 0;
        std::uint64_t seed = 0;
        try {
            dim = std::stoull(rest.substr(0, second));
            seed = std::stoull(rest.substr(second + 1));
        } catch (const std::exception&) {
            throw UsageError("provider spec must be hash:<dim>:<seed>");
        }
        return std::make_unique<embedkit::providers::HashEmbedder>(dim, seed);
    }
    if (kind == "cache") {
        if (rest.empty()) throw UsageError("provider spec must be cache:<path>");
        return std::make_unique<embedkit::providers::CacheProvider>(
            embedkit::providers::CacheProvider::open(rest));
    }
    if (kind == "http") {
        if (rest.empty()) throw UsageError("provider spec must be http:<url>");
        return std::make_unique<embedkit::providers::HttpProvider>(rest);
    }
    throw UsageError("unknown provider kind '" + kind + "' (expected hash, cache or http)");
}

// --scorer cosine | file:<path>; cosine needs an embedding provider.
std::unique_ptr<embedkit::providers::RelevanceScorer> make_scorer(
    const std::string& spec, const embedkit::providers::EmbeddingProvider* provider) {
    if (spec == "cosine") {
        if (provider == nullptr) {
            throw UsageError("--scorer cosine requires --provider");
        }
        return std::make_unique<embedkit::providers::CosineScorer>(*provider);
    }
    if (spec.rfind("file:", 0) == 0) {
        return std::make_unique<embedkit::providers::FileScorer>(
            embedkit::providers::FileScorer::load(spec.substr(5)));
    }
    throw UsageError("unknown scorer spec '" + spec + "' (expected cosine or file:<path>)");
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

json record_to_json(const embedkit::corpus::TextPair& p) {
    return json{{"query", p.query}, {"pos", p.positive}, {"dataset", p.dataset}};
}
json record_to_json(const embedkit::corpus::Triplet& t) {
    return json{{"query", t.query}, {"pos", t.positive}, {"neg", t.negative},
                {"dataset", t.dataset}};
}

struct FilterArgs {
    std::string in, out, stages, provider, scorer = "cosine";
    std::string language_allow = "en";
    double min_confidence = 0.5;
    std::size_t reference_sample = 10000;
    std::size_t top_k = 2;
    double kappa = 0.2;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
};

int cmd_filter(const FilterArgs& args) {
    // Usage-level validation first: stage names, kind compatibility, seed.
    std::vector<embedkit::filters::Stage> stages;
    for (const std::string& name : split_csv(args.stages)) {
        try {
            stages.push_back(embedkit::filters::stage_from_string(name));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (stages.empty()) throw UsageError("--stages must name at least one stage");
    if (!args.seed) throw UsageError("--seed is required");

    embedkit::corpus::DatasetHandle dataset = embedkit::corpus::open_dataset(args.in);
    try {
        embedkit::filters::validate_stages(stages, dataset.kind);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    embedkit::filters::PipelineConfig config;
    config.stages = stages;
    config.language_allow.clear();
    for (const std::string& code : split_csv(args.language_allow)) {
        config.language_allow.insert(code);
    }
    config.language_min_confidence = args.min_confidence;
    config.reference_sample_size = args.reference_sample;
    config.top_k = args.top_k;
    config.kappa = args.kappa;
    config.seed = *args.seed;
    config.threads = args.threads;

    std::unique_ptr<embedkit::providers::EmbeddingProvider> provider;
    if (!args.provider.empty()) {
        provider = make_provider(args.provider);
    } else {
        // Seeded default so `filter --stages ...,consistency --seed N` works
        // out of the box.
        provider = std::make_unique<embedkit::providers::HashEmbedder>(64, *args.seed);
    }

    embedkit::filters::PipelineProviders providers;
    providers.embedder = provider.get();
    embedkit::filters::TrigramLanguageClassifier classifier;
    providers.classifier = &classifier;
    std::unique_ptr<embedkit::providers::RelevanceScorer> scorer;
    const bool needs_scorer =
        std::find(stages.begin(), stages.end(), embedkit::filters::Stage::denoise) !=
        stages.end();
    if (needs_scorer) {
        scorer = make_scorer(args.scorer, provider.get());
        providers.scorer = scorer.get();
    }
    const auto [handle, report] =
        embedkit::filters::run_pipeline(dataset, args.out, config, providers);
    std::cout << report.to_json() << "\n";
    std::cerr << "filter: wrote " << handle.record_count << " records to "
              << handle.path.string() << "\n";
    return kExitOk;
}

struct SampleArgs {
    std::string plan, out;
    std::size_t batch_size = 8;
    std::size_t epoch_batches = 0;
    std::optional<std::uint64_t> seed;
};

template <typename Record>
int run_sample(const std::vector<embedkit::sampler::SamplerDataset<Record>>& datasets,
               const SampleArgs& args) {
    embedkit::sampler::Sampler<Record> sampler(datasets, args.batch_size, *args.seed);
    std::ofstream out;
    if (!args.out.empty()) {
        out.open(args.out, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + args.out);
    }
    const auto sink = [&](const embedkit::sampler::Batch<Record>& batch) {
        if (!out.is_open()) return;
        json obj;
        obj["dataset"] = batch.dataset;
        obj["records"] = json::array();
        for (const Record& r : batch.records) obj["records"].push_back(record_to_json(r));
        out << obj.dump() << '\n';
    };
    const embedkit::sampler::FrequencyReport report =
        sampler.run_epoch(args.epoch_batches, sink);
    std::cout << report.to_json() << "\n";
    return kExitOk;
}

int cmd_sample(const SampleArgs& args) {
    if (!args.seed) throw UsageError("--seed is required");
    const std::vector<embedkit::sampler::PlanEntry> plan = embedkit::sampler::load_plan(args.plan);
    if (plan.empty()) throw std::runtime_error("plan file names no datasets");

    // All plan datasets must share one record kind.
    std::optional<embedkit::corpus::DatasetKind> kind;
    for (const auto& entry : plan) {
        const auto handle = embedkit::corpus::open_dataset(entry.path);
        if (handle.record_count == 0) {
            throw std::runtime_error("dataset '" + entry.name + "' is empty");
        }
        if (kind && *kind != handle.kind) {
            throw std::runtime_error("plan mixes record kinds; sample one kind per plan");
        }
        kind = handle.kind;
    }

    if (*kind == embedkit::corpus::DatasetKind::pairs) {
        std::vector<embedkit::sampler::SamplerDataset<embedkit::corpus::TextPair>> datasets;
        for (const auto& entry : plan) {
            datasets.push_back({entry.name,
                                embedkit::corpus::load_pairs(entry.path).records, entry.scale});
        }
        return run_sample(datasets, args);
    }
    std::vector<embedkit::sampler::SamplerDataset<embedkit::corpus::Triplet>> datasets;
    for (const auto& entry : plan) {
        datasets.push_back({entry.name,
                            embedkit::corpus::load_triplets(entry.path).records, entry.scale});
    }
    return run_sample(datasets, args);
}

struct LossCheckArgs {
    std::size_t k = 8;
    std::size_t dim = 16;
    double tau = 0.05;
    double epsilon = 0.05;
    double tolerance = 1e-4;
    double h = 1e-5;
    std::size_t batches = 5;
    std::optional<std::uint64_t> seed;
};

int cmd_losscheck(const LossCheckArgs& args) {
    if (!args.seed) throw UsageError("--seed is required");
    embedkit::losses::LossParams params;
    params.tau = args.tau;
    params.epsilon = args.epsilon;

    // Worst deviation per loss across seeded batches.
    std::map<std::string, double> worst;
    for (std::size_t b = 0; b < args.batches; ++b) {
        const auto cases = embedkit::losses::run_gradient_checks(
            args.k, args.dim, params, *args.seed + b, args.h);
        for (const auto& c : cases) {
            worst[c.loss] = std::max(worst[c.loss], c.max_rel_error);
        }
    }
    bool pass = true;
    json obj;
    obj["tolerance"] = args.tolerance;
    obj["cases"] = json::array();
    for (const auto& [loss, error] : worst) {
        obj["cases"].push_back({{"loss", loss}, {"max_rel_error", error}});
        if (!(error < args.tolerance)) pass = false;
    }
    obj["pass"] = pass;
    std::cout << obj.dump() << "\n";
    return pass ? kExitOk : kExitData;
}

struct TrainArgs {
    std::vector<std::string> pairs, triplets;
    std::size_t steps1 = 0, steps2 = 0;
    std::size_t batch_size = 8;
    double lr = 0.05;
    std::size_t warmup = 0;
    double tau = 0.05, epsilon = 0.05;
    std::string provider;
    std::string out_adapter, log_path;
    std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& args) {
    if (!args.seed) throw UsageError("--seed is required");
    if (args.provider.empty()) throw UsageError("--provider is required");
    const auto provider = make_provider(args.provider);

    embedkit::trainer::TrainConfig config;
    config.learning_rate = args.lr;
    config.steps_phase1 = args.steps1;
    config.steps_phase2 = args.steps2;
    config.batch_size = args.batch_size;
    config.warmup_steps = args.warmup;
    config.seed = *args.seed;
    config.loss.tau = args.tau;
    config.loss.epsilon = args.epsilon;

    embedkit::trainer::TrainData data;
    for (const std::string& path : args.pairs) {
        const auto handle = embedkit::corpus::open_dataset(path);
        data.pairs.push_back({handle.name, embedkit::corpus::load_pairs(path).records, 1.0});
    }
    for (const std::string& path : args.triplets) {
        const auto handle = embedkit::corpus::open_dataset(path);
        if (handle.kind == embedkit::corpus::DatasetKind::negation) {
            const auto loaded = embedkit::corpus::load_negation(path);
            data.triplets.push_back(
                {handle.name, embedkit::corpus::as_triplets(loaded.records, handle.name), 1.0});
        } else {
            data.triplets.push_back(
                {handle.name, embedkit::corpus::load_triplets(path).records, 1.0});
        }
    }

    const auto [adapter, log] = embedkit::trainer::run_two_phase(config, data, *provider);
    if (!args.out_adapter.empty()) adapter.save(args.out_adapter);
    if (!args.log_path.empty()) {
        log.save_jsonl(args.log_path);
    } else {
        std::cout << log.to_jsonl();
    }
    json summary;
    summary["steps"] = log.steps.size();
    summary["final_loss"] = log.steps.empty() ? 0.0 : log.steps.back().loss;
    summary["dim"] = adapter.dim;
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string task, in, provider;
    std::size_t k = 10;
};

int cmd_eval(const EvalArgs& args) {
    json out;
    if (args.task == "ndcg" || args.task == "map") {
        const auto loaded = embedkit::eval::load_ranked_lists(args.in);
        for (const auto& err : loaded.errors) {
            std::cerr << "eval: line " << err.line << ": " << err.message << "\n";
        }
        const embedkit::eval::MetricSummary summary =
            args.task == "ndcg" ? embedkit::eval::mean_ndcg_at_k(loaded.records, args.k)
                                : embedkit::eval::map_at_k(loaded.records, args.k);
        out["metric"] = args.task + "@" + std::to_string(args.k);
        out["value"] = summary.value;
        out["n"] = summary.evaluated;
        out["skipped_no_relevant"] = summary.skipped_no_relevant;
    } else if (args.task == "sts") {
        if (args.provider.empty()) throw UsageError("--task sts requires --provider");
        const auto provider = make_provider(args.provider);
        const auto loaded = embedkit::eval::load_sts(args.in);
        out["metric"] = "spearman";
        out["value"] = embedkit::eval::evaluate_sts(loaded.records, *provider);
        out["n"] = loaded.records.size();
    } else if (args.task == "negation") {
        if (args.provider.empty()) throw UsageError("--task negation requires --provider");
        const auto provider = make_provider(args.provider);
        const auto loaded = embedkit::corpus::load_negation(args.in);
        const embedkit::eval::NegationResult result =
            embedkit::eval::evaluate_negation(loaded.records, *provider);
        out["metric"] = "negation";
        out["easy"] = result.easy_pct;
        out["hard"] = result.hard_pct;
        out["n"] = result.n;
    } else {
        throw UsageError("unknown --task '" + args.task +
                         "' (expected sts, ndcg, map or negation)");
    }
    std::cout << out.dump() << "\n";
    return kExitOk;
}

struct CacheArgs {
    std::string in, out, provider, format = "bin";
};

int cmd_embed_cache(const CacheArgs& args) {
    if (args.provider.empty()) throw UsageError("--provider is required");
    if (args.format != "bin" && args.format != "jsonl") {
        throw UsageError("--format must be bin or jsonl");
    }
    const auto provider = make_provider(args.provider);

    std::ifstream in(args.in, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + args.in);
    std::vector<std::string> texts;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) texts.push_back(line);
    }

    const std::size_t entries = embedkit::providers::build_cache(
        *provider, texts, args.out,
        args.format == "bin" ? embedkit::providers::CacheFormat::binary
                             : embedkit::providers::CacheFormat::jsonl);
    json summary;
    summary["entries"] = entries;
    summary["dim"] = provider->dim();
    summary["path"] = args.out;
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corpus curation and contrastive training toolkit"};
    app.require_subcommand(1);

    FilterArgs filter_args;
    CLI::App* filter = app.add_subcommand("filter", "run curation stages over a dataset");
    filter->add_option("--in", filter_args.in, "input JSONL dataset")->required();
    filter->add_option("--out", filter_args.out, "output JSONL dataset")->required();
    filter->add_option("--stages", filter_args.stages,
                       "comma list of dedup,language,consistency,denoise")->required();
    std::uint64_t filter_seed = 0;
    CLI::Option* filter_seed_opt = filter->add_option("--seed", filter_seed, "random seed");
    filter->add_option("--provider", filter_args.provider,
                       "hash:<dim>:<seed> | cache:<path> | http:<url>");
    filter->add_option("--scorer", filter_args.scorer, "cosine | file:<path>");
    filter->add_option("--language-allow", filter_args.language_allow,
                       "comma list of language codes");
    filter->add_option("--min-confidence", filter_args.min_confidence,
                       "language confidence threshold");
    filter->add_option("--reference-sample", filter_args.reference_sample,
                       "consistency reference sample size");
    filter->add_option("--top-k", filter_args.top_k, "consistency rank bound");
    filter->add_option("--kappa", filter_args.kappa, "denoise margin threshold");
    filter->add_option("--threads", filter_args.threads, "worker threads");

    SampleArgs sample_args;
    CLI::App* sample = app.add_subcommand("sample", "draw weighted single-source batches");
    sample->add_option("--plan", sample_args.plan, "JSON plan file")->required();
    sample->add_option("--batch-size", sample_args.batch_size, "records per batch");
    sample->add_option("--epoch-batches", sample_args.epoch_batches, "batches to draw");
    std::uint64_t sample_seed = 0;
    CLI::Option* sample_seed_opt = sample->add_option("--seed", sample_seed, "random seed");
    sample->add_option("--out", sample_args.out, "write batches as JSONL");

    LossCheckArgs loss_args;
    CLI::App* losscheck = app.add_subcommand("losscheck",
                                             "verify loss gradients against finite differences");
    losscheck->add_option("--k", loss_args.k, "batch size");
    losscheck->add_option("--dim", loss_args.dim, "embedding dimension");
    losscheck->add_option("--tau", loss_args.tau, "temperature");
    losscheck->add_option("--epsilon", loss_args.epsilon, "margin");
    losscheck->add_option("--tolerance", loss_args.tolerance, "max relative error allowed");
    losscheck->add_option("--fd-step", loss_args.h, "finite-difference step");
    losscheck->add_option("--batches", loss_args.batches, "random batches per loss");
    std::uint64_t loss_seed = 0;
    CLI::Option* loss_seed_opt = losscheck->add_option("--seed", loss_seed, "random seed");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "two-phase adapter training");
    train->add_option("--pairs", train_args.pairs, "pair dataset files");
    train->add_option("--triplets", train_args.triplets, "triplet dataset files");
    train->add_option("--steps1", train_args.steps1, "phase-1 steps");
    train->add_option("--steps2", train_args.steps2, "phase-2 steps");
    train->add_option("--batch-size", train_args.batch_size, "records per batch");
    train->add_option("--lr", train_args.lr, "learning rate");
    train->add_option("--warmup", train_args.warmup, "learning-rate warmup steps");
    train->add_option("--tau", train_args.tau, "temperature");
    train->add_option("--epsilon", train_args.epsilon, "margin");
    train->add_option("--provider", train_args.provider, "embedding provider spec");
    train->add_option("--out-adapter", train_args.out_adapter, "adapter output file");
    train->add_option("--log", train_args.log_path, "training log JSONL file");
    std::uint64_t train_seed = 0;
    CLI::Option* train_seed_opt = train->add_option("--seed", train_seed, "random seed");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a metric over an input file");
    eval->add_option("--task", eval_args.task, "sts | ndcg | map | negation")->required();
    eval->add_option("--in", eval_args.in, "input JSONL file")->required();
    eval->add_option("--k", eval_args.k, "rank cutoff");
    eval->add_option("--provider", eval_args.provider, "embedding provider spec");

    CacheArgs cache_args;
    CLI::App* cache = app.add_subcommand("embed-cache", "precompute an embedding cache");
    cache->add_option("--in", cache_args.in, "text file, one text per line")->required();
    cache->add_option("--out", cache_args.out, "cache output file")->required();
    cache->add_option("--provider", cache_args.provider, "embedding provider spec");
    cache->add_option("--format", cache_args.format, "bin | jsonl");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (filter_seed_opt->count() > 0) filter_args.seed = filter_seed;
    if (sample_seed_opt->count() > 0) sample_args.seed = sample_seed;
    if (loss_seed_opt->count() > 0) loss_args.seed = loss_seed;
    if (train_seed_opt->count() > 0) train_args.seed = train_seed;

    try {
        if (filter->parsed()) return cmd_filter(filter_args);
        if (sample->parsed()) return cmd_sample(sample_args);
        if (losscheck->parsed()) return cmd_losscheck(loss_args);
        if (train->parsed()) return cmd_train(train_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (cache->parsed()) return cmd_embed_cache(cache_args);
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

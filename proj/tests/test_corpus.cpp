#include <doctest.h>

#include "embedkit/corpus.hpp"
#include "embedkit/rng.hpp"

#include "support.hpp"

using namespace embedkit;
using corpus::TextPair;
using corpus::Triplet;

TEST_CASE("load_pairs reads records in order") {
    testsupport::TempDir dir;
    const auto path = dir.file("pairs.jsonl");
    testsupport::write_file(path,
                            "{\"query\":\"a\",\"pos\":\"b\"}\n"
                            "{\"query\":\"c\",\"pos\":\"d\"}\n");
    const auto result = corpus::load_pairs(path);
    REQUIRE(result.records.size() == 2);
    CHECK(result.errors.empty());
    CHECK(result.records[0].query == "a");
    CHECK(result.records[0].positive == "b");
    CHECK(result.records[1].query == "c");
    CHECK(result.records[1].positive == "d");
    // dataset defaults to the file stem
    CHECK(result.records[0].dataset == "pairs");
}

TEST_CASE("load_pairs on empty file") {
    testsupport::TempDir dir;
    const auto path = dir.file("empty.jsonl");
    testsupport::write_file(path, "");
    const auto result = corpus::load_pairs(path);
    CHECK(result.records.empty());
    CHECK(result.errors.empty());
}

TEST_CASE("load_pairs reports malformed lines with numbers") {
    testsupport::TempDir dir;
    const auto path = dir.file("mixed.jsonl");
    testsupport::write_file(path,
                            "{\"query\":\"a\",\"pos\":\"b\"}\n"
                            "{\"query\":\"c\"}\n"
                            "not json at all\n"
                            "{\"query\":\"x\",\"pos\":7}\n"
                            "{\"query\":\"ok\",\"pos\":\"fine\"}\n");
    const auto result = corpus::load_pairs(path);
    REQUIRE(result.records.size() == 2);
    REQUIRE(result.malformed_count() == 3);
    CHECK(result.errors[0].line == 2);
    CHECK(result.errors[1].line == 3);
    CHECK(result.errors[2].line == 4);
}

TEST_CASE("load_pairs rejects invalid utf8 lines") {
    testsupport::TempDir dir;
    const auto path = dir.file("bad_utf8.jsonl");
    testsupport::write_file(path, "{\"query\":\"\xff\xfe\",\"pos\":\"b\"}\n");
    const auto result = corpus::load_pairs(path);
    CHECK(result.records.empty());
    REQUIRE(result.malformed_count() == 1);
    CHECK(result.errors[0].line == 1);
}

TEST_CASE("load_pairs missing file throws") {
    CHECK_THROWS(corpus::load_pairs("/nonexistent/nowhere.jsonl"));
}

TEST_CASE("load_triplets schema and negation view") {
    testsupport::TempDir dir;
    const auto path = dir.file("tri.jsonl");
    testsupport::write_file(path,
                            "{\"query\":\"q\",\"pos\":\"p\",\"neg\":\"n\"}\n"
                            "{\"query\":\"q2\",\"pos\":\"p2\"}\n");
    const auto result = corpus::load_triplets(path);
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0] == Triplet{"q", "p", "n", "tri", ""});
    REQUIRE(result.malformed_count() == 1);
    CHECK(result.errors[0].line == 2);

    const auto neg_path = dir.file("neg.jsonl");
    testsupport::write_file(
        neg_path, "{\"anchor\":\"a\",\"entailment\":\"e\",\"negative\":\"n\"}\n");
    const auto as_tri = corpus::load_triplets(neg_path);
    REQUIRE(as_tri.records.size() == 1);
    CHECK(as_tri.records[0].query == "a");
    CHECK(as_tri.records[0].positive == "e");
    CHECK(as_tri.records[0].negative == "n");

    const auto negation = corpus::load_negation(neg_path);
    REQUIRE(negation.records.size() == 1);
    const auto view = corpus::as_triplets(negation.records, "neg");
    REQUIRE(view.size() == 1);
    CHECK(view[0].query == "a");
    CHECK(view[0].positive == "e");
    CHECK(view[0].negative == "n");
}

TEST_CASE("persist round trip") {
    testsupport::TempDir dir;
    const std::vector<TextPair> pairs = {
        {"a", "b", "set1", ""},
        {"c", "d", "set1", "{\"weight\":2}"},
        {"e", "f", "other", ""},
    };
    const auto path = dir.file("out.jsonl");
    CHECK(corpus::persist(std::span<const TextPair>(pairs), path) == 3);
    const auto loaded = corpus::load_pairs(path);
    CHECK(loaded.errors.empty());
    CHECK(loaded.records == pairs);
}

TEST_CASE("persist empty sequence") {
    testsupport::TempDir dir;
    const auto path = dir.file("empty_out.jsonl");
    CHECK(corpus::persist(std::span<const TextPair>(), path) == 0);
    const auto loaded = corpus::load_pairs(path);
    CHECK(loaded.records.empty());
    CHECK(loaded.errors.empty());
}

TEST_CASE("persist to unwritable destination throws") {
    const std::vector<TextPair> pairs = {{"a", "b", "x", ""}};
    CHECK_THROWS(corpus::persist(std::span<const TextPair>(pairs), "/nonexistent/dir/out.jsonl"));
}

TEST_CASE("round trip survives control characters and newlines") {
    testsupport::TempDir dir;
    Rng rng(37);
    std::vector<TextPair> pairs;
    for (int i = 0; i < 120; ++i) {
        std::string q = testsupport::random_unicode(rng, 24);
        std::string p = testsupport::random_unicode(rng, 24);
        // plant explicit troublemakers
        if (i % 5 == 0) q += "\nline\tbreak\r";
        if (i % 7 == 0) p += std::string(1, '\x01') + "\x1f\"quotes\"";
        pairs.push_back({q, p, "rt", ""});
    }
    const auto path = dir.file("roundtrip.jsonl");
    corpus::persist(std::span<const TextPair>(pairs), path);
    const auto loaded = corpus::load_pairs(path);
    CHECK(loaded.errors.empty());
    CHECK(loaded.records == pairs);
}

TEST_CASE("triplet round trip with extras") {
    testsupport::TempDir dir;
    const std::vector<Triplet> triplets = {
        {"q", "p", "n", "t", "{\"note\":\"x\"}"},
        {"q2\nq2", "p2", "n2", "t", ""},
    };
    const auto path = dir.file("tri_out.jsonl");
    corpus::persist(std::span<const Triplet>(triplets), path);
    const auto loaded = corpus::load_triplets(path);
    CHECK(loaded.errors.empty());
    CHECK(loaded.records == triplets);
}

TEST_CASE("open_dataset sniffs kind and counts parseable records") {
    testsupport::TempDir dir;
    const auto pairs_path = dir.file("p.jsonl");
    testsupport::write_file(pairs_path,
                            "{\"query\":\"a\",\"pos\":\"b\"}\n"
                            "{\"broken\n"
                            "{\"query\":\"c\",\"pos\":\"d\"}\n");
    const auto handle = corpus::open_dataset(pairs_path);
    CHECK(handle.kind == corpus::DatasetKind::pairs);
    CHECK(handle.record_count == 2);
    CHECK(handle.name == "p");
    CHECK(handle.record_count == corpus::load_pairs(pairs_path).records.size());

    const auto tri_path = dir.file("t.jsonl");
    testsupport::write_file(tri_path, "{\"query\":\"a\",\"pos\":\"b\",\"neg\":\"c\"}\n");
    CHECK(corpus::open_dataset(tri_path).kind == corpus::DatasetKind::triplets);

    const auto neg_path = dir.file("n.jsonl");
    testsupport::write_file(neg_path,
                            "{\"anchor\":\"a\",\"entailment\":\"b\",\"negative\":\"c\"}\n");
    CHECK(corpus::open_dataset(neg_path).kind == corpus::DatasetKind::negation);

    const auto junk_path = dir.file("junk.jsonl");
    testsupport::write_file(junk_path, "\n\n");
    CHECK_THROWS(corpus::open_dataset(junk_path));
}

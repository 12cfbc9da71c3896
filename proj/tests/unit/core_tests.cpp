#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "rectify/catalog.hpp"
#include "rectify/embedding.hpp"
#include "rectify/errors.hpp"
#include "rectify/mapper.hpp"
#include "rectify/metrics.hpp"
#include "rectify/rng.hpp"
#include "rectify/text.hpp"
#include "rectify/types.hpp"
#include "test_util.hpp"

using namespace rectify;

namespace {

const char* kCoco80 = "data/coco80_classes.txt";
const char* kSmallCatalog = "tests/data/small_catalog.txt";
const char* kSmallVectors = "data/word_vectors_small.vec";

TokenClassMapper fixture_mapper(double threshold = 0.5) {
    return TokenClassMapper(load_embeddings(kSmallVectors), load_catalog(kSmallCatalog),
                            threshold);
}

RectifierSet make_rect(const std::string& image_id,
                       const std::vector<std::pair<std::string, double>>& class_areas) {
    RectifierSet rect;
    rect.image_id = image_id;
    for (const auto& [cls, area] : class_areas) {
        rect.detections.push_back({cls, 0.9, area});
    }
    return rect;
}

ExplanationObjects make_detected(const std::string& image_id,
                                 const std::set<std::string>& classes) {
    ExplanationObjects d;
    d.image_id = image_id;
    d.classes = classes;
    return d;
}

}  // namespace

TEST_CASE("normalize_token lowercases, trims and collapses whitespace") {
    CHECK(normalize_token("  The  DOG ") == "the dog");
    CHECK(normalize_token("Traffic\t Light") == "traffic light");
    CHECK(normalize_token("cat") == "cat");
    CHECK(normalize_token("   ") == "");
    CHECK(normalize_token("") == "");
}

TEST_CASE("split_words and join round-trip") {
    CHECK(split_words("a dog  runs") == std::vector<std::string>{"a", "dog", "runs"});
    CHECK(split_words("") == std::vector<std::string>{});
    CHECK(join({"a", "b", "c"}, ", ") == "a, b, c");
    CHECK(join({}, ", ") == "");
    CHECK(join({"solo"}, " ") == "solo");
}

TEST_CASE("catalog loads the 80-class fixture in order") {
    const ClassCatalog catalog = load_catalog(kCoco80);
    CHECK(catalog.size() == 80);
    CHECK(catalog.contains("person"));
    CHECK(catalog.contains("traffic light"));
    CHECK(catalog.contains("toothbrush"));
    CHECK_FALSE(catalog.contains("unicorn"));
    CHECK(catalog.index_of("person") == 0);
    CHECK(catalog.classes().front() == "person");
    CHECK(catalog.classes().back() == "toothbrush");
}

TEST_CASE("catalog normalizes names and rejects duplicates and empties") {
    const std::string ok = testutil::write_scratch("cat_ok.txt", "Person\n DOG \n");
    const ClassCatalog catalog = load_catalog(ok);
    CHECK(catalog.classes() == std::vector<std::string>{"person", "dog"});

    const std::string dup = testutil::write_scratch("cat_dup.txt", "dog\ncat\nDog\n");
    CHECK_THROWS_WITH_AS(load_catalog(dup), doctest::Contains("line 3"), ValidationError);

    const std::string empty = testutil::write_scratch("cat_empty.txt", "\n\n");
    CHECK_THROWS_AS(load_catalog(empty), ValidationError);
}

TEST_CASE("RectifierSet class_set dedups and effective_areas keeps the max") {
    RectifierSet rect = make_rect("i", {{"dog", 0.10}, {"cat", 0.05}, {"dog", 0.30}});
    CHECK(rect.class_set() == std::set<std::string>{"cat", "dog"});
    const auto areas = rect.effective_areas();
    CHECK(areas.at("dog") == doctest::Approx(0.30).epsilon(1e-15));
    CHECK(areas.at("cat") == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("embedding store parses the fixture file") {
    const EmbeddingStore store = load_embeddings(kSmallVectors);
    CHECK(store.dimension() == 10);
    CHECK(store.vocab_size() == 18);
    CHECK(store.lookup("dog").size() == 10);
    CHECK(store.lookup("zebra").empty());
}

TEST_CASE("embedding loader enforces the format contract") {
    const std::string bad_header = testutil::write_scratch("emb_h.vec", "two 4\nx 1 2 3 4\n");
    CHECK_THROWS_WITH_AS(load_embeddings(bad_header), doctest::Contains("line 1"),
                         ValidationError);

    const std::string bad_arity =
        testutil::write_scratch("emb_a.vec", "2 4\nx 1 2 3 4\ny 1 2 3\n");
    CHECK_THROWS_WITH_AS(load_embeddings(bad_arity), doctest::Contains("line 3"),
                         ValidationError);

    const std::string bad_number =
        testutil::write_scratch("emb_n.vec", "1 4\nx 1 2 three 4\n");
    CHECK_THROWS_WITH_AS(load_embeddings(bad_number), doctest::Contains("line 2"),
                         ValidationError);

    const std::string dup = testutil::write_scratch("emb_d.vec", "2 2\nx 1 2\nx 3 4\n");
    CHECK_THROWS_WITH_AS(load_embeddings(dup), doctest::Contains("line 3"), ValidationError);

    const std::string short_file = testutil::write_scratch("emb_s.vec", "3 2\nx 1 2\ny 3 4\n");
    CHECK_THROWS_AS(load_embeddings(short_file), ValidationError);

    const std::string tiny = testutil::write_scratch("emb_t.vec", "3 4\nx 1 0 0 0\ny 0 1 0 0\nz 0 0 1 0\n");
    const EmbeddingStore store = load_embeddings(tiny);
    CHECK(store.vocab_size() == 3);
    CHECK(store.dimension() == 4);
}

TEST_CASE("embedding loader honors restrict_to") {
    const std::set<std::string> keep{"dog", "cat", "person"};
    const EmbeddingStore store = load_embeddings(kSmallVectors, &keep);
    CHECK(store.vocab_size() == 3);
    CHECK(store.lookup("dog").size() == 10);
    CHECK(store.lookup("truck").empty());
}

// Similarities below were produced by tests/oracle/cosine_oracle.py over the
// checked-in fixture vectors; rerun that script to audit them.
TEST_CASE("mapper matches the independent cosine oracle") {
    const TokenClassMapper mapper = fixture_mapper();

    struct Expect {
        const char* token;
        const char* cls;
        double sim;
    };
    const Expect mapped[] = {
        {"puppy", "dog", 0.984765011147},   {"kitten", "cat", 0.995074263489},
        {"man", "person", 0.997544231057},  {"woman", "person", 0.996962410084},
        {"vehicle", "car", 0.989705660398}, {"signal", "traffic light", 0.998577313117},
        {"traffic", "traffic light", 0.991026482566},
        {"light", "traffic light", 0.982315802084},
    };
    for (const Expect& e : mapped) {
        const MapResult r = mapper.map(e.token);
        REQUIRE_MESSAGE(r.mapped_class.has_value(), e.token);
        CHECK(*r.mapped_class == e.cls);
        CHECK(r.similarity == doctest::Approx(e.sim).epsilon(1e-9));
        CHECK_FALSE(r.exact_match);
    }

    const MapResult table = mapper.map("table");
    CHECK_FALSE(table.mapped_class.has_value());
    CHECK(table.near_miss);
    CHECK(table.best_class == "bench");
    CHECK(table.best_similarity == doctest::Approx(0.372711321979).epsilon(1e-9));

    const MapResult runs = mapper.map("runs");
    CHECK_FALSE(runs.mapped_class.has_value());
    CHECK_FALSE(runs.near_miss);
    CHECK(runs.best_class == "person");
    CHECK(runs.best_similarity == doctest::Approx(0.297896738079).epsilon(1e-9));

    for (const char* function_word : {"the", "a"}) {
        const MapResult r = mapper.map(function_word);
        CHECK_FALSE(r.mapped_class.has_value());
        CHECK_FALSE(r.near_miss);
        CHECK(r.best_similarity < 0.35);
    }

    const MapResult unknown = mapper.map("xylophone");
    CHECK_FALSE(unknown.mapped_class.has_value());
    CHECK_FALSE(unknown.has_embedding);
}

TEST_CASE("exact catalog matches dominate regardless of threshold") {
    const ClassCatalog coco = load_catalog(kCoco80);
    for (double threshold : {0.5, 0.99, 1.0}) {
        const TokenClassMapper mapper(load_embeddings(kSmallVectors), coco, threshold);
        for (const std::string& cls : coco.classes()) {
            const auto result = mapper.map_token(cls);
            REQUIRE_MESSAGE(result.has_value(), cls);
            CHECK(result->first == cls);
            CHECK(result->second == 1.0);
        }
    }
}

TEST_CASE("plural stripping retries only tokens without embeddings") {
    const TokenClassMapper mapper = fixture_mapper();
    const auto dogs = mapper.map_token("dogs");
    REQUIRE(dogs.has_value());
    CHECK(dogs->first == "dog");
    CHECK(dogs->second == 1.0);
    CHECK(mapper.map_token("cats")->first == "cat");
    CHECK(mapper.map_token("benches")->first == "bench");
    CHECK(mapper.map_token("trucks")->first == "truck");
    // "puppies" stems to neither an embedding nor a catalog name.
    CHECK_FALSE(mapper.map_token("puppies").has_value());
    // "runs" has an embedding, so no retry happens ("run" is never tried).
    CHECK_FALSE(mapper.map_token("runs").has_value());
}

TEST_CASE("raising the threshold never adds mapped tokens") {
    const std::vector<std::string> vocabulary = {
        "puppy", "kitten", "man",  "woman", "vehicle", "signal", "traffic",
        "light", "table",  "runs", "the",   "a",       "dog",    "person",
        "dogs",  "cats",   "benches"};
    const std::vector<double> thresholds = {0.2, 0.35, 0.5, 0.9, 0.99, 1.0};

    std::vector<std::set<std::string>> mapped_sets;
    for (double threshold : thresholds) {
        const TokenClassMapper mapper = fixture_mapper(threshold);
        std::set<std::string> mapped;
        for (const std::string& token : vocabulary) {
            if (mapper.map_token(token)) mapped.insert(token);
        }
        mapped_sets.push_back(std::move(mapped));
    }
    for (std::size_t i = 1; i < mapped_sets.size(); ++i) {
        CHECK(std::includes(mapped_sets[i - 1].begin(), mapped_sets[i - 1].end(),
                            mapped_sets[i].begin(), mapped_sets[i].end()));
    }
    // At 0.2 the near-miss "table" becomes a mapping; at 0.99 "puppy" drops out.
    CHECK(mapped_sets[0].count("table") == 1);
    CHECK(mapped_sets[3].count("puppy") == 1);
    CHECK(mapped_sets[4].count("puppy") == 0);
}

TEST_CASE("mapping decisions are invariant under x7 vector scaling") {
    const ClassCatalog catalog = load_catalog(kSmallCatalog);
    const EmbeddingStore base = load_embeddings(kSmallVectors);
    const TokenClassMapper mapper(base, catalog, 0.5);
    const TokenClassMapper scaled(base.scaled(7.0), catalog, 0.5);

    const std::vector<std::string> vocabulary = {
        "puppy", "kitten", "man",   "woman", "vehicle", "signal", "traffic", "light",
        "table", "runs",   "the",   "a",     "dog",     "cat",    "car",     "person",
        "bench", "truck",  "dogs",  "cats",  "benches", "puppies"};
    for (const std::string& token : vocabulary) {
        const MapResult lhs = mapper.map(token);
        const MapResult rhs = scaled.map(token);
        CHECK(lhs.mapped_class == rhs.mapped_class);
        CHECK(lhs.exact_match == rhs.exact_match);
        CHECK(lhs.near_miss == rhs.near_miss);
        CHECK(lhs.best_class == rhs.best_class);
        CHECK(lhs.best_similarity == doctest::Approx(rhs.best_similarity).epsilon(1e-12));
    }
}

TEST_CASE("extract_objects collects hits and near-miss bookkeeping") {
    const TokenClassMapper mapper = fixture_mapper();

    ExplanationObjects simple = mapper.extract_objects({"a", "dog", "runs"}, "i1");
    CHECK(simple.classes == std::set<std::string>{"dog"});
    CHECK(simple.unmapped_tokens.empty());

    ExplanationObjects empty = mapper.extract_objects({}, "i2");
    CHECK(empty.classes.empty());
    CHECK(empty.unmapped_tokens.empty());

    ExplanationObjects mixed = mapper.extract_objects({"puppy", "kitten", "table"}, "i3");
    CHECK(mixed.classes == std::set<std::string>{"dog", "cat"});
    CHECK(mixed.unmapped_tokens == std::vector<std::string>{"table"});

    ExplanationObjects dedup = mapper.extract_objects({"table", "dog", "table"}, "i4");
    CHECK(dedup.unmapped_tokens == std::vector<std::string>{"table"});

    // Determinism: same inputs, same outputs.
    CHECK(mapper.extract_objects({"puppy", "kitten", "table"}, "i3").classes == mixed.classes);
}

TEST_CASE("score_image reproduces the hand-enumerated set arithmetic") {
    const RectifierSet rect =
        make_rect("i", {{"person", 0.3}, {"frisbee", 0.1}, {"car", 0.2}, {"bench", 0.15}});
    const ExplanationObjects detected =
        make_detected("i", {"person", "dog", "frisbee"});

    const MetricsRecord record = score_image(detected, rect);
    CHECK(record.inconsistency() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(record.completeness() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(record.hallucinated_count == 1);
    CHECK(record.matched_count == 2);
    CHECK_FALSE(record.skipped);
}

TEST_CASE("metric edge cases: identical, empty and disjoint sets") {
    const RectifierSet person = make_rect("i", {{"person", 0.5}});
    CHECK(inconsistency(make_detected("i", {"person"}), person) == 0.0);
    CHECK(completeness(make_detected("i", {"person"}), person) == 1.0);

    const RectifierSet two = make_rect("i", {{"cat", 0.2}, {"chair", 0.3}});
    CHECK(inconsistency(make_detected("i", {}), two) == 0.0);
    CHECK(completeness(make_detected("i", {}), two) == 0.0);

    CHECK(completeness(make_detected("i", {"dog"}), two) == 0.0);

    const RectifierSet empty = make_rect("i", {});
    const MetricsRecord record = score_image(make_detected("i", {"dog"}), empty);
    CHECK(record.skipped);
    CHECK(std::isnan(record.inconsistency()));
    CHECK(std::isnan(record.completeness()));
}

TEST_CASE("inconsistency can exceed 1 and the identity still holds") {
    const RectifierSet rect = make_rect("i", {{"person", 0.5}});
    const ExplanationObjects detected = make_detected("i", {"dog", "cat", "car"});
    const MetricsRecord record = score_image(detected, rect);
    CHECK(record.inconsistency() == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(record.hallucinated_count + record.matched_count == record.detected_count);
    const double identity =
        record.inconsistency() + record.completeness() -
        double(record.detected_count) / record.rectifier_count;
    CHECK(std::abs(identity) <= 1e-12);
}

TEST_CASE("prominence_filter applies the effective-area cutoff") {
    const RectifierSet rect = make_rect("i", {{"person", 0.30}, {"cup", 0.02}});
    CHECK(prominence_filter(rect, {0.05}).class_set() == std::set<std::string>{"person"});
    CHECK(prominence_filter(rect, {0.0}).class_set() == rect.class_set());
    CHECK(prominence_filter(rect, {0.0}).detections.size() == rect.detections.size());

    const RectifierSet sweep = make_rect("i", {{"dog", 0.12}, {"cat", 0.07}, {"bird", 0.04}});
    CHECK(prominence_filter(sweep, {0.05}).class_set() == std::set<std::string>{"cat", "dog"});
    CHECK(prominence_filter(sweep, {0.10}).class_set() == std::set<std::string>{"dog"});
    CHECK(prominence_filter(sweep, {0.15}).class_set().empty());

    // Max rule: one large instance keeps the class alive.
    const RectifierSet multi = make_rect("i", {{"dog", 0.01}, {"dog", 0.20}});
    CHECK(prominence_filter(multi, {0.10}).class_set() == std::set<std::string>{"dog"});
}

TEST_CASE("completeness is not monotone in the prominence threshold") {
    // Rising case: filtering drops an undetected small class.
    const RectifierSet rise_rect = make_rect("i", {{"person", 0.30}, {"cup", 0.02}});
    const ExplanationObjects rise_detected = make_detected("i", {"person"});
    const double rise_before = completeness(rise_detected, rise_rect);
    const double rise_after =
        completeness(rise_detected, prominence_filter(rise_rect, {0.05}));
    CHECK(rise_before == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rise_after == doctest::Approx(1.0).epsilon(1e-15));

    // Falling case: filtering drops the only detected class.
    const ExplanationObjects fall_detected = make_detected("i", {"cup"});
    const double fall_before = completeness(fall_detected, rise_rect);
    const double fall_after =
        completeness(fall_detected, prominence_filter(rise_rect, {0.05}));
    CHECK(fall_before == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(fall_after == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("evaluate_corpus aggregates macro and micro") {
    std::vector<RectifierSet> rects;
    rects.push_back(make_rect("a", {{"dog", 0.2}, {"cat", 0.3}}));
    rects.push_back(make_rect("b", {{"person", 0.4}}));
    std::vector<ExplanationObjects> detected;
    detected.push_back(make_detected("a", {"dog"}));        // completeness 0.5
    detected.push_back(make_detected("b", {"person"}));     // completeness 1.0

    const AggregateReport macro = evaluate_corpus(detected, rects, Aggregation::macro);
    CHECK(macro.n_scored == 2);
    CHECK(macro.n_skipped == 0);
    CHECK(*macro.mean_completeness == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(*macro.mean_inconsistency == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(macro.per_image.size() == 2);
    CHECK(macro.per_image[0].image_id == "a");

    // Micro: (1 + 1) matched over (2 + 1) rectifier classes.
    const AggregateReport micro = evaluate_corpus(detected, rects, Aggregation::micro);
    CHECK(*micro.mean_completeness == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    // Singleton corpus: aggregate equals the per-image record.
    const AggregateReport single =
        evaluate_corpus(std::span(detected.data(), 1), std::span(rects.data(), 1),
                        Aggregation::macro);
    CHECK(*single.mean_completeness ==
          doctest::Approx(single.per_image[0].completeness()).epsilon(1e-15));

    // All-empty rectifiers: everything is skipped, means are absent.
    std::vector<RectifierSet> empty_rects;
    empty_rects.push_back(make_rect("a", {}));
    empty_rects.push_back(make_rect("b", {}));
    const AggregateReport skipped = evaluate_corpus(detected, empty_rects, Aggregation::macro);
    CHECK(skipped.n_scored == 0);
    CHECK(skipped.n_skipped == 2);
    CHECK_FALSE(skipped.mean_inconsistency.has_value());
    CHECK_FALSE(skipped.mean_completeness.has_value());
}

TEST_CASE("evaluate_corpus rejects unmatched image ids") {
    std::vector<RectifierSet> rects;
    rects.push_back(make_rect("a", {{"dog", 0.2}}));
    std::vector<ExplanationObjects> detected;
    detected.push_back(make_detected("b", {"dog"}));
    CHECK_THROWS_WITH_AS(evaluate_corpus(detected, rects, Aggregation::macro),
                         doctest::Contains("unmatched"), ValidationError);
}

TEST_CASE("evaluate_corpus applies prominence before scoring") {
    std::vector<RectifierSet> rects;
    rects.push_back(make_rect("a", {{"person", 0.30}, {"cup", 0.02}}));
    std::vector<ExplanationObjects> detected;
    detected.push_back(make_detected("a", {"person"}));
    const AggregateReport report =
        evaluate_corpus(detected, rects, Aggregation::macro, ProminenceSpec{0.05});
    CHECK(*report.mean_completeness == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("SplitMix64 produces the published stream for seed 0") {
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next() == 0x06C45D188009454FULL);
}

TEST_CASE("SplitMix64 derived distributions stay in range") {
    SplitMix64 rng(123);
    for (int i = 0; i < 1000; ++i) {
        const double d = rng.next_double();
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
        CHECK(rng.next_below(7) < 7);
    }
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) == mix_seed(1, 0));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}

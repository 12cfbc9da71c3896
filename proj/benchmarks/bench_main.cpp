#include <benchmark/benchmark.h>

#include <set>
#include <string>
#include <vector>

#include "rectify/caption.hpp"
#include "rectify/catalog.hpp"
#include "rectify/embedding.hpp"
#include "rectify/io.hpp"
#include "rectify/mapper.hpp"
#include "rectify/metrics.hpp"
#include "rectify/rng.hpp"
#include "rectify/synth.hpp"
#include "rectify/vqa.hpp"

using namespace rectify;

namespace {

const ClassCatalog& catalog() {
    static const ClassCatalog c = load_catalog("data/coco80_classes.txt");
    return c;
}

const TokenClassMapper& mapper() {
    static const TokenClassMapper m(load_embeddings("data/word_vectors_small.vec"),
                                    catalog(), 0.5);
    return m;
}

std::vector<RectifierSet> scenes(int n) {
    SceneSpec spec;
    spec.seed = 7;
    spec.n_images = n;
    return generate_scenes(spec, catalog());
}

void bm_score_image(benchmark::State& state) {
    const std::vector<RectifierSet> rects = scenes(1);
    ExplanationObjects detected;
    detected.image_id = rects[0].image_id;
    detected.classes = {"person", "dog", "car", "bench", "zebra", "kite"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_image(detected, rects[0]));
    }
}
BENCHMARK(bm_score_image);

void bm_evaluate_corpus(benchmark::State& state) {
    const int n = int(state.range(0));
    const std::vector<RectifierSet> rects = scenes(n);
    NoiseSpec noise;
    noise.hallucination_rate = 0.3;
    noise.omission_rate = 0.2;
    std::vector<ExplanationObjects> detected;
    for (std::size_t i = 0; i < rects.size(); ++i) {
        const auto output = noisy_explainer(rects[i], noise, ExplainerShape::object_list,
                                            catalog(), mix_seed(7, i));
        detected.push_back(mapper().extract_objects(
            std::get<ObjectListRecord>(output).objects, rects[i].image_id));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate_corpus(detected, rects, Aggregation::macro));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_evaluate_corpus)->Arg(100)->Arg(1000);

void bm_map_token(benchmark::State& state) {
    const std::vector<std::string> probes = {"puppy", "kitten", "vehicle", "table",
                                             "person", "dogs",   "runs",    "signal"};
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mapper().map_token(probes[i++ % probes.size()]));
    }
}
BENCHMARK(bm_map_token);

void bm_build_caption_tree(benchmark::State& state) {
    const TableProvider provider = load_provider_table("tests/data/provider_table.json");
    TreeParams params;
    params.branching = 2;
    params.top_k = 2;
    params.max_len = 3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_caption_tree(provider, "cap1", params));
    }
}
BENCHMARK(bm_build_caption_tree);

void bm_rectify_answers(benchmark::State& state) {
    const std::vector<RectifierSet> rects = scenes(1);
    NoiseSpec noise;
    noise.hallucination_rate = 0.5;
    const auto output = noisy_explainer(rects[0], noise, ExplainerShape::ranked_answers,
                                        catalog(), 3);
    const RankedAnswers& ranked = std::get<RankedAnswers>(output);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rectify_answers(ranked, 5, rects[0], mapper()));
    }
}
BENCHMARK(bm_rectify_answers);

void bm_prominence_filter(benchmark::State& state) {
    const std::vector<RectifierSet> rects = scenes(1);
    const ProminenceSpec spec{0.10};
    for (auto _ : state) {
        benchmark::DoNotOptimize(prominence_filter(rects[0], spec));
    }
}
BENCHMARK(bm_prominence_filter);

}  // namespace

BENCHMARK_MAIN();

#include "rectify/cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rectify/caption.hpp"
#include "rectify/catalog.hpp"
#include "rectify/embedding.hpp"
#include "rectify/errors.hpp"
#include "rectify/io.hpp"
#include "rectify/mapper.hpp"
#include "rectify/metrics.hpp"
#include "rectify/prompt.hpp"
#include "rectify/rng.hpp"
#include "rectify/synth.hpp"
#include "rectify/types.hpp"
#include "rectify/vqa.hpp"

namespace rectify {

namespace {

// Sink that is either a caller-supplied stream or an opened file.
class OutputSink {
public:
    OutputSink(const std::string& path, std::ostream& fallback) {
        if (path.empty()) {
            stream_ = &fallback;
            return;
        }
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw ValidationError("cannot open output path " + path);
        stream_ = file_.get();
    }

    std::ostream& stream() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
};

struct MapperOptions {
    std::string catalog_path;
    std::string embeddings_path;
    double threshold = 0.5;
};

void add_mapper_options(CLI::App& cmd, MapperOptions& opts) {
    cmd.add_option("--catalog", opts.catalog_path, "class catalog file, one name per line")
        ->required();
    cmd.add_option("--embeddings", opts.embeddings_path,
                   "word vectors in word2vec text format (omit for exact-match mapping only)");
    cmd.add_option("--threshold", opts.threshold, "cosine acceptance threshold")
        ->check(CLI::Range(-1.0, 1.0))
        ->capture_default_str();
}

TokenClassMapper build_mapper(const MapperOptions& opts) {
    ClassCatalog catalog = load_catalog(opts.catalog_path);
    EmbeddingStore store;
    if (!opts.embeddings_path.empty()) store = load_embeddings(opts.embeddings_path);
    return TokenClassMapper(std::move(store), std::move(catalog), opts.threshold);
}

std::map<std::string, const RectifierSet*> index_rectifiers(
    const std::vector<RectifierSet>& sets) {
    std::map<std::string, const RectifierSet*> by_id;
    for (const RectifierSet& set : sets) by_id.emplace(set.image_id, &set);
    return by_id;
}

const RectifierSet& rectifier_for(const std::map<std::string, const RectifierSet*>& by_id,
                                  const std::string& image_id) {
    auto it = by_id.find(image_id);
    if (it == by_id.end()) {
        throw ValidationError("no rectifier set for image \"" + image_id + "\"");
    }
    return *it->second;
}

// ---------------------------------------------------------------------------
// map-vocab

struct MapVocabArgs {
    MapperOptions mapper;
    std::vector<std::string> tokens;
    std::string input_path;
    std::string output_path;
};

int run_map_vocab(const MapVocabArgs& args, std::ostream& out) {
    std::vector<std::string> tokens = args.tokens;
    if (!args.input_path.empty()) {
        std::ifstream in(args.input_path);
        if (!in) throw ValidationError("cannot open " + args.input_path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) tokens.push_back(line);
        }
    }
    if (tokens.empty()) {
        throw ValidationError("map-vocab: no tokens given (positional arguments or --input)");
    }

    const TokenClassMapper mapper = build_mapper(args.mapper);
    OutputSink sink(args.output_path, out);
    for (const std::string& token : tokens) {
        const MapResult result = mapper.map(token);
        nlohmann::ordered_json record;
        record["token"] = token;
        record["class"] = result.mapped_class ? nlohmann::ordered_json(*result.mapped_class)
                                              : nlohmann::ordered_json(nullptr);
        record["similarity"] = result.mapped_class ? nlohmann::ordered_json(result.similarity)
                                                   : nlohmann::ordered_json(nullptr);
        record["exact"] = result.exact_match;
        record["near_miss"] = result.near_miss;
        record["best_class"] = result.best_class;
        record["best_similarity"] = result.best_similarity;
        sink.stream() << record.dump() << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// rectify-caption

struct RectifyCaptionArgs {
    MapperOptions mapper;
    std::string detections_path;
    std::string beams_path;
    std::string provider_path;
    TreeParams tree;
    std::string output_path;
};

int run_rectify_caption(const RectifyCaptionArgs& args, std::ostream& out) {
    const TokenClassMapper mapper = build_mapper(args.mapper);
    const std::vector<RectifierSet> rects =
        ingest_detections(args.detections_path, mapper.catalog());
    const auto by_id = index_rectifiers(rects);

    std::vector<RectifiedCaption> rectified;
    if (!args.beams_path.empty()) {
        for (const CaptionBranch& branch : ingest_caption_beams(args.beams_path)) {
            rectified.push_back(
                rectify_branch(branch, rectifier_for(by_id, branch.image_id), mapper));
        }
    } else {
        const TableProvider provider = load_provider_table(args.provider_path);
        for (const RectifierSet& rect : rects) {
            CaptionTree tree = build_caption_tree(provider, rect.image_id, args.tree);
            for (RectifiedCaption& caption : rectify_tree(tree, rect, mapper)) {
                rectified.push_back(std::move(caption));
            }
        }
    }

    OutputSink sink(args.output_path, out);
    write_rectified_captions_jsonl(rectified, sink.stream());
    return 0;
}

// ---------------------------------------------------------------------------
// rectify-vqa

struct RectifyVqaArgs {
    MapperOptions mapper;
    std::string detections_path;
    std::string answers_path;
    int topk = 5;
    std::string output_path;
};

int run_rectify_vqa(const RectifyVqaArgs& args, std::ostream& out) {
    const TokenClassMapper mapper = build_mapper(args.mapper);
    const std::vector<RectifierSet> rects =
        ingest_detections(args.detections_path, mapper.catalog());
    const auto by_id = index_rectifiers(rects);

    std::vector<RectifiedAnswers> rectified;
    for (const RankedAnswers& ranked : ingest_ranked_answers(args.answers_path)) {
        rectified.push_back(rectify_answers(ranked, args.topk,
                                            rectifier_for(by_id, ranked.image_id), mapper));
    }

    OutputSink sink(args.output_path, out);
    write_rectified_answers_jsonl(rectified, sink.stream());
    return 0;
}

// ---------------------------------------------------------------------------
// rectify-prompt

struct RectifyPromptArgs {
    MapperOptions mapper;
    std::string detections_path;
    std::string transcript_path;
    int max_rounds = 3;
    std::string output_path;
};

int run_rectify_prompt(const RectifyPromptArgs& args, std::ostream& out) {
    const TokenClassMapper mapper = build_mapper(args.mapper);
    const std::vector<RectifierSet> rects =
        ingest_detections(args.detections_path, mapper.catalog());
    TranscriptAgent agent = ingest_transcript(args.transcript_path);

    std::vector<RectificationSession> sessions;
    for (const RectifierSet& rect : rects) {
        sessions.push_back(run_session(agent, rect.image_id, rect, mapper, args.max_rounds));
    }

    OutputSink sink(args.output_path, out);
    write_sessions_jsonl(sessions, sink.stream());
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate / prominence

struct EvaluateArgs {
    MapperOptions mapper;
    std::string detections_path;
    std::string objects_path;
    std::string answers_path;
    std::string beams_path;
    int topk = 0;  // answers shape: 0 = use the whole ranking
    std::string mode = "macro";
    std::vector<double> prominence_thresholds;
    std::string format = "json";
    std::string output_path;
};

void add_evaluate_inputs(CLI::App& cmd, EvaluateArgs& args) {
    add_mapper_options(cmd, args.mapper);
    cmd.add_option("--detections", args.detections_path, "rectifier detections JSONL")
        ->required();
    auto* source = cmd.add_option_group("explainer", "exactly one explainer input shape");
    source->add_option("--objects", args.objects_path, "object-list JSONL");
    source->add_option("--answers", args.answers_path, "ranked-answers JSONL");
    source->add_option("--beams", args.beams_path, "caption-beam JSONL");
    source->require_option(1);
    cmd.add_option("--topk", args.topk,
                   "with --answers: restrict to the k highest-ranked answers (0 = all)")
        ->check(CLI::Range(0, 1 << 20))
        ->capture_default_str();
    cmd.add_option("--mode", args.mode, "aggregation mode")
        ->check(CLI::IsMember({"macro", "micro"}))
        ->capture_default_str();
    cmd.add_option("--format", args.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    cmd.add_option("--output", args.output_path, "report path (default: standard output)");
}

// One ExplanationObjects per image from whichever explainer shape was given.
std::vector<ExplanationObjects> extract_detected(const EvaluateArgs& args,
                                                 const TokenClassMapper& mapper) {
    std::vector<ExplanationObjects> detected;
    if (!args.objects_path.empty()) {
        for (const ObjectListRecord& list : ingest_object_lists(args.objects_path)) {
            detected.push_back(mapper.extract_objects(list.objects, list.image_id));
        }
    } else if (!args.answers_path.empty()) {
        for (const RankedAnswers& ranked : ingest_ranked_answers(args.answers_path)) {
            std::vector<std::string> tokens;
            const std::size_t limit = args.topk == 0
                                          ? ranked.answers.size()
                                          : std::min<std::size_t>(std::size_t(args.topk),
                                                                  ranked.answers.size());
            for (std::size_t i = 0; i < limit; ++i) tokens.push_back(ranked.answers[i].token);
            detected.push_back(mapper.extract_objects(tokens, ranked.image_id));
        }
    } else if (!args.beams_path.empty()) {
        // Branches of one image merge into a single asserted class set.
        std::map<std::string, ExplanationObjects> merged;
        std::vector<std::string> order;
        for (const CaptionBranch& branch : ingest_caption_beams(args.beams_path)) {
            ExplanationObjects objects = mapper.extract_objects(branch.tokens(), branch.image_id);
            auto it = merged.find(branch.image_id);
            if (it == merged.end()) {
                order.push_back(branch.image_id);
                merged.emplace(branch.image_id, std::move(objects));
            } else {
                it->second.classes.insert(objects.classes.begin(), objects.classes.end());
                for (const std::string& token : objects.unmapped_tokens) {
                    auto& seen = it->second.unmapped_tokens;
                    if (std::find(seen.begin(), seen.end(), token) == seen.end()) {
                        seen.push_back(token);
                    }
                }
            }
        }
        for (const std::string& id : order) detected.push_back(std::move(merged.at(id)));
    } else {
        throw ValidationError("evaluate: one of --objects, --answers or --beams is required");
    }
    return detected;
}

RunConfig evaluate_config(const EvaluateArgs& args) {
    RunConfig config;
    config.catalog_path = args.mapper.catalog_path;
    config.embeddings_path = args.mapper.embeddings_path;
    config.similarity_threshold = args.mapper.threshold;
    config.topk = args.topk;
    config.prominence_thresholds = args.prominence_thresholds;
    config.aggregation = args.mode == "micro" ? Aggregation::micro : Aggregation::macro;
    config.input_paths = {args.detections_path};
    for (const std::string& p : {args.objects_path, args.answers_path, args.beams_path}) {
        if (!p.empty()) config.input_paths.push_back(p);
    }
    config.output_path = args.output_path;
    return config;
}

int run_evaluate(const EvaluateArgs& args, std::ostream& out) {
    const TokenClassMapper mapper = build_mapper(args.mapper);
    const std::vector<RectifierSet> rects =
        ingest_detections(args.detections_path, mapper.catalog());
    const std::vector<ExplanationObjects> detected = extract_detected(args, mapper);

    const Aggregation mode = args.mode == "micro" ? Aggregation::micro : Aggregation::macro;
    std::optional<ProminenceSpec> prominence;
    if (!args.prominence_thresholds.empty()) {
        prominence = ProminenceSpec{args.prominence_thresholds.front()};
    }
    const AggregateReport report = evaluate_corpus(detected, rects, mode, prominence);

    OutputSink sink(args.output_path, out);
    emit_report(report, evaluate_config(args), sink.stream(),
                args.format == "csv" ? ReportFormat::csv : ReportFormat::json);
    return 0;
}

int run_prominence(const EvaluateArgs& args, std::ostream& out) {
    const TokenClassMapper mapper = build_mapper(args.mapper);
    const std::vector<RectifierSet> rects =
        ingest_detections(args.detections_path, mapper.catalog());
    const std::vector<ExplanationObjects> detected = extract_detected(args, mapper);
    const Aggregation mode = args.mode == "micro" ? Aggregation::micro : Aggregation::macro;

    std::vector<std::pair<double, AggregateReport>> sweeps;
    for (double threshold : args.prominence_thresholds) {
        sweeps.emplace_back(threshold, evaluate_corpus(detected, rects, mode,
                                                       ProminenceSpec{threshold}));
    }

    OutputSink sink(args.output_path, out);
    emit_prominence_report(sweeps, evaluate_config(args), sink.stream(),
                           args.format == "csv" ? ReportFormat::csv : ReportFormat::json);
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    SceneSpec scene;
    NoiseSpec noise;
    std::string catalog_path;
    std::string shape = "object-list";
    std::string scenes_out;
    std::string explainer_out;
};

int run_simulate(const SimulateArgs& args) {
    const ClassCatalog catalog = load_catalog(args.catalog_path);
    const std::vector<RectifierSet> scenes = generate_scenes(args.scene, catalog);

    ExplainerShape shape = ExplainerShape::object_list;
    if (args.shape == "ranked-answers") shape = ExplainerShape::ranked_answers;
    if (args.shape == "caption-beam") shape = ExplainerShape::caption_beam;

    std::vector<ExplainerOutput> outputs;
    outputs.reserve(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        // Sub-stream 1 of the image's seed; stream 0 built the scene itself.
        const std::uint64_t noise_seed = mix_seed(mix_seed(args.scene.seed, i), 1);
        outputs.push_back(noisy_explainer(scenes[i], args.noise, shape, catalog, noise_seed));
    }

    {
        std::ofstream scenes_file(args.scenes_out);
        if (!scenes_file) throw ValidationError("cannot open output path " + args.scenes_out);
        write_detections_jsonl(scenes, scenes_file);
    }
    {
        std::ofstream explainer_file(args.explainer_out);
        if (!explainer_file) {
            throw ValidationError("cannot open output path " + args.explainer_out);
        }
        write_explainer_outputs_jsonl(outputs, explainer_file);
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Object-set rectification and evaluation for image explanations"};
    app.name("rectify");
    app.require_subcommand(1);

    MapVocabArgs map_vocab;
    auto* map_cmd = app.add_subcommand("map-vocab", "map tokens onto catalog classes");
    map_cmd->add_option("tokens", map_vocab.tokens, "tokens to map");
    map_cmd->add_option("--input", map_vocab.input_path, "file with one token per line");
    map_cmd->add_option("--output", map_vocab.output_path, "JSONL output path");
    add_mapper_options(*map_cmd, map_vocab.mapper);

    RectifyCaptionArgs caption;
    auto* caption_cmd =
        app.add_subcommand("rectify-caption", "substitute hallucinated caption tokens");
    add_mapper_options(*caption_cmd, caption.mapper);
    caption_cmd->add_option("--detections", caption.detections_path, "rectifier detections JSONL")
        ->required();
    auto* caption_source =
        caption_cmd->add_option_group("source", "exactly one caption input shape");
    caption_source->add_option("--beams", caption.beams_path, "recorded caption-beam JSONL");
    caption_source->add_option("--provider", caption.provider_path,
                               "next-token provider table JSON");
    caption_source->require_option(1);
    caption_cmd->add_option("--branching", caption.tree.branching, "children per tree node")
        ->check(CLI::Range(1, 64))
        ->capture_default_str();
    caption_cmd->add_option("--caption-top-k", caption.tree.top_k, "provider top-k per step")
        ->check(CLI::Range(1, 1024))
        ->capture_default_str();
    caption_cmd->add_option("--max-len", caption.tree.max_len, "max body tokens per branch")
        ->check(CLI::Range(1, 1024))
        ->capture_default_str();
    caption_cmd->add_option("--beam-cap", caption.tree.beam_cap, "retained leaves per tree")
        ->check(CLI::Range(1, 4096))
        ->capture_default_str();
    caption_cmd->add_option("--output", caption.output_path, "rectified captions JSONL path");

    RectifyVqaArgs vqa;
    auto* vqa_cmd = app.add_subcommand("rectify-vqa", "reconcile ranked answers");
    add_mapper_options(*vqa_cmd, vqa.mapper);
    vqa_cmd->add_option("--detections", vqa.detections_path, "rectifier detections JSONL")
        ->required();
    vqa_cmd->add_option("--answers", vqa.answers_path, "ranked-answers JSONL")->required();
    vqa_cmd->add_option("--topk", vqa.topk, "answers to emit per image")
        ->check(CLI::Range(1, 1 << 20))
        ->capture_default_str();
    vqa_cmd->add_option("--output", vqa.output_path, "rectified answers JSONL path");

    RectifyPromptArgs prompt;
    auto* prompt_cmd = app.add_subcommand("rectify-prompt", "drive re-prompt sessions");
    add_mapper_options(*prompt_cmd, prompt.mapper);
    prompt_cmd->add_option("--detections", prompt.detections_path, "rectifier detections JSONL")
        ->required();
    prompt_cmd->add_option("--transcript", prompt.transcript_path, "recorded transcript JSONL")
        ->required();
    prompt_cmd->add_option("--max-rounds", prompt.max_rounds, "round budget per session")
        ->check(CLI::Range(1, 1000))
        ->capture_default_str();
    prompt_cmd->add_option("--output", prompt.output_path, "sessions JSONL path");

    EvaluateArgs evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score explanations against detections");
    add_evaluate_inputs(*evaluate_cmd, evaluate);
    evaluate_cmd
        ->add_option("--prominence", evaluate.prominence_thresholds,
                     "area-fraction cutoff applied to the rectifier sets before scoring")
        ->expected(0, 1)
        ->check(CLI::Range(0.0, 1.0));

    EvaluateArgs prominence;
    auto* prominence_cmd =
        app.add_subcommand("prominence", "sweep area-fraction cutoffs and score each");
    add_evaluate_inputs(*prominence_cmd, prominence);
    prominence.prominence_thresholds = {0.05, 0.10, 0.15};
    prominence_cmd
        ->add_option("--thresholds", prominence.prominence_thresholds,
                     "area-fraction cutoffs to sweep")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();

    SimulateArgs simulate;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "generate a seeded synthetic corpus");
    simulate_cmd->add_option("--catalog", simulate.catalog_path, "class catalog file")
        ->required();
    simulate_cmd->add_option("--seed", simulate.scene.seed, "corpus seed")
        ->capture_default_str();
    simulate_cmd->add_option("--images", simulate.scene.n_images, "number of images")
        ->required()
        ->check(CLI::Range(1, 1 << 22));
    simulate_cmd->add_option("--min-classes", simulate.scene.min_classes, "classes per image, lower bound")
        ->check(CLI::Range(1, 1 << 10))
        ->capture_default_str();
    simulate_cmd->add_option("--max-classes", simulate.scene.max_classes, "classes per image, upper bound")
        ->check(CLI::Range(1, 1 << 10))
        ->capture_default_str();
    simulate_cmd->add_option("--area-min", simulate.scene.area_min, "area fraction, lower bound")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate_cmd->add_option("--area-max", simulate.scene.area_max, "area fraction, upper bound")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate_cmd->add_option("--halluc", simulate.noise.hallucination_rate,
                             "off-scene injection probability per slot")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate_cmd->add_option("--omit", simulate.noise.omission_rate,
                             "scene-class drop probability per slot")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate_cmd->add_option("--jitter", simulate.noise.rank_jitter,
                             "adjacent-swap probability per position")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    simulate_cmd->add_option("--shape", simulate.shape, "explainer output shape")
        ->check(CLI::IsMember({"object-list", "ranked-answers", "caption-beam"}))
        ->capture_default_str();
    simulate_cmd->add_option("--scenes-out", simulate.scenes_out, "detections JSONL path")
        ->required();
    simulate_cmd->add_option("--explainer-out", simulate.explainer_out, "explainer JSONL path")
        ->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (map_cmd->parsed()) return run_map_vocab(map_vocab, out);
        if (caption_cmd->parsed()) return run_rectify_caption(caption, out);
        if (vqa_cmd->parsed()) return run_rectify_vqa(vqa, out);
        if (prompt_cmd->parsed()) return run_rectify_prompt(prompt, out);
        if (evaluate_cmd->parsed()) return run_evaluate(evaluate, out);
        if (prominence_cmd->parsed()) return run_prominence(prominence, out);
        if (simulate_cmd->parsed()) return run_simulate(simulate);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    err << "error: no subcommand executed\n";
    return 2;
}

}  // namespace rectify

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rectify/caption.hpp"
#include "rectify/catalog.hpp"
#include "rectify/metrics.hpp"
#include "rectify/prompt.hpp"
#include "rectify/synth.hpp"
#include "rectify/types.hpp"
#include "rectify/vqa.hpp"

namespace rectify {

// Every knob a run can turn, echoed into reports for provenance.
struct RunConfig {
    std::string catalog_path;
    std::string embeddings_path;  // empty = exact-match mapping only
    double similarity_threshold = 0.5;
    int topk = 5;
    int branching = 3;
    int caption_top_k = 10;
    int max_len = 20;
    int beam_cap = 16;
    std::vector<double> prominence_thresholds;
    Aggregation aggregation = Aggregation::macro;
    int max_rounds = 3;
    std::uint64_t seed = 0;
    std::vector<std::string> input_paths;
    std::string output_path;
};

enum class ReportFormat { json, csv };

// --- JSONL ingestion -------------------------------------------------------
// One record per line; every validator names the file and 1-based line
// number on rejection. Files are read line by line, so memory stays bounded
// by the largest record, not the corpus.

// {"image_id": str, "detections": [{"class": str, "score": num, "area_frac": num}]}
// Classes outside the catalog, out-of-range numbers and duplicate image_ids
// are rejected.
std::vector<RectifierSet> ingest_detections(const std::string& path,
                                            const ClassCatalog& catalog);

// {"image_id": str, "steps": [{"chosen": str, "topk": [{"token": str, "p": num}]}]}
// Several records may share an image_id (one per branch). Per-step p must
// be non-increasing and topk non-empty.
std::vector<CaptionBranch> ingest_caption_beams(const std::string& path);

// {"image_id": str, "question": str, "answers": [{"answer": str, "p": num}]}
std::vector<RankedAnswers> ingest_ranked_answers(const std::string& path);

// {"image_id": str, "objects": [str]}
std::vector<ObjectListRecord> ingest_object_lists(const std::string& path);

// {"image_id": str, "prompt": str, "objects": [str]}; duplicate
// (image_id, prompt) keys are rejected.
TranscriptAgent ingest_transcript(const std::string& path);

// --- Emission ---------------------------------------------------------------
// Writers produce the exact shapes the ingestors accept (emit-then-ingest
// is the identity) with deterministic field order.

void write_detections_jsonl(const std::vector<RectifierSet>& sets, std::ostream& out);
void write_caption_beams_jsonl(const std::vector<CaptionBranch>& branches, std::ostream& out);
void write_ranked_answers_jsonl(const std::vector<RankedAnswers>& answers, std::ostream& out);
void write_object_lists_jsonl(const std::vector<ObjectListRecord>& lists, std::ostream& out);
void write_explainer_outputs_jsonl(const std::vector<ExplainerOutput>& outputs,
                                   std::ostream& out);

void write_rectified_captions_jsonl(const std::vector<RectifiedCaption>& captions,
                                    std::ostream& out);
void write_rectified_answers_jsonl(const std::vector<RectifiedAnswers>& answers,
                                   std::ostream& out);
void write_sessions_jsonl(const std::vector<RectificationSession>& sessions,
                          std::ostream& out);

// Metric values rendered to three decimals, e.g. "0.540"; NaN renders "".
std::string format_3dp(double value);

// JSON: config + aggregate + per-image records, 3-decimal strings alongside
// full-precision values. CSV: fixed header and one per-image row, with an
// empty trailing column set for skipped images.
void emit_report(const AggregateReport& report, const RunConfig& config,
                 std::ostream& out, ReportFormat format);

// Sweep variant: one aggregate block per prominence threshold.
void emit_prominence_report(const std::vector<std::pair<double, AggregateReport>>& sweeps,
                            const RunConfig& config, std::ostream& out,
                            ReportFormat format);

// Toy next-token provider table:
// {"images": {"<image_id>": {"<space-joined prefix>": [{"token": str, "p": num}]}}}
TableProvider load_provider_table(const std::string& path);

}  // namespace rectify

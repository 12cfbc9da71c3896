#include "rectify/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <utility>

#include "json.hpp"
#include "rectify/errors.hpp"

namespace rectify {

namespace {

using njson = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, std::size_t line_no, const std::string& what) {
    throw ValidationError(path + ":" + std::to_string(line_no) + ": " + what);
}

njson parse_json_line(const std::string& path, std::size_t line_no, const std::string& line) {
    try {
        return njson::parse(line);
    } catch (const njson::parse_error& e) {
        fail(path, line_no, std::string("malformed JSON: ") + e.what());
    }
}

void require_object(const std::string& path, std::size_t line_no, const njson& value,
                    const char* what) {
    if (!value.is_object()) fail(path, line_no, std::string(what) + " must be a JSON object");
}

// Records carry exactly their declared keys; anything else is a typo or a
// schema drift worth rejecting loudly.
void require_keys(const std::string& path, std::size_t line_no, const njson& obj,
                  std::initializer_list<const char*> keys, const char* what) {
    for (const char* key : keys) {
        if (!obj.contains(key)) {
            fail(path, line_no, std::string(what) + " missing key \"" + key + "\"");
        }
    }
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : keys) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) fail(path, line_no, std::string(what) + " has unknown key \"" + item.key() + "\"");
    }
}

std::string get_string(const std::string& path, std::size_t line_no, const njson& obj,
                       const char* key, const char* what) {
    const njson& v = obj.at(key);
    if (!v.is_string()) fail(path, line_no, std::string(what) + " \"" + key + "\" must be a string");
    return v.get<std::string>();
}

double get_number(const std::string& path, std::size_t line_no, const njson& obj,
                  const char* key, const char* what) {
    const njson& v = obj.at(key);
    if (!v.is_number()) fail(path, line_no, std::string(what) + " \"" + key + "\" must be a number");
    return v.get<double>();
}

const njson& get_array(const std::string& path, std::size_t line_no, const njson& obj,
                       const char* key, const char* what) {
    const njson& v = obj.at(key);
    if (!v.is_array()) fail(path, line_no, std::string(what) + " \"" + key + "\" must be an array");
    return v;
}

std::string get_image_id(const std::string& path, std::size_t line_no, const njson& obj) {
    std::string id = get_string(path, line_no, obj, "image_id", "record");
    if (id.empty()) fail(path, line_no, "record \"image_id\" must be non-empty");
    return id;
}

void check_probability(const std::string& path, std::size_t line_no, double p,
                       const std::string& context) {
    if (!(p > 0.0) || p > 1.0) fail(path, line_no, context + ": p must lie in (0,1]");
}

// Shared shape for beam top-k and ranked answers: [{"<key>": str, "p": num}]
// with distinct strings and non-increasing p.
std::vector<TokenProb> read_scored_list(const std::string& path, std::size_t line_no,
                                        const njson& array, const char* string_key,
                                        const std::string& context) {
    std::vector<TokenProb> out;
    std::set<std::string> seen;
    for (const njson& entry : array) {
        require_object(path, line_no, entry, context.c_str());
        require_keys(path, line_no, entry, {string_key, "p"}, context.c_str());
        TokenProb tp;
        tp.token = get_string(path, line_no, entry, string_key, context.c_str());
        tp.p = get_number(path, line_no, entry, "p", context.c_str());
        check_probability(path, line_no, tp.p, context);
        if (!seen.insert(tp.token).second) {
            fail(path, line_no, context + ": duplicate \"" + tp.token + "\"");
        }
        if (!out.empty() && tp.p > out.back().p) {
            fail(path, line_no, context + ": p must be non-increasing (\"" + tp.token + "\" rises)");
        }
        out.push_back(std::move(tp));
    }
    return out;
}

std::vector<std::string> read_string_array(const std::string& path, std::size_t line_no,
                                           const njson& array, const char* what) {
    std::vector<std::string> out;
    for (const njson& entry : array) {
        if (!entry.is_string()) {
            fail(path, line_no, std::string(what) + " entries must be strings");
        }
        out.push_back(entry.get<std::string>());
    }
    return out;
}

// Streams `path` line by line through `handle(line_no, parsed_object)`.
// Memory stays bounded by the longest record.
template <typename Handler>
void for_each_record(const std::string& path, Handler&& handle) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        njson record = parse_json_line(path, line_no, line);
        require_object(path, line_no, record, "record");
        handle(line_no, record);
    }
}

}  // namespace

std::vector<RectifierSet> ingest_detections(const std::string& path,
                                            const ClassCatalog& catalog) {
    std::vector<RectifierSet> sets;
    std::set<std::string> ids;
    for_each_record(path, [&](std::size_t line_no, const njson& record) {
        require_keys(path, line_no, record, {"image_id", "detections"}, "record");
        RectifierSet set;
        set.image_id = get_image_id(path, line_no, record);
        if (!ids.insert(set.image_id).second) {
            fail(path, line_no, "duplicate image_id \"" + set.image_id + "\"");
        }
        for (const njson& entry : get_array(path, line_no, record, "detections", "record")) {
            require_object(path, line_no, entry, "detection");
            require_keys(path, line_no, entry, {"class", "score", "area_frac"}, "detection");
            Detection d;
            d.class_name = get_string(path, line_no, entry, "class", "detection");
            if (!catalog.contains(d.class_name)) {
                fail(path, line_no, "class \"" + d.class_name + "\" is not in the catalog");
            }
            d.score = get_number(path, line_no, entry, "score", "detection");
            if (d.score < 0.0 || d.score > 1.0) {
                fail(path, line_no, "detection \"score\" must lie in [0,1]");
            }
            d.area_frac = get_number(path, line_no, entry, "area_frac", "detection");
            if (d.area_frac < 0.0 || d.area_frac > 1.0) {
                fail(path, line_no, "detection \"area_frac\" must lie in [0,1]");
            }
            set.detections.push_back(std::move(d));
        }
        sets.push_back(std::move(set));
    });
    return sets;
}

std::vector<CaptionBranch> ingest_caption_beams(const std::string& path) {
    std::vector<CaptionBranch> branches;
    for_each_record(path, [&](std::size_t line_no, const njson& record) {
        require_keys(path, line_no, record, {"image_id", "steps"}, "record");
        CaptionBranch branch;
        branch.image_id = get_image_id(path, line_no, record);
        std::size_t step_index = 0;
        for (const njson& entry : get_array(path, line_no, record, "steps", "record")) {
            const std::string context = "image \"" + branch.image_id + "\" step " +
                                        std::to_string(step_index);
            require_object(path, line_no, entry, context.c_str());
            require_keys(path, line_no, entry, {"chosen", "topk"}, context.c_str());
            BeamStep step;
            step.chosen = get_string(path, line_no, entry, "chosen", context.c_str());
            step.top_k = read_scored_list(path, line_no,
                                          get_array(path, line_no, entry, "topk", context.c_str()),
                                          "token", context + " topk");
            if (step.top_k.empty()) fail(path, line_no, context + ": topk must be non-empty");
            bool chosen_present = false;
            for (const TokenProb& tp : step.top_k) chosen_present |= tp.token == step.chosen;
            if (!chosen_present) {
                fail(path, line_no, context + ": chosen token \"" + step.chosen +
                                        "\" is not in its topk");
            }
            branch.steps.push_back(std::move(step));
            ++step_index;
        }
        branches.push_back(std::move(branch));
    });
    return branches;
}

std::vector<RankedAnswers> ingest_ranked_answers(const std::string& path) {
    std::vector<RankedAnswers> records;
    for_each_record(path, [&](std::size_t line_no, const njson& record) {
        require_keys(path, line_no, record, {"image_id", "question", "answers"}, "record");
        RankedAnswers ranked;
        ranked.image_id = get_image_id(path, line_no, record);
        ranked.question = get_string(path, line_no, record, "question", "record");
        ranked.answers = read_scored_list(
            path, line_no, get_array(path, line_no, record, "answers", "record"), "answer",
            "image \"" + ranked.image_id + "\" answers");
        records.push_back(std::move(ranked));
    });
    return records;
}

std::vector<ObjectListRecord> ingest_object_lists(const std::string& path) {
    std::vector<ObjectListRecord> records;
    for_each_record(path, [&](std::size_t line_no, const njson& record) {
        require_keys(path, line_no, record, {"image_id", "objects"}, "record");
        ObjectListRecord list;
        list.image_id = get_image_id(path, line_no, record);
        list.objects = read_string_array(
            path, line_no, get_array(path, line_no, record, "objects", "record"), "\"objects\"");
        records.push_back(std::move(list));
    });
    return records;
}

TranscriptAgent ingest_transcript(const std::string& path) {
    std::map<TranscriptAgent::Key, std::vector<std::string>> entries;
    for_each_record(path, [&](std::size_t line_no, const njson& record) {
        require_keys(path, line_no, record, {"image_id", "prompt", "objects"}, "record");
        TranscriptAgent::Key key{get_image_id(path, line_no, record),
                                 get_string(path, line_no, record, "prompt", "record")};
        std::vector<std::string> objects = read_string_array(
            path, line_no, get_array(path, line_no, record, "objects", "record"), "\"objects\"");
        if (!entries.emplace(std::move(key), std::move(objects)).second) {
            fail(path, line_no, "duplicate (image_id, prompt) transcript key");
        }
    });
    return TranscriptAgent(std::move(entries));
}

namespace {

ojson detections_json(const RectifierSet& set) {
    ojson record;
    record["image_id"] = set.image_id;
    record["detections"] = ojson::array();
    for (const Detection& d : set.detections) {
        ojson entry;
        entry["class"] = d.class_name;
        entry["score"] = d.score;
        entry["area_frac"] = d.area_frac;
        record["detections"].push_back(std::move(entry));
    }
    return record;
}

ojson scored_list_json(const std::vector<TokenProb>& list, const char* string_key) {
    ojson array = ojson::array();
    for (const TokenProb& tp : list) {
        ojson entry;
        entry[string_key] = tp.token;
        entry["p"] = tp.p;
        array.push_back(std::move(entry));
    }
    return array;
}

ojson beam_json(const CaptionBranch& branch) {
    ojson record;
    record["image_id"] = branch.image_id;
    record["steps"] = ojson::array();
    for (const BeamStep& step : branch.steps) {
        ojson entry;
        entry["chosen"] = step.chosen;
        entry["topk"] = scored_list_json(step.top_k, "token");
        record["steps"].push_back(std::move(entry));
    }
    return record;
}

ojson ranked_json(const RankedAnswers& ranked) {
    ojson record;
    record["image_id"] = ranked.image_id;
    record["question"] = ranked.question;
    record["answers"] = scored_list_json(ranked.answers, "answer");
    return record;
}

ojson object_list_json(const ObjectListRecord& list) {
    ojson record;
    record["image_id"] = list.image_id;
    record["objects"] = list.objects;
    return record;
}

void write_lines(std::ostream& out, const ojson& record) { out << record.dump() << '\n'; }

}  // namespace

void write_detections_jsonl(const std::vector<RectifierSet>& sets, std::ostream& out) {
    for (const RectifierSet& set : sets) write_lines(out, detections_json(set));
}

void write_caption_beams_jsonl(const std::vector<CaptionBranch>& branches, std::ostream& out) {
    for (const CaptionBranch& branch : branches) write_lines(out, beam_json(branch));
}

void write_ranked_answers_jsonl(const std::vector<RankedAnswers>& answers, std::ostream& out) {
    for (const RankedAnswers& ranked : answers) write_lines(out, ranked_json(ranked));
}

void write_object_lists_jsonl(const std::vector<ObjectListRecord>& lists, std::ostream& out) {
    for (const ObjectListRecord& list : lists) write_lines(out, object_list_json(list));
}

void write_explainer_outputs_jsonl(const std::vector<ExplainerOutput>& outputs,
                                   std::ostream& out) {
    for (const ExplainerOutput& output : outputs) {
        if (const auto* list = std::get_if<ObjectListRecord>(&output)) {
            write_lines(out, object_list_json(*list));
        } else if (const auto* ranked = std::get_if<RankedAnswers>(&output)) {
            write_lines(out, ranked_json(*ranked));
        } else {
            write_lines(out, beam_json(std::get<CaptionBranch>(output)));
        }
    }
}

void write_rectified_captions_jsonl(const std::vector<RectifiedCaption>& captions,
                                    std::ostream& out) {
    for (const RectifiedCaption& caption : captions) {
        ojson record;
        record["image_id"] = caption.image_id;
        record["tokens"] = caption.tokens;
        record["replacements"] = ojson::array();
        for (const Replacement& r : caption.replacements) {
            ojson entry;
            entry["position"] = r.position;
            entry["original_token"] = r.original_token;
            entry["replacement_token"] = r.replacement_token;
            entry["original_class"] = r.original_class;
            entry["replacement_class"] =
                r.replacement_class ? ojson(*r.replacement_class) : ojson(nullptr);
            record["replacements"].push_back(std::move(entry));
        }
        record["flagged_positions"] = caption.flagged_positions;
        write_lines(out, record);
    }
}

namespace {

const char* skip_reason_name(SkipReason reason) {
    switch (reason) {
        case SkipReason::not_in_rectifier: return "not_in_rectifier";
        case SkipReason::duplicate_class: return "duplicate_class";
        case SkipReason::unmapped: return "unmapped";
    }
    return "unknown";
}

const char* outcome_name(SessionOutcome outcome) {
    switch (outcome) {
        case SessionOutcome::converged: return "converged";
        case SessionOutcome::max_rounds_reached: return "max_rounds_reached";
        case SessionOutcome::agent_failure: return "agent_failure";
    }
    return "unknown";
}

}  // namespace

void write_rectified_answers_jsonl(const std::vector<RectifiedAnswers>& answers,
                                   std::ostream& out) {
    for (const RectifiedAnswers& rectified : answers) {
        ojson record;
        record["image_id"] = rectified.image_id;
        record["question"] = rectified.question;
        record["answers"] = ojson::array();
        for (const RectifiedAnswer& a : rectified.answers) {
            ojson entry;
            entry["answer"] = a.answer;
            entry["p"] = a.p;
            entry["class"] = a.class_name;
            record["answers"].push_back(std::move(entry));
        }
        record["skipped"] = ojson::array();
        for (const AnswerSkip& s : rectified.skipped) {
            ojson entry;
            entry["answer"] = s.answer;
            entry["p"] = s.p;
            entry["reason"] = skip_reason_name(s.reason);
            record["skipped"].push_back(std::move(entry));
        }
        record["shortfall"] = rectified.shortfall;
        write_lines(out, record);
    }
}

void write_sessions_jsonl(const std::vector<RectificationSession>& sessions,
                          std::ostream& out) {
    for (const RectificationSession& session : sessions) {
        ojson record;
        record["image_id"] = session.image_id;
        record["outcome"] = outcome_name(session.outcome);
        record["rounds"] = ojson::array();
        for (const PromptRound& round : session.rounds) {
            ojson entry;
            entry["prompt"] = round.prompt;
            entry["objects"] = round.objects;
            entry["inconsistent"] = round.inconsistent;
            record["rounds"].push_back(std::move(entry));
        }
        record["final_classes"] =
            std::vector<std::string>(session.final_objects.classes.begin(),
                                     session.final_objects.classes.end());
        record["unmapped_names"] = session.unmapped_names;
        write_lines(out, record);
    }
}

std::string format_3dp(double value) {
    if (std::isnan(value)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", value);
    return buf;
}

namespace {

const char* aggregation_name(Aggregation mode) {
    return mode == Aggregation::macro ? "macro" : "micro";
}

ojson config_json(const RunConfig& config) {
    ojson c;
    c["catalog"] = config.catalog_path;
    c["embeddings"] = config.embeddings_path;
    c["similarity_threshold"] = config.similarity_threshold;
    c["topk"] = config.topk;
    c["branching"] = config.branching;
    c["caption_top_k"] = config.caption_top_k;
    c["max_len"] = config.max_len;
    c["beam_cap"] = config.beam_cap;
    c["prominence_thresholds"] = config.prominence_thresholds;
    c["aggregation"] = aggregation_name(config.aggregation);
    c["max_rounds"] = config.max_rounds;
    c["seed"] = config.seed;
    c["inputs"] = config.input_paths;
    c["output"] = config.output_path;
    return c;
}

// Rendered string next to the full-precision value: tables read well at
// three decimals, downstream tooling needs the exact number.
void put_metric(ojson& obj, const char* name, std::optional<double> value) {
    if (value) {
        obj[name] = format_3dp(*value);
        obj[std::string(name) + "_value"] = *value;
    } else {
        obj[name] = nullptr;
        obj[std::string(name) + "_value"] = nullptr;
    }
}

ojson aggregate_json(const AggregateReport& report) {
    ojson agg;
    agg["mode"] = aggregation_name(report.mode);
    agg["n_scored"] = report.n_scored;
    agg["n_skipped"] = report.n_skipped;
    put_metric(agg, "mean_inconsistency", report.mean_inconsistency);
    put_metric(agg, "mean_completeness", report.mean_completeness);
    return agg;
}

ojson per_image_json(const MetricsRecord& record) {
    ojson row;
    row["image_id"] = record.image_id;
    std::optional<double> inc, com;
    if (!record.skipped) {
        inc = record.inconsistency();
        com = record.completeness();
    }
    put_metric(row, "inconsistency", inc);
    put_metric(row, "completeness", com);
    row["hallucinated_count"] = record.hallucinated_count;
    row["matched_count"] = record.matched_count;
    row["rectifier_count"] = record.rectifier_count;
    row["detected_count"] = record.detected_count;
    row["skipped"] = record.skipped;
    return row;
}

void emit_report_csv(const AggregateReport& report, std::ostream& out) {
    out << "image_id,inconsistency,completeness,rectifier_count,detected_count,skipped\n";
    for (const MetricsRecord& record : report.per_image) {
        out << record.image_id << ','
            << (record.skipped ? "" : format_3dp(record.inconsistency())) << ','
            << (record.skipped ? "" : format_3dp(record.completeness())) << ','
            << record.rectifier_count << ',' << record.detected_count << ','
            << (record.skipped ? "true" : "false") << '\n';
    }
}

}  // namespace

void emit_report(const AggregateReport& report, const RunConfig& config,
                 std::ostream& out, ReportFormat format) {
    if (format == ReportFormat::csv) {
        emit_report_csv(report, out);
        return;
    }
    ojson doc;
    doc["config"] = config_json(config);
    doc["aggregate"] = aggregate_json(report);
    doc["per_image"] = ojson::array();
    for (const MetricsRecord& record : report.per_image) {
        doc["per_image"].push_back(per_image_json(record));
    }
    out << doc.dump(2) << '\n';
}

void emit_prominence_report(const std::vector<std::pair<double, AggregateReport>>& sweeps,
                            const RunConfig& config, std::ostream& out,
                            ReportFormat format) {
    if (format == ReportFormat::csv) {
        out << "threshold,mean_inconsistency,mean_completeness,n_scored,n_skipped\n";
        for (const auto& [threshold, report] : sweeps) {
            out << format_3dp(threshold) << ','
                << (report.mean_inconsistency ? format_3dp(*report.mean_inconsistency) : "") << ','
                << (report.mean_completeness ? format_3dp(*report.mean_completeness) : "") << ','
                << report.n_scored << ',' << report.n_skipped << '\n';
        }
        return;
    }
    ojson doc;
    doc["config"] = config_json(config);
    doc["sweeps"] = ojson::array();
    for (const auto& [threshold, report] : sweeps) {
        ojson sweep;
        sweep["threshold"] = threshold;
        sweep["aggregate"] = aggregate_json(report);
        doc["sweeps"].push_back(std::move(sweep));
    }
    out << doc.dump(2) << '\n';
}

TableProvider load_provider_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    njson doc;
    try {
        doc = njson::parse(in);
    } catch (const njson::parse_error& e) {
        throw ValidationError(path + ": malformed JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_object()) {
        throw ValidationError(path + ": expected {\"images\": {...}}");
    }

    TableProvider::Table table;
    for (const auto& image_item : doc["images"].items()) {
        if (!image_item.value().is_object()) {
            throw ValidationError(path + ": images[\"" + image_item.key() +
                                  "\"] must be an object");
        }
        auto& prefixes = table[image_item.key()];
        for (const auto& prefix_item : image_item.value().items()) {
            const std::string context =
                "images[\"" + image_item.key() + "\"][\"" + prefix_item.key() + "\"]";
            if (!prefix_item.value().is_array() || prefix_item.value().empty()) {
                throw ValidationError(path + ": " + context + " must be a non-empty array");
            }
            std::vector<TokenProb> dist;
            std::set<std::string> seen;
            for (const njson& entry : prefix_item.value()) {
                if (!entry.is_object() || !entry.contains("token") || !entry.contains("p") ||
                    !entry["token"].is_string() || !entry["p"].is_number() || entry.size() != 2) {
                    throw ValidationError(path + ": " + context +
                                          " entries must be {\"token\": str, \"p\": num}");
                }
                TokenProb tp{entry["token"].get<std::string>(), entry["p"].get<double>()};
                if (!(tp.p > 0.0) || tp.p > 1.0) {
                    throw ValidationError(path + ": " + context + ": p must lie in (0,1]");
                }
                if (!seen.insert(tp.token).second) {
                    throw ValidationError(path + ": " + context + ": duplicate token \"" +
                                          tp.token + "\"");
                }
                if (!dist.empty() && tp.p > dist.back().p) {
                    throw ValidationError(path + ": " + context + ": p must be non-increasing");
                }
                dist.push_back(std::move(tp));
            }
            prefixes[prefix_item.key()] = std::move(dist);
        }
    }
    return TableProvider(std::move(table));
}

}  // namespace rectify

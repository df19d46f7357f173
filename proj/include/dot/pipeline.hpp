#pragma once
// End-to-end orchestration: the staged run plus the two single-call
// baseline modes, document assembly, and the versioned trace file. One run
// is single-owner; independent runs may share an immutable database.

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dot/backend.hpp"
#include "dot/casedb.hpp"
#include "dot/core.hpp"
#include "dot/engine.hpp"
#include "dot/errors.hpp"
#include "dot/promptkit.hpp"

namespace dot {

inline constexpr const char* kTraceVersion = "dot-trace/1";

enum class RunMode { Io, Cot, Dot };

inline std::string mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::Io: return "io";
        case RunMode::Cot: return "cot";
        case RunMode::Dot: return "dot";
    }
    throw ConfigError("unknown run mode");
}

inline RunMode mode_from_name(std::string_view name) {
    if (name == "io") return RunMode::Io;
    if (name == "cot") return RunMode::Cot;
    if (name == "dot") return RunMode::Dot;
    throw ConfigError("unknown run mode: " + std::string(name));
}

// The fixed one-shot exemplar for the staged baseline: a worked miniature
// task walked through the four stages. Artifact-authored content, kept in
// one place so the baseline is reproducible; the copy shipped under
// assets/templates/cot_exemplar.txt must stay byte-identical.
inline constexpr const char* kCotExemplar =
    R"(Example task: a wrist band helping office workers stay hydrated.

Discovery: Office workers forget to drink during long focus blocks; existing
bottle-mounted reminders live off-body and get ignored once the bottle is out
of sight.

Requirement Analysis and Definition: The device must sense hydration-relevant
signals on the wrist, remind without disrupting meetings, and run for at
least a full work week per charge.

Produce, Ideate, and Define: A slim band samples skin conductance and
temperature to estimate fluid loss, nudges with a single soft vibration, and
escalates only after repeated misses; a ring of micro-LEDs shows a fill level
that empties as the wearer dehydrates.

Technology Analysis and Definition: Electrodermal electrodes plus a
thermistor on a flexible strap, a coin-cell with a low-power microcontroller,
and a linear vibration motor; worn as an adjustable wrist strap with the
sensing pad against the skin.)";

// One document section. Staged sections carry their stage; baseline bodies
// carry none.
struct DocumentSection {
    std::optional<StageId> stage;
    std::string summary;
    std::vector<ThoughtNode> accepted;
    std::vector<std::string> citations;
};

inline void to_json(json& j, const DocumentSection& s) {
    j = json{{"summary", s.summary}, {"accepted", s.accepted}, {"citations", s.citations}};
    if (s.stage) j["stage"] = stage_name(*s.stage);
}

inline void from_json(const json& j, DocumentSection& s) {
    j.at("summary").get_to(s.summary);
    j.at("accepted").get_to(s.accepted);
    j.at("citations").get_to(s.citations);
    if (j.contains("stage")) {
        s.stage = stage_from_name(j.at("stage").get<std::string>());
    } else {
        s.stage.reset();
    }
}

struct DesignDocument {
    DesignBrief brief;
    RunMode mode = RunMode::Dot;
    std::vector<DocumentSection> sections;
};

inline void to_json(json& j, const DesignDocument& d) {
    j = json{{"brief", d.brief}, {"mode", mode_name(d.mode)}, {"sections", d.sections}};
}

inline void from_json(const json& j, DesignDocument& d) {
    j.at("brief").get_to(d.brief);
    d.mode = mode_from_name(j.at("mode").get<std::string>());
    j.at("sections").get_to(d.sections);
}

// Full observability record for one run. Deterministic for scripted
// backends: no timestamps or latencies, and run_id hashes the inputs.
struct Trace {
    std::string version = kTraceVersion;
    std::string run_id;
    std::string mode;
    DesignBrief brief;
    SearchConfig config;
    std::vector<StepTrace> steps;
    std::vector<std::string> call_fingerprints;
};

inline void to_json(json& j, const Trace& t) {
    j = json{{"version", t.version},
             {"run_id", t.run_id},
             {"mode", t.mode},
             {"brief", t.brief},
             {"config", t.config},
             {"steps", t.steps},
             {"call_fingerprints", t.call_fingerprints}};
}

inline void from_json(const json& j, Trace& t) {
    j.at("version").get_to(t.version);
    j.at("run_id").get_to(t.run_id);
    j.at("mode").get_to(t.mode);
    j.at("brief").get_to(t.brief);
    j.at("config").get_to(t.config);
    j.at("steps").get_to(t.steps);
    j.at("call_fingerprints").get_to(t.call_fingerprints);
}

// A failed run still surfaces everything that completed.
struct RunError : Error {
    RunError(const std::string& message, Trace trace)
        : Error(message), partial_trace(std::move(trace)) {}
    Trace partial_trace;
};

inline std::string compute_run_id(const DesignBrief& brief, const SearchConfig& config,
                                  RunMode mode) {
    json j{{"brief", brief}, {"config", config}, {"mode", mode_name(mode)}};
    return "run-" + fnv1a64_hex(j.dump());
}

namespace detail {

inline std::string io_prompt(const DesignBrief& brief) {
    std::ostringstream out;
    out << "You are designing a wearable device.\n\n"
        << "Design brief:\n"
        << render_brief(brief) << "\n\n"
        << "Propose a complete wearable design solution for this brief: the usage\n"
        << "context, the user needs, the product concept, and the implementation\n"
        << "technology.";
    return out.str();
}

inline std::string cot_prompt(const DesignBrief& brief) {
    std::ostringstream out;
    out << "You are designing a wearable device. Work through the four design\n"
        << "stages in order: Discovery; Requirement Analysis and Definition;\n"
        << "Produce, Ideate, and Define; Technology Analysis and Definition.\n"
        << "Follow the staged format of this worked example.\n\n"
        << kCotExemplar << "\n\n"
        << "Design brief:\n"
        << render_brief(brief);
    return out.str();
}

// Baseline runs are one call; the trace still gets a full step record.
inline DocumentSection single_call_run(const DesignBrief& brief, RunMode mode,
                                       const SearchConfig& config,
                                       const RequestOptions& options, Backend& backend,
                                       std::vector<StepTrace>& sink) {
    const bool staged = mode == RunMode::Cot;
    StepTrace record;
    record.step = 1;
    record.stage = mode_name(mode);
    record.diverge_prompt.method = staged ? "staged-one-shot" : "direct-generation";
    record.diverge_prompt.phase = "diverge";
    record.diverge_prompt.text = staged ? cot_prompt(brief) : io_prompt(brief);
    record.diverge_prompt.ungrounded = true;

    CompletionRequest request{record.diverge_prompt.text, options.temperature,
                              options.max_tokens,
                              options.seed_hint ? options.seed_hint
                                                : std::optional<std::int64_t>(config.seed)};
    std::string text;
    try {
        text = backend.complete(request).text;
    } catch (const Error& e) {
        sink.push_back(std::move(record));
        throw SearchError(std::string("baseline call failed: ") + e.what(), 0);
    }
    record.raw_samples.push_back(text);
    record.tally[canonicalize(text)] = 1;
    record.summary = text;
    sink.push_back(std::move(record));

    DocumentSection section;
    section.summary = text;
    return section;
}

}  // namespace detail

// Executes one run end to end and returns the document plus its trace.
// Engine and backend failures carry the partial trace.
struct RunOutput {
    DesignDocument document;
    Trace trace;
};

inline RunOutput run(const DesignBrief& brief, RunMode mode, const SearchConfig& config,
                     const CaseDb& db, Backend& backend,
                     const TemplateRegistry& registry = TemplateRegistry::builtin(),
                     const RequestOptions& options = {}) {
    brief.validate();
    RunOutput out;
    out.trace.run_id = compute_run_id(brief, config, mode);
    out.trace.mode = mode_name(mode);
    out.trace.brief = brief;
    out.trace.config = config;
    out.document.brief = brief;
    out.document.mode = mode;

    auto capture_fingerprints = [&]() {
        if (!backend.records_calls()) return;
        out.trace.call_fingerprints.clear();
        for (const auto& request : call_log(backend)) {
            out.trace.call_fingerprints.push_back(request_fingerprint(request));
        }
    };

    try {
        if (mode == RunMode::Dot) {
            DesignSolution solution =
                dot_bfs(brief, backend, registry, db, config, options, &out.trace.steps);
            for (std::size_t step = 0; step < solution.results.size(); ++step) {
                const StageResult& result = solution.results[step];
                DocumentSection section;
                section.stage = result.stage;
                section.summary = result.summary;
                section.accepted = result.accepted;
                for (const auto& node : result.accepted) {
                    for (const auto& id : node.citations) {
                        if (std::find(section.citations.begin(), section.citations.end(),
                                      id) == section.citations.end()) {
                            section.citations.push_back(id);
                        }
                    }
                }
                out.document.sections.push_back(std::move(section));
            }
        } else {
            out.document.sections.push_back(detail::single_call_run(
                brief, mode, config, options, backend, out.trace.steps));
        }
    } catch (const Error& e) {
        capture_fingerprints();
        throw RunError(e.what(), out.trace);
    }
    capture_fingerprints();
    return out;
}

// ---------------------------------------------------------------------------
// Trace persistence

inline void export_trace(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write trace file: " + path, 0);
    out << json(trace).dump(2) << "\n";
}

inline Trace import_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read trace file: " + path, 0);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    json parsed;
    try {
        parsed = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed trace: ") + e.what(),
                         e.byte > 0 ? e.byte - 1 : 0);
    }
    if (!parsed.is_object() || parsed.value("version", "") != kTraceVersion) {
        throw ParseError("unsupported trace version in " + path, 0);
    }
    try {
        return parsed.get<Trace>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("incomplete trace: ") + e.what(), 0);
    }
}

// ---------------------------------------------------------------------------
// Trace replay

// Rebuilds the accepted tree of a staged trace: node ids encode their raw
// sample index, frequencies come from the tally, parents follow the
// first-accepted chain. The result must equal the original run's state.
inline TreeState replay_trace(const Trace& trace) {
    if (trace.mode != "dot") {
        throw UnsupportedError("only staged traces can be replayed");
    }
    TreeState state = new_tree_state(trace.brief);
    std::optional<std::string> parent;
    for (const StepTrace& record : trace.steps) {
        if (record.accepted_ids.empty()) break;  // trailing partial step
        StageId stage = stage_from_name(record.stage);
        StageResult result;
        result.stage = stage;
        result.summary = record.summary;
        for (const std::string& id : record.accepted_ids) {
            std::size_t marker = id.rfind("-g");
            if (marker == std::string::npos) {
                throw ParseError("accepted id has no sample index: " + id, 0);
            }
            std::size_t index = std::stoul(id.substr(marker + 2));
            if (index >= record.raw_samples.size()) {
                throw ParseError("accepted id " + id + " points past the raw samples", 0);
            }
            ThoughtNode node;
            node.id = id;
            node.parent_id = parent;
            node.stage = stage;
            node.content = record.raw_samples[index];
            node.kind = NodeKind::Generated;
            node.frequency = record.tally.at(canonicalize(node.content));
            node.citations = record.diverge_prompt.citations;
            result.accepted.push_back(std::move(node));
        }
        parent = result.accepted.front().id;
        state = append_layer(state, result);
    }
    return state;
}

// ---------------------------------------------------------------------------
// Document rendering

enum class DocFormat { Markdown, Plain };

inline std::string section_heading(const DesignDocument& doc, const DocumentSection& section) {
    if (section.stage) return stage_label(*section.stage);
    return doc.mode == RunMode::Cot ? "Staged Design Proposal" : "Design Proposal";
}

// Markdown: one heading per section in stage order, citations footer at the
// end. Plain: same layout without markup. Both byte-deterministic.
inline std::string render_document(const DesignDocument& doc, DocFormat format) {
    std::ostringstream out;
    out << "Design Document (" << mode_name(doc.mode) << " mode)\n";
    out << "Field: " << doc.brief.field << "\n";

    std::vector<std::string> all_citations;
    for (const DocumentSection& section : doc.sections) {
        out << "\n";
        if (format == DocFormat::Markdown) {
            out << "## " << section_heading(doc, section) << "\n\n";
        } else {
            out << "=== " << section_heading(doc, section) << " ===\n\n";
        }
        out << section.summary << "\n";
        if (!section.accepted.empty()) {
            out << "\nAccepted ideas:\n";
            for (const ThoughtNode& node : section.accepted) {
                out << "- " << node.content << " (frequency " << node.frequency << ")\n";
            }
        }
        for (const auto& id : section.citations) {
            if (std::find(all_citations.begin(), all_citations.end(), id) ==
                all_citations.end()) {
                all_citations.push_back(id);
            }
        }
    }

    out << "\nCitations: ";
    if (all_citations.empty()) {
        out << "(none)";
    } else {
        for (std::size_t i = 0; i < all_citations.size(); ++i) {
            if (i) out << ", ";
            out << all_citations[i];
        }
    }
    out << "\n";
    return out.str();
}

}  // namespace dot

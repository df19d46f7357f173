#pragma once
// Prompt construction: a (stage, phase) router over a template registry and
// a pure aggregator that fills placeholders from the tree state, candidate
// tally, and case facets. The registry is immutable after load; rendering
// is a pure function of its arguments.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dot/casedb.hpp"
#include "dot/core.hpp"
#include "dot/errors.hpp"

namespace dot {

enum class Phase { Diverge, Converge };

inline std::string phase_name(Phase phase) {
    return phase == Phase::Diverge ? "diverge" : "converge";
}

inline Phase phase_from_name(std::string_view name) {
    if (name == "diverge") return Phase::Diverge;
    if (name == "converge") return Phase::Converge;
    throw ConfigError("unknown phase: " + std::string(name));
}

// Inserted wherever a prompt would cite case evidence but none is available.
inline constexpr const char* kUngroundedNotice = "[[NO CASE EVIDENCE AVAILABLE]]";

inline const std::vector<std::string>& placeholder_names() {
    static const std::vector<std::string> names{"brief", "prior_layers",
                                                "candidates_with_frequencies", "case_facets",
                                                "examples"};
    return names;
}

// Design-method directive for one (stage, phase) pair.
inline std::string method_for(StageId stage, Phase phase) {
    switch (stage) {
        case StageId::Discovery:
            return phase == Phase::Diverge ? "context-exploration" : "benchmark-analysis";
        case StageId::RequirementAnalysis:
            return phase == Phase::Diverge ? "need-elicitation" : "need-prioritization";
        case StageId::ProduceIdeateDefine:
            return phase == Phase::Diverge ? "function-ideation" : "concept-definition";
        case StageId::TechnologyAnalysis:
            return phase == Phase::Diverge ? "technology-scouting" : "technology-definition";
    }
    throw ConfigError("unknown stage in method routing");
}

struct PromptParams {
    std::string method;
    std::vector<std::string> examples;
    int frequency = 1;

    void validate() const {
        if (method.empty()) throw ValidationError("prompt method must be non-empty");
        if (frequency < 1) throw ValidationError("prompt frequency must be at least 1");
    }
};

// Placeholder tokens are lowercase words in single braces.
inline std::vector<std::string> find_placeholders(std::string_view body) {
    std::vector<std::string> found;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') continue;
        std::size_t end = i + 1;
        while (end < body.size() &&
               ((body[end] >= 'a' && body[end] <= 'z') || body[end] == '_')) {
            ++end;
        }
        if (end > i + 1 && end < body.size() && body[end] == '}') {
            found.emplace_back(body.substr(i + 1, end - i - 1));
            i = end;
        }
    }
    return found;
}

struct PromptTemplate {
    StageId stage = StageId::Discovery;
    Phase phase = Phase::Diverge;
    std::string body;

    void validate() const {
        const auto& declared = placeholder_names();
        bool has_candidates = false;
        for (const auto& name : find_placeholders(body)) {
            if (std::find(declared.begin(), declared.end(), name) == declared.end()) {
                throw TemplateError("unknown placeholder {" + name + "} in " +
                                    stage_name(stage) + " " + phase_name(phase) + " template");
            }
            if (name == "candidates_with_frequencies") has_candidates = true;
        }
        if (phase == Phase::Converge && !has_candidates) {
            throw TemplateError("converge template for " + stage_name(stage) +
                                " must use {candidates_with_frequencies}");
        }
        if (phase == Phase::Diverge && has_candidates) {
            throw TemplateError("diverge template for " + stage_name(stage) +
                                " must not use {candidates_with_frequencies}");
        }
    }
};

struct RenderedPrompt {
    std::string text;
    std::vector<std::string> citations;
    StageId stage = StageId::Discovery;
    Phase phase = Phase::Diverge;
};

namespace detail {

inline std::string render_brief(const DesignBrief& brief) {
    std::ostringstream out;
    out << "field: " << brief.field << "\n"
        << "background: " << brief.background << "\n"
        << "target_audience: " << brief.target_audience << "\n"
        << "target_problems: " << brief.target_problems;
    return out.str();
}

inline std::string render_prior_layers(const TreeState& state) {
    if (state.layers.empty()) return "(none yet)";
    std::ostringstream out;
    for (std::size_t i = 0; i < state.layers.size(); ++i) {
        if (i) out << "\n";
        out << "- [" << stage_label(state.layers[i].stage) << "] " << state.layers[i].summary;
    }
    return out.str();
}

inline std::string render_candidates(const CandidateSet& candidates) {
    std::ostringstream out;
    for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
        if (i) out << "\n";
        out << (i + 1) << ". " << candidates.candidates[i].content << " (frequency "
            << candidates.candidates[i].frequency << ")";
    }
    return out.str();
}

inline std::string render_facets(const std::vector<FacetView>& facets) {
    if (facets.empty()) return kUngroundedNotice;
    std::ostringstream out;
    for (std::size_t i = 0; i < facets.size(); ++i) {
        if (i) out << "\n";
        out << "[case " << facets[i].case_id << "]\n" << facets[i].render();
    }
    return out.str();
}

inline std::string render_examples(const std::vector<std::string>& examples) {
    std::ostringstream out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i) out << "\n\n";
        out << examples[i];
    }
    return out.str();
}

inline std::string substitute(const std::string& body,
                              const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] == '{') {
            std::size_t end = i + 1;
            while (end < body.size() &&
                   ((body[end] >= 'a' && body[end] <= 'z') || body[end] == '_')) {
                ++end;
            }
            if (end > i + 1 && end < body.size() && body[end] == '}') {
                auto it = values.find(body.substr(i + 1, end - i - 1));
                if (it != values.end()) {
                    out += it->second;
                    i = end;
                    continue;
                }
            }
        }
        out.push_back(body[i]);
    }
    return out;
}

}  // namespace detail

// Registry of one template per (stage, phase); the default set covers all
// eight pairs.
class TemplateRegistry {
  public:
    void put(PromptTemplate tmpl) {
        tmpl.validate();
        templates_[key(tmpl.stage, tmpl.phase)] = std::move(tmpl);
    }

    const PromptTemplate& get(StageId stage, Phase phase) const {
        auto it = templates_.find(key(stage, phase));
        if (it == templates_.end()) {
            throw ConfigError("no template registered for " + stage_name(stage) + " " +
                              phase_name(phase));
        }
        return it->second;
    }

    bool has(StageId stage, Phase phase) const {
        return templates_.count(key(stage, phase)) > 0;
    }

    // All eight (stage, phase) pairs present.
    void validate_complete() const {
        for (StageId stage : all_stages()) {
            for (Phase phase : {Phase::Diverge, Phase::Converge}) {
                get(stage, phase);
            }
        }
    }

    std::size_t size() const { return templates_.size(); }

    static TemplateRegistry builtin();

    // One file per pair: header line `stage=<id> phase=<diverge|converge>`,
    // the rest is the body verbatim.
    static TemplateRegistry load_dir(const std::string& dir) {
        namespace fs = std::filesystem;
        if (!fs::is_directory(dir)) throw ConfigError("template dir not found: " + dir);
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".txt") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        TemplateRegistry registry;
        for (const auto& path : files) {
            std::ifstream in(path, std::ios::binary);
            std::string header;
            std::getline(in, header);
            std::ostringstream rest;
            rest << in.rdbuf();
            PromptTemplate tmpl = parse_header(header, path.string());
            tmpl.body = rest.str();
            if (registry.has(tmpl.stage, tmpl.phase)) {
                throw ConfigError("duplicate template for " + stage_name(tmpl.stage) + " " +
                                  phase_name(tmpl.phase) + " in " + dir);
            }
            registry.put(std::move(tmpl));
        }
        return registry;
    }

    void save_dir(const std::string& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        for (const auto& [k, tmpl] : templates_) {
            fs::path path = fs::path(dir) / (stage_name(tmpl.stage) + "_" +
                                             phase_name(tmpl.phase) + ".txt");
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out << "stage=" << stage_name(tmpl.stage) << " phase=" << phase_name(tmpl.phase)
                << "\n"
                << tmpl.body;
        }
    }

  private:
    static int key(StageId stage, Phase phase) {
        return stage_index(stage) * 2 + (phase == Phase::Converge ? 1 : 0);
    }

    static PromptTemplate parse_header(const std::string& header, const std::string& origin) {
        std::istringstream in(header);
        std::string stage_part, phase_part;
        in >> stage_part >> phase_part;
        if (stage_part.rfind("stage=", 0) != 0 || phase_part.rfind("phase=", 0) != 0) {
            throw ConfigError("bad template header in " + origin + ": " + header);
        }
        PromptTemplate tmpl;
        tmpl.stage = stage_from_name(stage_part.substr(6));
        tmpl.phase = phase_from_name(phase_part.substr(6));
        return tmpl;
    }

    std::map<int, PromptTemplate> templates_;
};

// Routes (stage, phase) to the stage method, examples, and call frequency.
// Diverge prompts drive k generator samples, converge prompts drive the
// configured vote count.
inline PromptParams route(const TemplateRegistry& registry, StageId stage, Phase phase, int k,
                          int votes) {
    if (k < 1 || votes < 1) throw ConfigError("route needs k >= 1 and votes >= 1");
    registry.get(stage, phase);
    PromptParams params;
    params.method = method_for(stage, phase);
    params.frequency = phase == Phase::Diverge ? k : votes;
    return params;
}

inline std::optional<std::pair<StageId, Phase>> stage_phase_for_method(const std::string& method) {
    for (StageId stage : all_stages()) {
        for (Phase phase : {Phase::Diverge, Phase::Converge}) {
            if (method_for(stage, phase) == method) return std::make_pair(stage, phase);
        }
    }
    return std::nullopt;
}

// Fills every placeholder of the routed template.
// Citations are the facet case ids, in facet order.
inline RenderedPrompt aggregate(const TemplateRegistry& registry, const PromptParams& params,
                                const TreeState& state,
                                const std::optional<CandidateSet>& candidates,
                                const std::vector<FacetView>& facets) {
    params.validate();
    auto resolved = stage_phase_for_method(params.method);
    if (!resolved) throw ConfigError("unknown prompt method: " + params.method);
    auto [stage, phase] = *resolved;
    const PromptTemplate& tmpl = registry.get(stage, phase);

    if (phase == Phase::Converge && (!candidates || candidates->candidates.empty())) {
        throw TemplateError("converge prompt is missing data for {candidates_with_frequencies}");
    }
    if (phase == Phase::Diverge && candidates) {
        throw ValidationError("diverge prompts take no candidate set");
    }
    if (candidates && candidates->stage != stage) {
        throw ValidationError("candidate set stage does not match the routed template");
    }
    for (const auto& view : facets) {
        if (view.stage != stage) {
            throw ValidationError("facet view for " + stage_name(view.stage) +
                                  " injected into a " + stage_name(stage) + " prompt");
        }
    }

    std::map<std::string, std::string> values;
    values["brief"] = detail::render_brief(state.brief);
    values["prior_layers"] = detail::render_prior_layers(state);
    values["case_facets"] = detail::render_facets(facets);
    values["examples"] = detail::render_examples(params.examples);
    if (candidates) {
        values["candidates_with_frequencies"] = detail::render_candidates(*candidates);
    }

    RenderedPrompt prompt;
    prompt.stage = stage;
    prompt.phase = phase;
    prompt.text = detail::substitute(tmpl.body, values);
    for (const auto& view : facets) prompt.citations.push_back(view.case_id);
    return prompt;
}

// ---------------------------------------------------------------------------
// Default templates. The wording is artifact content; tests assert structure
// (placeholders, facet hygiene, reply markers), never phrasing.

inline TemplateRegistry TemplateRegistry::builtin() {
    TemplateRegistry registry;

    auto add = [&registry](StageId stage, Phase phase, std::string body) {
        registry.put(PromptTemplate{stage, phase, std::move(body)});
    };

    add(StageId::Discovery, Phase::Diverge, R"(Stage: Discovery
Method: context-exploration

You support the discovery step of a wearable device design project.

Design brief:
{brief}

Conclusions so far:
{prior_layers}

Benchmark cases:
{case_facets}

{examples}
Explore the usage context behind this brief. Propose exactly one distinct
context insight or market gap worth pursuing, with a short justification.
Reply with the proposal only.
)");

    add(StageId::Discovery, Phase::Converge, R"(Stage: Discovery
Method: benchmark-analysis

You review discovery proposals for a wearable device design project.

Design brief:
{brief}

Conclusions so far:
{prior_layers}

Proposals with repetition counts:
{candidates_with_frequencies}

{examples}
Judge which proposals hold up as context conclusions when weighed against the
market benchmarks already studied. First reply with one line of the form
"KEEP: <comma-separated candidate numbers>". Then add one line of the form
"SUMMARY: <one-sentence synthesis of the kept proposals>".
)");

    add(StageId::RequirementAnalysis, Phase::Diverge, R"(Stage: Requirement Analysis and Definition
Method: need-elicitation

You elicit user needs for a wearable device design project.

Design brief:
{brief}

Conclusions so far:
{prior_layers}

Related cases:
{case_facets}

{examples}
State exactly one concrete user need or requirement this design must satisfy,
grounded in the brief and the context conclusions. Reply with the need only.
)");

    add(StageId::RequirementAnalysis, Phase::Converge, R"(Stage: Requirement Analysis and Definition
Method: need-prioritization

You prioritize candidate requirements for a wearable device design project.

Design brief:
{brief}

Conclusions so far:
{prior_layers}

Candidate needs with repetition counts:
{candidates_with_frequencies}

{examples}
Select the needs that are essential for this design. First reply with one line
of the form "KEEP: <comma-separated candidate numbers>". Then add one line of
the form "SUMMARY: <one-sentence requirement definition>".
)");

    add(StageId::ProduceIdeateDefine, Phase::Diverge, R"(Stage: Produce, Ideate, and Define
Method: function-ideation

You ideate product functions for a wearable device design project.

Design brief:
{brief}

Conclusions so far:
{prior_layers}

Function and behaviour references:
{case_facets}

{examples}
Propose exactly one product function or interaction concept that serves the
defined requirements. Reply with the concept only.
)");

    add(StageId::ProduceIdeateDefine, Phase::Converge, R"(Stage: Produce, Ideate, and Define
Method: concept-definition

You consolidate function ideas into a product concept.

Design brief:
{brief}

Conclusions so far:
{prior_layers}

Function ideas with repetition counts:
{candidates_with_frequencies}

{examples}
Choose the ideas that belong in the defined concept. First reply with one line
of the form "KEEP: <comma-separated candidate numbers>". Then add one line of
the form "SUMMARY: <one-sentence concept definition>".
)");

    add(StageId::TechnologyAnalysis, Phase::Diverge, R"(Stage: Technology Analysis and Definition
Method: technology-scouting

You scout implementation technologies for a wearable device concept.

Design brief:
{brief}

Conclusions so far:
{prior_layers}

Structural references:
{case_facets}

{examples}
Propose exactly one technical realization (components, placement, or wearing
approach) for the defined concept. Reply with the proposal only.
)");

    add(StageId::TechnologyAnalysis, Phase::Converge, R"(Stage: Technology Analysis and Definition
Method: technology-definition

You finalize the technology package for a wearable device concept.

Design brief:
{brief}

Conclusions so far:
{prior_layers}

Technology proposals with repetition counts:
{candidates_with_frequencies}

{examples}
Select the proposals that define the implementation. First reply with one line
of the form "KEEP: <comma-separated candidate numbers>". Then add one line of
the form "SUMMARY: <one-sentence technology definition>".
)");

    return registry;
}

}  // namespace dot

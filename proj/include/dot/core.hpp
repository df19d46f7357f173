#pragma once
// Thought-tree data model: the design brief, staged layers accepted so far,
// and the duplicate tally that keeps repeated ideas as a frequency signal
// instead of dropping them.

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dot/errors.hpp"

namespace dot {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Stages

// The four design stages, in the only order a run may traverse them.
enum class StageId {
    Discovery = 0,
    RequirementAnalysis = 1,
    ProduceIdeateDefine = 2,
    TechnologyAnalysis = 3,
};

inline constexpr int kStageCount = 4;

inline constexpr std::array<StageId, kStageCount> all_stages() {
    return {StageId::Discovery, StageId::RequirementAnalysis,
            StageId::ProduceIdeateDefine, StageId::TechnologyAnalysis};
}

// Machine identifier, used in files and trace records.
inline std::string stage_name(StageId stage) {
    switch (stage) {
        case StageId::Discovery: return "discovery";
        case StageId::RequirementAnalysis: return "requirement_analysis";
        case StageId::ProduceIdeateDefine: return "produce_ideate_define";
        case StageId::TechnologyAnalysis: return "technology_analysis";
    }
    throw ValidationError("unknown stage id");
}

// Human-facing heading for documents and prompts.
inline std::string stage_label(StageId stage) {
    switch (stage) {
        case StageId::Discovery: return "Discovery";
        case StageId::RequirementAnalysis: return "Requirement Analysis and Definition";
        case StageId::ProduceIdeateDefine: return "Produce, Ideate, and Define";
        case StageId::TechnologyAnalysis: return "Technology Analysis and Definition";
    }
    throw ValidationError("unknown stage id");
}

inline StageId stage_from_name(std::string_view name) {
    for (StageId stage : all_stages()) {
        if (stage_name(stage) == name) return stage;
    }
    throw ValidationError("unknown stage name: " + std::string(name));
}

inline int stage_index(StageId stage) { return static_cast<int>(stage); }

// Successor in stage order; empty after the final stage.
inline std::optional<StageId> next_stage(StageId stage) {
    int i = stage_index(stage) + 1;
    if (i >= kStageCount) return std::nullopt;
    return static_cast<StageId>(i);
}

// ---------------------------------------------------------------------------
// Domain types

// The task input: background, audience, problems and a field label.
// Only background is mandatory content-wise.
struct DesignBrief {
    std::string field;
    std::string background;
    std::string target_audience;
    std::string target_problems;

    void validate() const {
        if (background.empty()) {
            throw ValidationError("design brief background must be non-empty");
        }
    }
};

inline void to_json(json& j, const DesignBrief& b) {
    j = json{{"field", b.field},
             {"background", b.background},
             {"target_audience", b.target_audience},
             {"target_problems", b.target_problems}};
}

inline void from_json(const json& j, DesignBrief& b) {
    j.at("field").get_to(b.field);
    j.at("background").get_to(b.background);
    j.at("target_audience").get_to(b.target_audience);
    j.at("target_problems").get_to(b.target_problems);
}

enum class NodeKind { Generated, Synthesized };

inline std::string node_kind_name(NodeKind kind) {
    return kind == NodeKind::Generated ? "generated" : "synthesized";
}

inline NodeKind node_kind_from_name(std::string_view name) {
    if (name == "generated") return NodeKind::Generated;
    if (name == "synthesized") return NodeKind::Synthesized;
    throw ValidationError("unknown node kind: " + std::string(name));
}

// One idea in the tree. frequency counts near-duplicate occurrences among
// the raw samples that produced it; citations are the case ids embedded in
// the prompt it came from. parent_id is empty only for first-layer nodes.
struct ThoughtNode {
    std::string id;
    std::optional<std::string> parent_id;
    StageId stage = StageId::Discovery;
    std::string content;
    NodeKind kind = NodeKind::Generated;
    int frequency = 1;
    std::vector<std::string> citations;
};

inline void to_json(json& j, const ThoughtNode& n) {
    j = json{{"id", n.id},
             {"stage", stage_name(n.stage)},
             {"content", n.content},
             {"kind", node_kind_name(n.kind)},
             {"frequency", n.frequency},
             {"citations", n.citations}};
    if (n.parent_id) {
        j["parent_id"] = *n.parent_id;
    }
}

inline void from_json(const json& j, ThoughtNode& n) {
    j.at("id").get_to(n.id);
    n.stage = stage_from_name(j.at("stage").get<std::string>());
    j.at("content").get_to(n.content);
    n.kind = node_kind_from_name(j.at("kind").get<std::string>());
    j.at("frequency").get_to(n.frequency);
    j.at("citations").get_to(n.citations);
    if (j.contains("parent_id")) {
        n.parent_id = j.at("parent_id").get<std::string>();
    } else {
        n.parent_id.reset();
    }
}

// Converged output of one stage: the accepted ideas plus the synthesis text
// that carried the majority of votes.
struct StageResult {
    StageId stage = StageId::Discovery;
    std::vector<ThoughtNode> accepted;
    std::string summary;
};

inline void to_json(json& j, const StageResult& r) {
    j = json{{"stage", stage_name(r.stage)},
             {"accepted", r.accepted},
             {"summary", r.summary}};
}

inline void from_json(const json& j, StageResult& r) {
    r.stage = stage_from_name(j.at("stage").get<std::string>());
    j.at("accepted").get_to(r.accepted);
    j.at("summary").get_to(r.summary);
}

// The state of the tree: the brief plus every accepted layer, in stage
// order. Values are immutable once built; append_layer returns a new state.
struct TreeState {
    DesignBrief brief;
    std::vector<StageResult> layers;
};

inline void to_json(json& j, const TreeState& s) {
    j = json{{"brief", s.brief}, {"layers", s.layers}};
}

inline void from_json(const json& j, TreeState& s) {
    j.at("brief").get_to(s.brief);
    j.at("layers").get_to(s.layers);
}

// Divergence output for one stage, before convergence. candidates are in
// first-occurrence order; tally maps canonical content to its frequency.
struct CandidateSet {
    StageId stage = StageId::Discovery;
    std::vector<ThoughtNode> candidates;
    std::map<std::string, int> tally;
};

// ---------------------------------------------------------------------------
// Operations

inline TreeState new_tree_state(const DesignBrief& brief) {
    brief.validate();
    return TreeState{brief, {}};
}

// Appends one stage result; rejects out-of-order stages and empty layers.
inline TreeState append_layer(const TreeState& state, const StageResult& result) {
    StageId expected = state.layers.empty()
                           ? StageId::Discovery
                           : next_stage(state.layers.back().stage).value_or(state.layers.back().stage);
    if (!state.layers.empty() && !next_stage(state.layers.back().stage)) {
        throw SequencingError("no stage may follow " + stage_name(state.layers.back().stage));
    }
    if (result.stage != expected) {
        throw SequencingError("expected stage " + stage_name(expected) + ", got " +
                              stage_name(result.stage));
    }
    if (result.accepted.empty()) {
        throw ValidationError("stage result must accept at least one node");
    }
    for (const ThoughtNode& node : result.accepted) {
        if (node.stage != result.stage) {
            throw ValidationError("accepted node " + node.id + " carries stage " +
                                  stage_name(node.stage) + " inside a " +
                                  stage_name(result.stage) + " result");
        }
    }
    TreeState next = state;
    next.layers.push_back(result);
    return next;
}

// Canonical duplicate key: ASCII case fold, whitespace collapse, terminal
// punctuation stripped. Idempotent by construction.
inline std::string canonicalize(std::string_view content) {
    std::string out;
    out.reserve(content.size());
    bool pending_space = false;
    for (unsigned char c : content) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    while (!out.empty()) {
        char back = out.back();
        if (back == '.' || back == '!' || back == '?' || back == ',' ||
            back == ';' || back == ':' || back == ' ') {
            out.pop_back();
        } else {
            break;
        }
    }
    return out;
}

// One tally group: canonical key, the first occurrence's text, group size.
struct TallyEntry {
    std::string key;
    std::string text;
    int frequency = 0;
};

// Groups samples by canonical key, preserving first-occurrence order and
// keeping the first occurrence as the representative text. Frequencies sum
// to the sample count; nothing is dropped.
inline std::vector<TallyEntry> tally(const std::vector<std::string>& samples) {
    if (samples.empty()) {
        throw ValidationError("tally requires at least one sample");
    }
    std::vector<TallyEntry> entries;
    std::map<std::string, std::size_t> index_by_key;
    for (const std::string& sample : samples) {
        std::string key = canonicalize(sample);
        auto it = index_by_key.find(key);
        if (it == index_by_key.end()) {
            index_by_key.emplace(key, entries.size());
            entries.push_back(TallyEntry{key, sample, 1});
        } else {
            entries[it->second].frequency += 1;
        }
    }
    return entries;
}

}  // namespace dot

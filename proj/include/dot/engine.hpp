#pragma once
// The staged search: a generator that samples k ideas per expansion, a
// synthesizer-backed selector that converges each stage by majority voting,
// and the level-order loop that walks the four stages accumulating accepted
// layers. Steps are strictly sequential; trace records are appended to the
// sink as they complete so partial traces survive failures.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dot/backend.hpp"
#include "dot/casedb.hpp"
#include "dot/core.hpp"
#include "dot/errors.hpp"
#include "dot/promptkit.hpp"

namespace dot {

// Cases injected per step.
inline constexpr int kRetrievalDepth = 3;

struct SearchConfig {
    int k = 3;           // generator samples per expansion
    int keep_width = 3;  // max accepted nodes per stage
    int votes = 3;       // selector samples for self-consistency
    int d_max = 4;       // step limit, one step per stage
    std::int64_t seed = 0;

    void validate() const {
        if (k < 1) throw ConfigError("k must be at least 1");
        if (keep_width < 1 || keep_width > k) {
            throw ConfigError("keep_width must satisfy 1 <= keep_width <= k");
        }
        if (votes < 1) throw ConfigError("votes must be at least 1");
        if (d_max < 1 || d_max > kStageCount) {
            throw ConfigError("d_max must be between 1 and " + std::to_string(kStageCount));
        }
    }
};

inline void to_json(json& j, const SearchConfig& c) {
    j = json{{"k", c.k},
             {"keep_width", c.keep_width},
             {"votes", c.votes},
             {"d_max", c.d_max},
             {"seed", c.seed}};
}

inline void from_json(const json& j, SearchConfig& c) {
    j.at("k").get_to(c.k);
    j.at("keep_width").get_to(c.keep_width);
    j.at("votes").get_to(c.votes);
    j.at("d_max").get_to(c.d_max);
    j.at("seed").get_to(c.seed);
}

// Sampling knobs shared by every request an engine run issues.
struct RequestOptions {
    double temperature = kDefaultTemperature;
    int max_tokens = kDefaultMaxTokens;
    std::optional<std::int64_t> seed_hint;
};

struct DesignSolution {
    std::vector<StageResult> results;  // one StageResult per completed step
    std::string trace_id;
};

inline void to_json(json& j, const DesignSolution& s) {
    j = json{{"results", s.results}, {"trace_id", s.trace_id}};
}

inline void from_json(const json& j, DesignSolution& s) {
    j.at("results").get_to(s.results);
    j.at("trace_id").get_to(s.trace_id);
}

// ---------------------------------------------------------------------------
// Trace records

struct PromptRecord {
    std::string method;
    std::string phase;
    std::string text;
    std::vector<std::string> citations;
    bool ungrounded = false;
};

inline void to_json(json& j, const PromptRecord& r) {
    j = json{{"method", r.method},
             {"phase", r.phase},
             {"text", r.text},
             {"citations", r.citations},
             {"ungrounded", r.ungrounded}};
}

inline void from_json(const json& j, PromptRecord& r) {
    j.at("method").get_to(r.method);
    j.at("phase").get_to(r.phase);
    j.at("text").get_to(r.text);
    j.at("citations").get_to(r.citations);
    j.at("ungrounded").get_to(r.ungrounded);
}

// One expansion step. A record pushed mid-failure has its later fields
// empty; converge_prompt.method empty marks a step that never converged.
struct StepTrace {
    int step = 0;  // 1-based
    std::string stage;
    PromptRecord diverge_prompt;
    std::vector<std::string> raw_samples;
    std::map<std::string, int> tally;
    PromptRecord converge_prompt;
    std::vector<std::string> votes;
    std::vector<std::string> accepted_ids;
    std::string summary;
};

inline void to_json(json& j, const StepTrace& t) {
    j = json{{"step", t.step},
             {"stage", t.stage},
             {"diverge_prompt", t.diverge_prompt},
             {"raw_samples", t.raw_samples},
             {"tally", t.tally},
             {"converge_prompt", t.converge_prompt},
             {"votes", t.votes},
             {"accepted_ids", t.accepted_ids},
             {"summary", t.summary}};
}

inline void from_json(const json& j, StepTrace& t) {
    j.at("step").get_to(t.step);
    j.at("stage").get_to(t.stage);
    j.at("diverge_prompt").get_to(t.diverge_prompt);
    j.at("raw_samples").get_to(t.raw_samples);
    j.at("tally").get_to(t.tally);
    j.at("converge_prompt").get_to(t.converge_prompt);
    j.at("votes").get_to(t.votes);
    j.at("accepted_ids").get_to(t.accepted_ids);
    j.at("summary").get_to(t.summary);
}

// ---------------------------------------------------------------------------
// Vote protocol

// A synthesizer reply must contain a line "KEEP: <numbers>" naming the
// candidate numbers to keep ("KEEP: none" keeps nothing) and may add a line
// "SUMMARY: <text>". Replies without a KEEP line are failed ballots.
struct VoteBallot {
    std::vector<int> kept;  // 1-based candidate numbers, deduplicated
    std::string summary;
};

inline std::optional<VoteBallot> parse_vote(const std::string& text, int n_candidates) {
    std::istringstream in(text);
    std::string line;
    std::optional<VoteBallot> ballot;
    std::string summary;
    while (std::getline(in, line)) {
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;
        std::string_view trimmed = std::string_view(line).substr(start);
        if (!ballot && trimmed.rfind("KEEP:", 0) == 0) {
            VoteBallot parsed;
            std::set<int> seen;
            int value = 0;
            bool in_number = false;
            for (std::size_t i = 5; i <= trimmed.size(); ++i) {
                char c = i < trimmed.size() ? trimmed[i] : ' ';
                if (c >= '0' && c <= '9') {
                    value = value * 10 + (c - '0');
                    in_number = true;
                } else if (in_number) {
                    if (value >= 1 && value <= n_candidates && seen.insert(value).second) {
                        parsed.kept.push_back(value);
                    }
                    value = 0;
                    in_number = false;
                }
            }
            ballot = std::move(parsed);
        } else if (summary.empty() && trimmed.rfind("SUMMARY:", 0) == 0) {
            std::string_view rest = trimmed.substr(8);
            std::size_t text_start = rest.find_first_not_of(" \t");
            summary = text_start == std::string_view::npos ? "" : std::string(rest.substr(text_start));
        }
    }
    if (ballot) ballot->summary = summary;
    return ballot;
}

// Majority vote over ballots of 0-based candidate indexes. A candidate is
// accepted when kept by a strict majority of all issued ballots; accepted
// candidates rank by (vote count, frequency, earlier generation order) and
// truncate to keep_width. When nothing clears the majority the top-ranked
// candidate is kept so a stage never converges to nothing.
inline std::vector<int> majority_accepted(const std::vector<std::vector<int>>& ballots,
                                          const std::vector<int>& frequencies, int keep_width) {
    const int n = static_cast<int>(frequencies.size());
    if (n == 0) throw ValidationError("majority vote over an empty candidate set");
    if (keep_width < 1) throw ValidationError("keep_width must be at least 1");

    std::vector<int> counts(n, 0);
    for (const auto& ballot : ballots) {
        std::set<int> unique(ballot.begin(), ballot.end());
        for (int index : unique) {
            if (index >= 0 && index < n) ++counts[index];
        }
    }

    std::vector<int> ranked(n);
    for (int i = 0; i < n; ++i) ranked[i] = i;
    std::sort(ranked.begin(), ranked.end(), [&](int a, int b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        if (frequencies[a] != frequencies[b]) return frequencies[a] > frequencies[b];
        return a < b;
    });

    const int total = static_cast<int>(ballots.size());
    std::vector<int> accepted;
    for (int index : ranked) {
        if (counts[index] * 2 > total) accepted.push_back(index);
    }
    if (static_cast<int>(accepted.size()) > keep_width) accepted.resize(keep_width);
    if (accepted.empty()) accepted.push_back(ranked[0]);
    return accepted;
}

// ---------------------------------------------------------------------------
// Generator

// Samples the rendered prompt k times and tallies near-duplicates into
// frequencies. Candidate ids encode the first-occurrence sample index.
// raw_out, when given, receives all k raw texts in issue order.
inline CandidateSet generate_candidates(Backend& backend, const RenderedPrompt& prompt, int k,
                                        const RequestOptions& options = {},
                                        std::vector<std::string>* raw_out = nullptr) {
    if (k < 1) throw ValidationError("k must be at least 1");
    if (!find_placeholders(prompt.text).empty()) {
        throw TemplateError("prompt still contains unfilled placeholders");
    }

    CandidateSet set;
    set.stage = prompt.stage;
    std::map<std::string, std::size_t> position;  // canonical key -> candidate index
    for (int i = 0; i < k; ++i) {
        CompletionRequest request{prompt.text, options.temperature, options.max_tokens,
                                  options.seed_hint};
        std::string text;
        try {
            text = backend.complete(request).text;
        } catch (const Error& e) {
            throw SearchError("generator call " + std::to_string(i) + " failed: " + e.what(),
                              i);
        }
        if (raw_out) raw_out->push_back(text);
        std::string key = canonicalize(text);
        auto it = position.find(key);
        if (it == position.end()) {
            ThoughtNode node;
            node.id = stage_name(prompt.stage) + "-g" + std::to_string(i);
            node.stage = prompt.stage;
            node.content = text;
            node.kind = NodeKind::Generated;
            node.frequency = 1;
            node.citations = prompt.citations;
            position.emplace(std::move(key), set.candidates.size());
            set.candidates.push_back(std::move(node));
        } else {
            ++set.candidates[it->second].frequency;
        }
    }
    for (const auto& node : set.candidates) {
        set.tally[canonicalize(node.content)] = node.frequency;
    }
    return set;
}

// ---------------------------------------------------------------------------
// Selector

struct SelectTrace {
    RenderedPrompt prompt;
    std::vector<std::string> votes;
};

// Converges one stage: issues `votes` synthesizer calls over the tallied
// candidates, parses the keep-ballots, and accepts the majority set. The
// result summary is the synthesis text agreed on by the most ballots
// (earliest ballot wins ties); with no summaries at all, the top accepted
// candidate's text stands in.
inline StageResult select(Backend& backend, const TemplateRegistry& registry,
                          const TreeState& state, const CandidateSet& candidates,
                          const SearchConfig& config, const RequestOptions& options = {},
                          SelectTrace* trace = nullptr) {
    config.validate();
    if (candidates.candidates.empty()) {
        throw ValidationError("cannot select from an empty candidate set");
    }

    PromptParams params = route(registry, candidates.stage, Phase::Converge, config.k,
                                config.votes);
    RenderedPrompt prompt = aggregate(registry, params, state, candidates, {});
    if (trace) trace->prompt = prompt;

    const int n = static_cast<int>(candidates.candidates.size());
    std::vector<std::vector<int>> ballots;
    std::vector<std::pair<int, std::string>> summaries;  // ballot index, text
    int parsed_count = 0;
    for (int v = 0; v < config.votes; ++v) {
        CompletionRequest request{prompt.text, options.temperature, options.max_tokens,
                                  options.seed_hint};
        std::string text;
        try {
            text = backend.complete(request).text;
        } catch (const Error& e) {
            throw SearchError("synthesizer call " + std::to_string(v) + " failed: " + e.what(),
                              v);
        }
        if (trace) trace->votes.push_back(text);
        std::optional<VoteBallot> ballot = parse_vote(text, n);
        ballots.emplace_back();
        if (ballot) {
            ++parsed_count;
            for (int number : ballot->kept) ballots.back().push_back(number - 1);
            if (!ballot->summary.empty()) summaries.emplace_back(v, ballot->summary);
        }
    }
    if (parsed_count == 0) {
        throw SearchError("no synthesizer vote produced a parseable ballot");
    }

    std::vector<int> frequencies;
    for (const auto& node : candidates.candidates) frequencies.push_back(node.frequency);
    std::vector<int> accepted_indexes =
        majority_accepted(ballots, frequencies, config.keep_width);

    StageResult result;
    result.stage = candidates.stage;
    for (int index : accepted_indexes) result.accepted.push_back(candidates.candidates[index]);

    if (summaries.empty()) {
        result.summary = result.accepted.front().content;
    } else {
        // Winning key by ballot count; the earliest ballot holding it names
        // the summary text.
        std::map<std::string, int> counts;
        for (const auto& [v, text] : summaries) ++counts[canonicalize(text)];
        std::string best_key;
        int best_count = -1;
        for (const auto& [v, text] : summaries) {
            std::string key = canonicalize(text);
            if (counts[key] > best_count) {
                best_count = counts[key];
                best_key = key;
            }
        }
        for (const auto& [v, text] : summaries) {
            if (canonicalize(text) == best_key) {
                result.summary = text;
                break;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Level-order search

// Case evidence for a step: Discovery benchmarks against products, later
// stages retrieve by brief text plus the latest accepted summary, projected
// to the stage's permitted facets.
inline std::vector<FacetView> step_facets(const CaseDb& db, const TreeState& state,
                                          StageId stage) {
    if (stage == StageId::Discovery) {
        return best_products(db, state.brief, kRetrievalDepth);
    }
    if (db.cases().empty()) return {};
    std::string query = state.brief.background + " " + state.brief.target_problems;
    if (!state.layers.empty()) query += " " + state.layers.back().summary;
    std::vector<FacetView> views;
    for (const auto& hit : retrieve(db, query, kRetrievalDepth)) {
        views.push_back(project(*db.find(hit.case_id), stage));
    }
    return views;
}

inline PromptRecord make_prompt_record(const RenderedPrompt& prompt, const std::string& method,
                                       bool ungrounded) {
    return PromptRecord{method, phase_name(prompt.phase), prompt.text, prompt.citations,
                        ungrounded};
}

// Walks steps 1..d_max in stage order: diverge (k samples), tally, converge
// (majority vote), commit the layer, repeat. Accepted nodes of step i+1
// point at the first accepted node of step i, so every node is reachable
// from the brief. Completed (and in-flight) step records land in the sink.
inline DesignSolution dot_bfs(const DesignBrief& brief, Backend& backend,
                              const TemplateRegistry& registry, const CaseDb& db,
                              const SearchConfig& config, const RequestOptions& options = {},
                              std::vector<StepTrace>* sink = nullptr) {
    config.validate();
    registry.validate_complete();

    RequestOptions effective = options;
    if (!effective.seed_hint) effective.seed_hint = config.seed;

    TreeState state = new_tree_state(brief);
    DesignSolution solution;
    for (int step = 1; step <= config.d_max; ++step) {
        StageId stage = static_cast<StageId>(step - 1);
        StepTrace record;
        record.step = step;
        record.stage = stage_name(stage);
        try {
            std::vector<FacetView> facets = step_facets(db, state, stage);
            const bool ungrounded = facets.empty();

            PromptParams diverge_params =
                route(registry, stage, Phase::Diverge, config.k, config.votes);
            RenderedPrompt diverge_prompt =
                aggregate(registry, diverge_params, state, std::nullopt, facets);
            record.diverge_prompt =
                make_prompt_record(diverge_prompt, diverge_params.method, ungrounded);

            CandidateSet candidates = generate_candidates(backend, diverge_prompt, config.k,
                                                          effective, &record.raw_samples);
            if (!state.layers.empty()) {
                for (auto& node : candidates.candidates) {
                    node.parent_id = state.layers.back().accepted.front().id;
                }
            }
            record.tally = candidates.tally;

            SelectTrace selection;
            StageResult result =
                select(backend, registry, state, candidates, config, effective, &selection);
            record.converge_prompt = make_prompt_record(
                selection.prompt, method_for(stage, Phase::Converge), ungrounded);
            record.votes = selection.votes;
            for (const auto& node : result.accepted) record.accepted_ids.push_back(node.id);
            record.summary = result.summary;

            state = append_layer(state, result);
            solution.results.push_back(result);
            if (sink) sink->push_back(std::move(record));
        } catch (...) {
            if (sink) sink->push_back(std::move(record));
            throw;
        }
    }
    return solution;
}

}  // namespace dot

// Engine: generator tally semantics, majority voting against a brute-force
// oracle, and the four-stage level-order run (shape, accounting, parent
// links, determinism, partial traces).

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "dot/engine.hpp"

namespace {

// ---------------------------------------------------------------------------
// Oracle: exhaustive vote counting, written before the selector. Counts by
// scanning, extracts winners selection-sort style, applies the documented
// rank (vote count, then frequency, then generation order) and fallback.

std::vector<int> oracle_majority(const std::vector<std::vector<int>>& ballots,
                                 const std::vector<int>& freqs, int keep_width) {
    const int n = static_cast<int>(freqs.size());
    const int total = static_cast<int>(ballots.size());
    std::vector<int> counts(n, 0);
    for (const auto& ballot : ballots) {
        for (int i = 0; i < n; ++i) {
            bool kept = false;
            for (int entry : ballot) {
                if (entry == i) kept = true;
            }
            if (kept) ++counts[i];
        }
    }

    auto better = [&](int a, int b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        if (freqs[a] != freqs[b]) return freqs[a] > freqs[b];
        return a < b;
    };

    std::vector<int> pool;
    for (int i = 0; i < n; ++i) {
        if (2 * counts[i] > total) pool.push_back(i);
    }
    bool fallback = pool.empty();
    if (fallback) {
        for (int i = 0; i < n; ++i) pool.push_back(i);
    }

    std::vector<int> out;
    int limit = fallback ? 1 : keep_width;
    while (!pool.empty() && static_cast<int>(out.size()) < limit) {
        int best = pool[0];
        for (int candidate : pool) {
            if (better(candidate, best)) best = candidate;
        }
        out.push_back(best);
        pool.erase(std::find(pool.begin(), pool.end(), best));
    }
    return out;
}

dot::DesignBrief mask_brief() {
    return dot::DesignBrief{
        "Healthcare and Medical",
        "Prolonged mask wearing during epidemics causes discomfort, heat and "
        "communication problems for everyday wearers.",
        "Commuters, medical staff, and people in crowded public spaces.",
        "Make protective masks comfortable and smart without losing filtration."};
}

dot::RenderedPrompt plain_prompt(dot::StageId stage,
                                 const std::vector<std::string>& citations = {}) {
    dot::RenderedPrompt prompt;
    prompt.stage = stage;
    prompt.phase = dot::Phase::Diverge;
    prompt.text = "fully rendered prompt for " + dot::stage_name(stage);
    prompt.citations = citations;
    return prompt;
}

dot::CandidateSet scripted_candidates(dot::StageId stage,
                                      const std::vector<std::pair<std::string, int>>& entries) {
    dot::CandidateSet set;
    set.stage = stage;
    int sample_index = 0;
    for (const auto& [text, freq] : entries) {
        dot::ThoughtNode node;
        node.id = dot::stage_name(stage) + "-g" + std::to_string(sample_index);
        node.stage = stage;
        node.content = text;
        node.frequency = freq;
        set.candidates.push_back(node);
        set.tally[dot::canonicalize(text)] = freq;
        sample_index += freq;
    }
    return set;
}

std::vector<dot::ScriptEntry> responses(const std::vector<std::string>& texts) {
    std::vector<dot::ScriptEntry> script;
    for (const auto& t : texts) script.push_back(dot::ScriptEntry{{}, t});
    return script;
}

// Full scripted run: per stage, k diverge replies anchored to the stage's
// diverge method, then `votes` converge ballots anchored to its converge
// method. Out-of-order requests would trip a match constraint.
std::vector<dot::ScriptEntry> full_run_script(int d_max, int k, int votes) {
    std::vector<dot::ScriptEntry> script;
    for (int step = 1; step <= d_max; ++step) {
        dot::StageId stage = static_cast<dot::StageId>(step - 1);
        for (int i = 0; i < k; ++i) {
            // Repeat one idea so tallies stay interesting.
            std::string idea = dot::stage_name(stage) +
                               (i + 1 < k ? " idea alpha" : " idea beta");
            script.push_back(dot::ScriptEntry{
                "Method: " + dot::method_for(stage, dot::Phase::Diverge), idea});
        }
        for (int v = 0; v < votes; ++v) {
            script.push_back(dot::ScriptEntry{
                "Method: " + dot::method_for(stage, dot::Phase::Converge),
                "KEEP: 1\nSUMMARY: " + dot::stage_name(stage) + " direction"});
        }
    }
    return script;
}

dot::SearchConfig small_config(int d_max = 4, int k = 3, int keep_width = 1, int votes = 3) {
    dot::SearchConfig config;
    config.d_max = d_max;
    config.k = k;
    config.keep_width = keep_width;
    config.votes = votes;
    config.seed = 7;
    return config;
}

}  // namespace

TEST_CASE("search config invariants") {
    dot::SearchConfig config;
    CHECK_NOTHROW(config.validate());

    auto invalid = [](auto mutate) {
        dot::SearchConfig c;
        mutate(c);
        CHECK_THROWS_AS(c.validate(), dot::ConfigError);
    };
    invalid([](dot::SearchConfig& c) { c.k = 0; });
    invalid([](dot::SearchConfig& c) { c.keep_width = 0; });
    invalid([](dot::SearchConfig& c) { c.keep_width = c.k + 1; });
    invalid([](dot::SearchConfig& c) { c.votes = 0; });
    invalid([](dot::SearchConfig& c) { c.d_max = 0; });
    invalid([](dot::SearchConfig& c) { c.d_max = 5; });
}

TEST_CASE("vote parsing extracts keeps and summaries") {
    auto ballot = dot::parse_vote("KEEP: 1, 3\nSUMMARY: merged view", 4);
    REQUIRE(ballot);
    CHECK(ballot->kept == std::vector<int>{1, 3});
    CHECK(ballot->summary == "merged view");

    auto spaced = dot::parse_vote("noise\n  KEEP: 2 4 2\nSUMMARY:   padded  ", 4);
    REQUIRE(spaced);
    CHECK(spaced->kept == std::vector<int>{2, 4});
    CHECK(spaced->summary == "padded  ");

    auto none = dot::parse_vote("KEEP: none\nSUMMARY: drop everything", 3);
    REQUIRE(none);
    CHECK(none->kept.empty());

    auto filtered = dot::parse_vote("KEEP: 0, 2, 9", 3);
    REQUIRE(filtered);
    CHECK(filtered->kept == std::vector<int>{2});

    CHECK_FALSE(dot::parse_vote("no ballot here", 3));
    CHECK_FALSE(dot::parse_vote("", 3));
}

TEST_CASE("majority vote matches the exhaustive oracle") {
    std::mt19937 rng(90125);
    std::uniform_int_distribution<int> n_dist(1, 6);
    std::uniform_int_distribution<int> freq_dist(1, 4);
    std::uniform_int_distribution<int> coin(0, 1);

    for (int trial = 0; trial < 100; ++trial) {
        int n = n_dist(rng);
        std::vector<int> freqs;
        for (int i = 0; i < n; ++i) freqs.push_back(freq_dist(rng));
        std::vector<std::vector<int>> ballots(5);
        for (auto& ballot : ballots) {
            for (int i = 0; i < n; ++i) {
                if (coin(rng)) ballot.push_back(i);
            }
        }
        std::uniform_int_distribution<int> width_dist(1, n);
        int keep_width = width_dist(rng);

        INFO("trial " << trial << " n=" << n << " keep_width=" << keep_width);
        CHECK(dot::majority_accepted(ballots, freqs, keep_width) ==
              oracle_majority(ballots, freqs, keep_width));
    }
}

TEST_CASE("majority vote guards its inputs") {
    CHECK_THROWS_AS(dot::majority_accepted({}, {}, 1), dot::ValidationError);
    CHECK_THROWS_AS(dot::majority_accepted({{0}}, {1}, 0), dot::ValidationError);
    // No majority at all falls back to the single top-ranked candidate.
    CHECK(dot::majority_accepted({{}, {}, {}}, {1, 5, 2}, 3) == std::vector<int>{1});
}

TEST_CASE("generator tallies duplicates and keeps first-occurrence order") {
    dot::MockBackend mock(responses({"x", "x", "y"}));
    auto prompt = plain_prompt(dot::StageId::Discovery, {"w01"});
    std::vector<std::string> raw;
    dot::CandidateSet set = dot::generate_candidates(mock, prompt, 3, {}, &raw);

    REQUIRE(set.candidates.size() == 2);
    CHECK(set.candidates[0].content == "x");
    CHECK(set.candidates[0].frequency == 2);
    CHECK(set.candidates[0].id == "discovery-g0");
    CHECK(set.candidates[1].content == "y");
    CHECK(set.candidates[1].frequency == 1);
    CHECK(set.candidates[1].id == "discovery-g2");
    CHECK(set.tally == std::map<std::string, int>{{"x", 2}, {"y", 1}});
    CHECK(raw == std::vector<std::string>{"x", "x", "y"});
    CHECK(set.candidates[0].citations == std::vector<std::string>{"w01"});
    CHECK(dot::call_log(mock).size() == 3);
}

TEST_CASE("generator with k=1 issues exactly one call") {
    dot::MockBackend mock(responses({"only idea"}));
    dot::CandidateSet set =
        dot::generate_candidates(mock, plain_prompt(dot::StageId::Discovery), 1);
    CHECK(dot::call_log(mock).size() == 1);
    REQUIRE(set.candidates.size() == 1);
    CHECK(set.candidates[0].frequency == 1);
}

TEST_CASE("generator multiset equals the script multiset under canonicalization") {
    std::vector<std::string> script_texts;
    for (int i = 0; i < 20; ++i) {
        script_texts.push_back("Idea " + std::to_string(i % 6) + (i % 2 ? "." : ""));
    }
    dot::MockBackend mock(responses(script_texts));
    dot::CandidateSet set =
        dot::generate_candidates(mock, plain_prompt(dot::StageId::Discovery), 20);

    // Oracle: canonical multiset straight from the script.
    std::map<std::string, int> expected;
    for (const auto& text : script_texts) ++expected[dot::canonicalize(text)];
    CHECK(set.tally == expected);

    int total = 0;
    for (const auto& node : set.candidates) total += node.frequency;
    CHECK(total == 20);
}

TEST_CASE("generator rejects bad prompts and propagates backend failures") {
    dot::MockBackend mock(responses({"a"}));
    auto unfilled = plain_prompt(dot::StageId::Discovery);
    unfilled.text = "leftover {brief} marker";
    CHECK_THROWS_AS(dot::generate_candidates(mock, unfilled, 1), dot::TemplateError);
    CHECK(dot::call_log(mock).empty());

    CHECK_THROWS_AS(dot::generate_candidates(mock, plain_prompt(dot::StageId::Discovery), 0),
                    dot::ValidationError);

    dot::MockBackend short_mock(responses({"a", "b"}));
    try {
        dot::generate_candidates(short_mock, plain_prompt(dot::StageId::Discovery), 4);
        FAIL("expected a search error");
    } catch (const dot::SearchError& e) {
        CHECK(e.request_index == 2);
    }
}

TEST_CASE("selection from a singleton accepts the candidate") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::TreeState state = dot::new_tree_state(mask_brief());
    dot::CandidateSet candidates =
        scripted_candidates(dot::StageId::Discovery, {{"only option", 3}});

    dot::MockBackend mock(responses({"KEEP: 1", "KEEP: 1", "KEEP: none"}));
    dot::StageResult result =
        dot::select(mock, registry, state, candidates, small_config(4, 3, 2, 3));
    REQUIRE(result.accepted.size() == 1);
    CHECK(result.accepted[0].content == "only option");
    // No SUMMARY lines: the top accepted candidate's text stands in.
    CHECK(result.summary == "only option");
}

TEST_CASE("majority forced by two of three ballots") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::TreeState state = dot::new_tree_state(mask_brief());
    dot::CandidateSet candidates =
        scripted_candidates(dot::StageId::Discovery, {{"A", 1}, {"B", 1}, {"C", 1}});

    dot::MockBackend mock(responses({"KEEP: 1, 2\nSUMMARY: ab view",
                                     "KEEP: 1\nSUMMARY: a view",
                                     "KEEP: 1, 2\nSUMMARY: ab view"}));
    dot::StageResult result =
        dot::select(mock, registry, state, candidates, small_config(4, 3, 2, 3));

    REQUIRE(result.accepted.size() == 2);
    CHECK(result.accepted[0].content == "A");
    CHECK(result.accepted[1].content == "B");
    CHECK(result.summary == "ab view");
}

TEST_CASE("selection matches the vote-counting oracle on random scripts") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::TreeState state = dot::new_tree_state(mask_brief());
    std::mt19937 rng(777);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> freq_dist(1, 3);

    for (int trial = 0; trial < 20; ++trial) {
        const int n = 6;
        const int votes = 5;
        std::vector<std::pair<std::string, int>> entries;
        std::vector<int> freqs;
        for (int i = 0; i < n; ++i) {
            int f = freq_dist(rng);
            entries.emplace_back("candidate " + std::to_string(i), f);
            freqs.push_back(f);
        }
        dot::CandidateSet candidates = scripted_candidates(dot::StageId::Discovery, entries);

        std::vector<std::vector<int>> ballots(votes);
        std::vector<std::string> vote_texts;
        for (auto& ballot : ballots) {
            std::string line = "KEEP:";
            for (int i = 0; i < n; ++i) {
                if (coin(rng)) {
                    ballot.push_back(i);
                    line += " " + std::to_string(i + 1) + ",";
                }
            }
            vote_texts.push_back(line + "\nSUMMARY: trial view");
        }

        dot::MockBackend mock(responses(vote_texts));
        dot::StageResult result =
            dot::select(mock, registry, state, candidates, small_config(4, 6, 3, votes));

        std::vector<int> expected = oracle_majority(ballots, freqs, 3);
        REQUIRE(result.accepted.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(result.accepted[i].content == "candidate " + std::to_string(expected[i]));
        }
    }
}

TEST_CASE("vote-count ties break by frequency then generation order") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::TreeState state = dot::new_tree_state(mask_brief());
    dot::CandidateSet candidates = scripted_candidates(
        dot::StageId::Discovery, {{"low freq", 1}, {"high freq", 3}, {"mid freq", 2}});

    // Every ballot keeps all three: counts tie, frequency decides, then order.
    dot::MockBackend mock(responses({"KEEP: 1, 2, 3", "KEEP: 1, 2, 3", "KEEP: 1, 2, 3"}));
    dot::StageResult result =
        dot::select(mock, registry, state, candidates, small_config(4, 3, 3, 3));
    REQUIRE(result.accepted.size() == 3);
    CHECK(result.accepted[0].content == "high freq");
    CHECK(result.accepted[1].content == "mid freq");
    CHECK(result.accepted[2].content == "low freq");
}

TEST_CASE("summary takes the majority synthesis text, earliest on ties") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::TreeState state = dot::new_tree_state(mask_brief());
    dot::CandidateSet candidates = scripted_candidates(dot::StageId::Discovery, {{"A", 1}});

    SECTION("clear majority") {
        dot::MockBackend mock(responses({"KEEP: 1\nSUMMARY: view one",
                                         "KEEP: 1\nSUMMARY: view two",
                                         "KEEP: 1\nSUMMARY: View One."}));
        // "view one" and "View One." share a canonical key: majority 2.
        auto result = dot::select(mock, registry, state, candidates, small_config(4, 3, 1, 3));
        CHECK(result.summary == "view one");
    }

    SECTION("tie keeps the earliest ballot's text") {
        dot::MockBackend mock(responses({"KEEP: 1\nSUMMARY: first text",
                                         "KEEP: 1\nSUMMARY: second text"}));
        auto result = dot::select(mock, registry, state, candidates, small_config(4, 3, 1, 2));
        CHECK(result.summary == "first text");
    }
}

TEST_CASE("selection failure modes") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::TreeState state = dot::new_tree_state(mask_brief());
    dot::CandidateSet candidates = scripted_candidates(dot::StageId::Discovery, {{"A", 1}});

    SECTION("empty candidate set") {
        dot::CandidateSet empty;
        empty.stage = dot::StageId::Discovery;
        dot::MockBackend mock(responses({"KEEP: 1"}));
        CHECK_THROWS_AS(dot::select(mock, registry, state, empty, small_config()),
                        dot::ValidationError);
    }

    SECTION("no parseable ballots") {
        dot::MockBackend mock(responses({"I refuse", "to vote", "properly"}));
        CHECK_THROWS_AS(dot::select(mock, registry, state, candidates, small_config(4, 3, 1, 3)),
                        dot::SearchError);
    }

    SECTION("backend failure carries the vote index") {
        dot::MockBackend mock(responses({"KEEP: 1"}));
        try {
            dot::select(mock, registry, state, candidates, small_config(4, 3, 1, 3));
            FAIL("expected a search error");
        } catch (const dot::SearchError& e) {
            CHECK(e.request_index == 1);
        }
    }
}

TEST_CASE("single-step run yields one discovery layer") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb db;
    dot::MockBackend mock(full_run_script(1, 3, 3));

    std::vector<dot::StepTrace> sink;
    dot::DesignSolution solution = dot::dot_bfs(mask_brief(), mock, registry, db,
                                                small_config(1, 3, 1, 3), {}, &sink);
    REQUIRE(solution.results.size() == 1);
    CHECK(solution.results[0].stage == dot::StageId::Discovery);
    REQUIRE(sink.size() == 1);
    CHECK(sink[0].step == 1);
    CHECK(dot::call_log(mock).size() == 6);
}

TEST_CASE("full run shape: records, samples, accounting, accumulation") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb db = dot::CaseDb::from_file(std::string(DOT_ASSETS_DIR) +
                                            "/cases_fixture.jsonl");
    const int k = 3, votes = 3, d_max = 4;
    dot::MockBackend mock(full_run_script(d_max, k, votes));

    std::vector<dot::StepTrace> sink;
    dot::DesignSolution solution = dot::dot_bfs(mask_brief(), mock, registry, db,
                                                small_config(d_max, k, 1, votes), {}, &sink);

    // Spine: 4 expansion records, 3 raw samples each, one result per step.
    REQUIRE(sink.size() == 4);
    REQUIRE(solution.results.size() == 4);
    for (int step = 0; step < 4; ++step) {
        CHECK(sink[step].step == step + 1);
        CHECK(sink[step].stage ==
              dot::stage_name(static_cast<dot::StageId>(step)));
        CHECK(sink[step].raw_samples.size() == k);
        CHECK(sink[step].votes.size() == votes);
        CHECK(solution.results[step].stage == static_cast<dot::StageId>(step));
    }

    // Call accounting: d_max * (k + votes) requests, verified via the log.
    CHECK(dot::call_log(mock).size() == static_cast<std::size_t>(d_max * (k + votes)));

    // Accumulation: results equal the per-step accepted sets in step order.
    for (int step = 0; step < 4; ++step) {
        std::vector<std::string> ids;
        for (const auto& node : solution.results[step].accepted) ids.push_back(node.id);
        CHECK(ids == sink[step].accepted_ids);
    }

    // Subset property: accepted keys appear in their step's tally.
    for (int step = 0; step < 4; ++step) {
        for (const auto& node : solution.results[step].accepted) {
            CHECK(sink[step].tally.count(dot::canonicalize(node.content)) == 1);
        }
    }

    // Stage order follows the staged design process.
    std::vector<dot::StageId> stages;
    for (const auto& result : solution.results) stages.push_back(result.stage);
    CHECK(stages == std::vector<dot::StageId>{
                        dot::StageId::Discovery, dot::StageId::RequirementAnalysis,
                        dot::StageId::ProduceIdeateDefine, dot::StageId::TechnologyAnalysis});
}

TEST_CASE("parent links make every accepted node reachable from the brief") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb db;
    dot::MockBackend mock(full_run_script(4, 3, 3));

    std::vector<dot::StepTrace> sink;
    dot::DesignSolution solution =
        dot::dot_bfs(mask_brief(), mock, registry, db, small_config(4, 3, 2, 3), {}, &sink);

    std::set<std::string> known_ids;
    for (std::size_t step = 0; step < solution.results.size(); ++step) {
        for (const auto& node : solution.results[step].accepted) {
            if (step == 0) {
                CHECK_FALSE(node.parent_id.has_value());
            } else {
                REQUIRE(node.parent_id.has_value());
                CHECK(*node.parent_id == solution.results[step - 1].accepted.front().id);
                CHECK(known_ids.count(*node.parent_id) == 1);
            }
            known_ids.insert(node.id);
        }
    }
}

TEST_CASE("scripted runs are deterministic") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb db = dot::CaseDb::from_file(std::string(DOT_ASSETS_DIR) +
                                            "/cases_fixture.jsonl");
    auto run = [&]() {
        dot::MockBackend mock(full_run_script(4, 3, 3));
        std::vector<dot::StepTrace> sink;
        dot::dot_bfs(mask_brief(), mock, registry, db, small_config(), {}, &sink);
        return dot::json(sink).dump();
    };
    CHECK(run() == run());
}

TEST_CASE("empty case store flags every prompt record as ungrounded") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb empty_db;
    dot::MockBackend mock(full_run_script(4, 3, 3));

    std::vector<dot::StepTrace> sink;
    dot::dot_bfs(mask_brief(), mock, registry, empty_db, small_config(), {}, &sink);
    REQUIRE(sink.size() == 4);
    for (const auto& record : sink) {
        CHECK(record.diverge_prompt.ungrounded);
        CHECK(record.converge_prompt.ungrounded);
        CHECK(record.diverge_prompt.citations.empty());
        CHECK(record.diverge_prompt.text.find("[[NO CASE EVIDENCE AVAILABLE]]") !=
              std::string::npos);
    }
}

TEST_CASE("grounded runs cite retrieved cases in diverge prompts") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb db = dot::CaseDb::from_file(std::string(DOT_ASSETS_DIR) +
                                            "/cases_fixture.jsonl");
    dot::MockBackend mock(full_run_script(4, 3, 3));

    std::vector<dot::StepTrace> sink;
    dot::dot_bfs(mask_brief(), mock, registry, db, small_config(), {}, &sink);
    for (const auto& record : sink) {
        CHECK_FALSE(record.diverge_prompt.ungrounded);
        CHECK_FALSE(record.diverge_prompt.citations.empty());
    }
    // Discovery draws its citations from product benchmarks.
    for (const auto& id : sink[0].diverge_prompt.citations) {
        CHECK(db.find(id)->category == "product");
    }
}

TEST_CASE("script exhaustion mid-run leaves a partial step record") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb db;
    // Two full steps plus one diverge sample of step 3.
    auto script = full_run_script(2, 3, 3);
    script.push_back(dot::ScriptEntry{{}, "stray idea"});
    dot::MockBackend mock(script);

    std::vector<dot::StepTrace> sink;
    CHECK_THROWS_AS(
        dot::dot_bfs(mask_brief(), mock, registry, db, small_config(4, 3, 1, 3), {}, &sink),
        dot::SearchError);

    REQUIRE(sink.size() == 3);
    CHECK(sink[0].accepted_ids.size() == 1);
    CHECK(sink[1].accepted_ids.size() == 1);
    // The in-flight step kept its prompt and the one sample that succeeded.
    CHECK(sink[2].step == 3);
    CHECK(sink[2].raw_samples.size() == 1);
    CHECK(sink[2].accepted_ids.empty());
    CHECK(sink[2].converge_prompt.method.empty());
}

TEST_CASE("invalid configuration fails before any backend call") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb db;
    dot::MockBackend mock(full_run_script(4, 3, 3));
    dot::SearchConfig bad;
    bad.keep_width = bad.k + 1;
    CHECK_THROWS_AS(dot::dot_bfs(mask_brief(), mock, registry, db, bad), dot::ConfigError);
    CHECK(dot::call_log(mock).empty());
}

TEST_CASE("engine requests carry the configured temperature and seed") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb db;
    dot::MockBackend mock(full_run_script(1, 2, 1));
    dot::SearchConfig config = small_config(1, 2, 1, 1);
    config.seed = 99;

    dot::RequestOptions options;
    options.temperature = 1.1;
    dot::dot_bfs(mask_brief(), mock, registry, db, config, options);

    for (const auto& request : dot::call_log(mock)) {
        CHECK(request.temperature == 1.1);
        REQUIRE(request.seed_hint.has_value());
        CHECK(*request.seed_hint == 99);
    }
}

TEST_CASE("default request temperature in a run is 0.7") {
    dot::TemplateRegistry registry = dot::TemplateRegistry::builtin();
    dot::CaseDb db;
    dot::MockBackend mock(full_run_script(1, 2, 1));
    dot::dot_bfs(mask_brief(), mock, registry, db, small_config(1, 2, 1, 1));
    for (const auto& request : dot::call_log(mock)) {
        CHECK(request.temperature == 0.7);
    }
}

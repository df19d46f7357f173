// Command-line front end: case ingestion, runs, trace inspection, and
// rating evaluation. Exit codes: 0 ok, 1 domain error, 2 usage or IO error.
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <dot/dot.hpp>

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

dot::DesignBrief load_brief(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dot::ParseError("cannot read brief file: " + path, 0);
    dot::DesignBrief brief;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            throw dot::ParseError("brief line " + std::to_string(line_number) +
                                      ": expected key: value",
                                  0);
        }
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        if (!value.empty() && value.front() == ' ') value.erase(0, 1);
        if (key == "field") brief.field = value;
        else if (key == "background") brief.background = value;
        else if (key == "target_audience") brief.target_audience = value;
        else if (key == "target_problems") brief.target_problems = value;
        else {
            throw dot::ParseError("brief line " + std::to_string(line_number) +
                                      ": unknown key " + key,
                                  0);
        }
    }
    brief.validate();
    return brief;
}

int cmd_ingest(const std::string& records_path, const std::string& out_path) {
    if (!std::filesystem::exists(records_path)) {
        std::cerr << "no such file: " << records_path << "\n";
        return kUsageError;
    }
    try {
        dot::CaseDb db = dot::CaseDb::from_file(records_path);
        for (const auto& [category, count] : db.category_counts()) {
            std::cout << category << ": " << count << "\n";
        }
        std::cout << "cases: " << db.cases().size() << "\n";
        if (!out_path.empty()) {
            std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
            if (!out) {
                std::cerr << "cannot write: " << out_path << "\n";
                return kUsageError;
            }
            out << db.export_jsonl();
            std::cout << "database: " << out_path << "\n";
        }
        return kOk;
    } catch (const dot::Error& e) {
        std::cerr << e.what() << "\n";
        return kDomainError;
    }
}

struct RunFlags {
    std::string brief_path;
    std::string mode = "dot";
    int k = 3;
    int keep_width = 3;
    int votes = 3;
    int d_max = 4;
    double temperature = dot::kDefaultTemperature;
    std::int64_t seed = 0;
    std::string backend = "mock";
    std::string script_path;
    std::string db_path;
    std::string template_dir;
    std::string out_path = "document.md";
    std::string trace_path = "trace.json";
};

int cmd_run(const RunFlags& flags) {
    if (!std::filesystem::exists(flags.brief_path)) {
        std::cerr << "no such file: " << flags.brief_path << "\n";
        return kUsageError;
    }
    if (flags.backend == "mock" && flags.script_path.empty()) {
        std::cerr << "mock backend requires --script\n";
        return kUsageError;
    }
    if (flags.backend == "live" && std::getenv("DOT_API_KEY") == nullptr) {
        std::cerr << "live backend requires DOT_API_KEY\n";
        return kUsageError;
    }
    if (flags.backend == "mock" && !std::filesystem::exists(flags.script_path)) {
        std::cerr << "no such file: " << flags.script_path << "\n";
        return kUsageError;
    }

    try {
        dot::DesignBrief brief = load_brief(flags.brief_path);
        dot::SearchConfig config;
        config.k = flags.k;
        config.keep_width = flags.keep_width;
        config.votes = flags.votes;
        config.d_max = flags.d_max;
        config.seed = flags.seed;
        dot::RequestOptions options;
        options.temperature = flags.temperature;

        dot::CaseDb db;
        if (!flags.db_path.empty()) db = dot::CaseDb::from_file(flags.db_path);
        dot::TemplateRegistry registry = flags.template_dir.empty()
                                             ? dot::TemplateRegistry::builtin()
                                             : dot::TemplateRegistry::load_dir(
                                                   flags.template_dir);

        std::unique_ptr<dot::HttpBackend> live;
        std::unique_ptr<dot::Backend> backend;
        if (flags.backend == "mock") {
            backend = std::make_unique<dot::MockBackend>(
                dot::load_script(flags.script_path));
        } else {
            live = std::make_unique<dot::HttpBackend>(dot::HttpOptions{});
            backend = std::make_unique<dot::RecordingBackend>(*live);
        }

        dot::RunMode mode = dot::mode_from_name(flags.mode);
        try {
            dot::RunOutput result =
                dot::run(brief, mode, config, db, *backend, registry, options);
            std::ofstream doc(flags.out_path, std::ios::binary | std::ios::trunc);
            doc << dot::render_document(result.document, dot::DocFormat::Markdown);
            doc.close();
            dot::export_trace(result.trace, flags.trace_path);
            std::cout << flags.out_path << "\n";
            return kOk;
        } catch (const dot::RunError& e) {
            dot::export_trace(e.partial_trace, flags.trace_path);
            std::cerr << e.what() << "\n";
            std::cerr << "partial trace: " << flags.trace_path << "\n";
            return kDomainError;
        }
    } catch (const dot::Error& e) {
        std::cerr << e.what() << "\n";
        return kDomainError;
    }
}

int cmd_trace(const std::string& path, bool summary, bool prompts, bool calls) {
    try {
        dot::Trace trace = dot::import_trace(path);
        if (summary) {
            std::cout << "run " << trace.run_id << " mode " << trace.mode << "\n";
            for (const auto& step : trace.steps) {
                std::size_t accepted = step.accepted_ids.size();
                std::cout << "step " << step.step << " " << step.stage
                          << ": samples=" << step.raw_samples.size()
                          << " distinct=" << step.tally.size()
                          << " accepted=" << accepted << "\n";
            }
        }
        if (prompts) {
            for (const auto& step : trace.steps) {
                std::cout << "--- step " << step.step << " "
                          << step.diverge_prompt.method << " ---\n"
                          << step.diverge_prompt.text << "\n";
                if (!step.converge_prompt.text.empty()) {
                    std::cout << "--- step " << step.step << " "
                              << step.converge_prompt.method << " ---\n"
                              << step.converge_prompt.text << "\n";
                }
            }
        }
        if (calls) {
            std::size_t count = 0;
            for (const auto& step : trace.steps) {
                count += step.raw_samples.size() + step.votes.size();
            }
            std::cout << count << "\n";
        }
        return kOk;
    } catch (const dot::ParseError& e) {
        std::cerr << e.what() << " (byte " << e.byte_offset << ")\n";
        return kDomainError;
    } catch (const dot::Error& e) {
        std::cerr << e.what() << "\n";
        return kDomainError;
    }
}

int cmd_eval(const std::string& path, bool tie_correction) {
    if (!std::filesystem::exists(path)) {
        std::cerr << "no such file: " << path << "\n";
        return kUsageError;
    }
    try {
        for (const auto& [name, table] : dot::parse_ratings_file(path)) {
            dot::ConcordanceResult result =
                dot::kendalls_w(dot::to_ranks(table), tie_correction);
            std::cout << name << ": " << dot::format_w(result.w)
                      << (result.degenerate ? " (degenerate)" : "") << "\n";
        }
        return kOk;
    } catch (const dot::Error& e) {
        std::cerr << e.what() << "\n";
        return kDomainError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"staged wearable design runs over a design-case store"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "load a case file and report counts");
    std::string records_path;
    std::string ingest_out;
    ingest->add_option("records", records_path, "JSONL case records")->required();
    ingest->add_option("--out", ingest_out, "write the validated database here");

    auto* run = app.add_subcommand("run", "execute a design run");
    RunFlags flags;
    run->add_option("--brief", flags.brief_path, "brief key: value file")->required();
    run->add_option("--mode", flags.mode, "io|cot|dot")
        ->check(CLI::IsMember({"io", "cot", "dot"}));
    run->add_option("--k", flags.k, "samples per divergence");
    run->add_option("--keep-width", flags.keep_width, "accepted ideas per step");
    run->add_option("--votes", flags.votes, "ballots per convergence");
    run->add_option("--dmax", flags.d_max, "number of stages to run");
    run->add_option("--temperature", flags.temperature, "sampling temperature");
    run->add_option("--seed", flags.seed, "seed hint threaded to the backend");
    run->add_option("--backend", flags.backend, "live|mock")
        ->check(CLI::IsMember({"live", "mock"}));
    run->add_option("--script", flags.script_path, "scripted replies (mock)");
    run->add_option("--db", flags.db_path, "case database JSONL");
    run->add_option("--templates", flags.template_dir, "prompt template directory");
    run->add_option("--out", flags.out_path, "document output path");
    run->add_option("--trace-out", flags.trace_path, "trace output path");

    auto* trace = app.add_subcommand("trace", "inspect a trace file");
    std::string trace_path;
    bool show_summary = false;
    bool show_prompts = false;
    bool show_calls = false;
    trace->add_option("trace_file", trace_path, "trace JSON file")->required();
    trace->add_flag("--summary", show_summary, "per-step counts");
    trace->add_flag("--prompts", show_prompts, "rendered prompts");
    trace->add_flag("--calls", show_calls, "backend call count");

    auto* eval = app.add_subcommand("eval", "concordance over rating tables");
    std::string ratings_path;
    bool kendall = false;
    bool tie_correction = false;
    eval->add_option("ratings", ratings_path, "rating CSV file")->required();
    eval->add_flag("--kendall", kendall, "report Kendall's W (default behaviour)");
    eval->add_flag("--tie-correction", tie_correction, "apply the tie-corrected form");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    if (ingest->parsed()) return cmd_ingest(records_path, ingest_out);
    if (run->parsed()) return cmd_run(flags);
    if (trace->parsed()) {
        if (!show_summary && !show_prompts && !show_calls) show_summary = true;
        return cmd_trace(trace_path, show_summary, show_prompts, show_calls);
    }
    if (eval->parsed()) return cmd_eval(ratings_path, tie_correction);
    return kUsageError;
}

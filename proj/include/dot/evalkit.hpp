#pragma once
// Rating aggregation: score-to-rank conversion, Kendall's coefficient of
// concordance, and a cross-mode comparison report. Scoring itself stays
// human; these utilities only aggregate supplied ratings.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dot/core.hpp"
#include "dot/errors.hpp"
#include "dot/pipeline.hpp"

namespace dot {

struct RatingTable {
    std::vector<std::string> judges;
    std::vector<std::string> items;
    std::vector<std::vector<double>> scores;  // judges x items

    void validate() const {
        if (judges.size() < 2) throw ValidationError("at least two judges required");
        if (items.size() < 2) throw ValidationError("at least two items required");
        if (scores.size() != judges.size()) {
            throw ValidationError("score rows must match the judge count");
        }
        for (const auto& row : scores) {
            if (row.size() != items.size()) {
                throw ValidationError("every judge must score every item");
            }
        }
    }
};

struct RankTable {
    std::vector<std::string> judges;
    std::vector<std::string> items;
    std::vector<std::vector<double>> ranks;  // each row ranks 1..n, ties averaged

    void validate() const {
        if (judges.size() < 2) throw ValidationError("at least two judges required");
        if (items.size() < 2) throw ValidationError("at least two items required");
        if (ranks.size() != judges.size()) {
            throw ValidationError("rank rows must match the judge count");
        }
        const double n = static_cast<double>(items.size());
        for (const auto& row : ranks) {
            if (row.size() != items.size()) {
                throw ValidationError("every row must rank every item");
            }
            double sum = 0.0;
            for (double r : row) {
                if (r < 1.0 || r > n) throw ValidationError("ranks must lie in [1, n]");
                sum += r;
            }
            // Average ranks are halves, so the sum is exact in doubles.
            if (std::abs(sum - n * (n + 1.0) / 2.0) > 1e-9) {
                throw ValidationError("each rank row must sum to n(n+1)/2");
            }
        }
    }
};

// Higher score earns rank 1; tied scores share the average of the ranks
// they span.
inline RankTable to_ranks(const RatingTable& table) {
    table.validate();
    RankTable out;
    out.judges = table.judges;
    out.items = table.items;
    for (const auto& row : table.scores) {
        std::vector<double> ranks(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (std::isnan(row[j])) throw ValidationError("scores must not be NaN");
            int greater = 0;
            int equal = 0;
            for (double other : row) {
                if (other > row[j]) ++greater;
                if (other == row[j]) ++equal;
            }
            ranks[j] = greater + (equal + 1) / 2.0;
        }
        out.ranks.push_back(std::move(ranks));
    }
    return out;
}

struct ConcordanceResult {
    double w = 0.0;
    bool degenerate = false;
};

// W = 12S / (m^2 (n^3 - n)) over column rank sums. Tables with ties are
// rejected unless tie correction (denominator minus m * sum of t^3 - t over
// tie groups) is requested; a fully tied table degenerates to 0.
inline ConcordanceResult kendalls_w(const RankTable& table, bool tie_corrected = false) {
    table.validate();
    const std::size_t m = table.judges.size();
    const std::size_t n = table.items.size();

    bool any_ties = false;
    bool all_rows_flat = true;
    double tie_term = 0.0;
    for (const auto& row : table.ranks) {
        std::vector<double> sorted = row;
        std::sort(sorted.begin(), sorted.end());
        bool flat = sorted.front() == sorted.back();
        all_rows_flat = all_rows_flat && flat;
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            double t = static_cast<double>(j - i);
            if (t > 1.0) {
                any_ties = true;
                tie_term += t * t * t - t;
            }
            i = j;
        }
    }
    if (all_rows_flat) return {0.0, true};
    if (any_ties && !tie_corrected) {
        throw ValidationError("rank table has ties; enable tie correction");
    }

    const double dm = static_cast<double>(m);
    const double dn = static_cast<double>(n);
    double s = 0.0;
    const double mean = dm * (dn + 1.0) / 2.0;
    for (std::size_t j = 0; j < n; ++j) {
        double column = 0.0;
        for (std::size_t i = 0; i < m; ++i) column += table.ranks[i][j];
        s += (column - mean) * (column - mean);
    }
    double denominator = dm * dm * (dn * dn * dn - dn);
    if (tie_corrected) denominator -= dm * tie_term;
    if (denominator <= 0.0) return {0.0, true};
    return {12.0 * s / denominator, false};
}

inline std::string format_w(double w) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.2f", w);
    return buffer;
}

// ---------------------------------------------------------------------------
// Rating files: `# Metric` heading, then a header row of item labels, then
// one comma-separated score row per judge. A file without headings holds a
// single metric named "ratings".

namespace detail {

inline std::string trim_copy(std::string s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim_copy(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

}  // namespace detail

inline std::vector<std::pair<std::string, RatingTable>> parse_ratings(std::istream& in) {
    std::vector<std::pair<std::string, RatingTable>> metrics;
    std::string line;
    int line_number = 0;
    std::size_t offset = 0;
    bool open = false;

    auto close_current = [&]() {
        if (!open) return;
        if (metrics.back().second.scores.empty()) {
            throw ParseError("metric " + metrics.back().first + " has no score rows",
                             offset);
        }
        open = false;
    };

    while (std::getline(in, line)) {
        std::size_t line_start = offset;
        offset += line.size() + 1;
        ++line_number;
        std::string text = detail::trim_copy(line);
        if (text.empty()) continue;

        if (text[0] == '#') {
            close_current();
            metrics.emplace_back(detail::trim_copy(text.substr(1)), RatingTable{});
            open = true;
            continue;
        }
        if (!open) {
            metrics.emplace_back("ratings", RatingTable{});
            open = true;
        }
        RatingTable& table = metrics.back().second;
        std::vector<std::string> cells = detail::split_csv(text);
        if (table.items.empty()) {
            table.items = cells;
            continue;
        }
        if (cells.size() != table.items.size()) {
            throw ParseError("ratings line " + std::to_string(line_number) +
                                 ": expected " + std::to_string(table.items.size()) +
                                 " cells, got " + std::to_string(cells.size()),
                             line_start);
        }
        std::vector<double> row;
        for (const auto& cell : cells) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError("ratings line " + std::to_string(line_number) +
                                     ": not a number: " + cell,
                                 line_start);
            }
            if (used != cell.size()) {
                throw ParseError("ratings line " + std::to_string(line_number) +
                                     ": not a number: " + cell,
                                 line_start);
            }
            row.push_back(value);
        }
        table.scores.push_back(std::move(row));
        table.judges.push_back("judge" + std::to_string(table.scores.size()));
    }
    close_current();
    if (metrics.empty()) throw ParseError("rating file holds no tables", 0);
    return metrics;
}

inline std::vector<std::pair<std::string, RatingTable>> parse_ratings_file(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read rating file: " + path, 0);
    return parse_ratings(in);
}

// ---------------------------------------------------------------------------
// Cross-mode comparison

struct ModeRun {
    RunMode mode = RunMode::Dot;
    DesignDocument document;
    const Trace* trace = nullptr;  // optional; enables call and sample stats
};

// Structural statistics per mode plus, when rating tables are supplied,
// per-metric concordance. Ratings are aggregated as given, never invented.
inline std::string compare_report(
    const std::vector<ModeRun>& runs,
    const std::vector<std::pair<std::string, RatingTable>>& ratings = {}) {
    if (runs.size() < 2) throw ValidationError("comparison needs at least two runs");
    {
        bool mixed = false;
        for (const auto& run : runs) mixed = mixed || run.mode != runs.front().mode;
        if (!mixed) throw ValidationError("comparison needs at least two distinct modes");
    }

    std::ostringstream out;
    out << "# Mode Comparison\n\n";
    out << "| mode | sections | accepted ideas | distinct idea ratio | citations | "
           "backend calls |\n";
    out << "| --- | --- | --- | --- | --- | --- |\n";
    for (const auto& run : runs) {
        std::size_t ideas = 0;
        std::vector<std::string> cited;
        for (const auto& section : run.document.sections) {
            ideas += section.accepted.size();
            for (const auto& id : section.citations) {
                if (std::find(cited.begin(), cited.end(), id) == cited.end()) {
                    cited.push_back(id);
                }
            }
        }
        out << "| " << mode_name(run.mode) << " | " << run.document.sections.size()
            << " | " << ideas << " | ";
        if (run.trace) {
            std::size_t samples = 0;
            std::size_t distinct = 0;
            std::size_t calls = 0;
            for (const auto& step : run.trace->steps) {
                samples += step.raw_samples.size();
                distinct += step.tally.size();
                calls += step.raw_samples.size() + step.votes.size();
            }
            out << format_w(samples ? static_cast<double>(distinct) /
                                          static_cast<double>(samples)
                                    : 0.0)
                << " | " << cited.size() << " | " << calls << " |\n";
        } else {
            out << "n/a | " << cited.size() << " | n/a |\n";
        }
    }

    if (!ratings.empty()) {
        out << "\n## Concordance\n\n";
        out << "| metric | judges | items | W |\n";
        out << "| --- | --- | --- | --- |\n";
        for (const auto& [name, table] : ratings) {
            ConcordanceResult result = kendalls_w(to_ranks(table), true);
            out << "| " << name << " | " << table.judges.size() << " | "
                << table.items.size() << " | " << format_w(result.w)
                << (result.degenerate ? " (degenerate)" : "") << " |\n";
        }
    }
    return out.str();
}

}  // namespace dot

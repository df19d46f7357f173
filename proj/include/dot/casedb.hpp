#pragma once
// FBS-encoded design-case store: validated ingest from line-oriented record
// files, lexical BM25 retrieval, best-product benchmarking, and stage-scoped
// facet projection. The database is immutable after ingest; concurrent reads
// are safe.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dot/core.hpp"
#include "dot/errors.hpp"

namespace dot {

// One wearable design case across the three ontology facets: function
// (what it is for), behaviour (how it interacts), structure (what it is
// made of and where it sits on the body).
struct DesignCase {
    std::string id;
    std::string name;
    std::string category;  // "prototype" or "product"
    std::vector<std::string> function_tags;
    std::string function_desc;
    std::vector<std::string> perception_modes;
    std::vector<std::string> action_modes;
    std::vector<std::string> technical_elements;
    std::string on_body_location;
    std::string wearing_mode;
    std::string source;

    void validate() const {
        if (id.empty()) throw ValidationError("case id must be non-empty");
        if (category != "prototype" && category != "product") {
            throw ValidationError("case " + id + ": category must be prototype or product");
        }
        if (on_body_location.empty()) {
            throw ValidationError("case " + id + ": on_body_location must be non-empty");
        }
    }
};

inline void to_json(json& j, const DesignCase& c) {
    j = json{{"id", c.id},
             {"name", c.name},
             {"category", c.category},
             {"function_tags", c.function_tags},
             {"function_desc", c.function_desc},
             {"perception_modes", c.perception_modes},
             {"action_modes", c.action_modes},
             {"technical_elements", c.technical_elements},
             {"on_body_location", c.on_body_location},
             {"wearing_mode", c.wearing_mode},
             {"source", c.source}};
}

inline void from_json(const json& j, DesignCase& c) {
    j.at("id").get_to(c.id);
    j.at("name").get_to(c.name);
    j.at("category").get_to(c.category);
    j.at("function_tags").get_to(c.function_tags);
    j.at("function_desc").get_to(c.function_desc);
    j.at("perception_modes").get_to(c.perception_modes);
    j.at("action_modes").get_to(c.action_modes);
    j.at("technical_elements").get_to(c.technical_elements);
    j.at("on_body_location").get_to(c.on_body_location);
    j.at("wearing_mode").get_to(c.wearing_mode);
    j.at("source").get_to(c.source);
}

struct RankedHit {
    std::string case_id;
    double score = 0.0;  // always non-negative
};

struct FacetField {
    std::string name;
    std::string value;
};

// The slice of a case a given stage is allowed to see.
struct FacetView {
    std::string case_id;
    StageId stage = StageId::Discovery;
    std::vector<FacetField> fields;

    std::string render() const {
        std::ostringstream out;
        for (const auto& field : fields) out << field.name << ": " << field.value << "\n";
        return out.str();
    }
};

inline std::string join_tags(const std::vector<std::string>& tags) {
    std::string out;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (i) out += ", ";
        out += tags[i];
    }
    return out;
}

// Which case fields each stage may see. Discovery reads summary-level
// context, the requirement stage sees need-relevant function tags, the
// concept stage sees function plus behaviour, and only the technology
// stage sees structure.
inline const std::vector<std::string>& permitted_fields(StageId stage) {
    static const std::vector<std::string> discovery{"name", "category", "function_desc",
                                                    "source"};
    static const std::vector<std::string> requirement{"function_tags", "source"};
    static const std::vector<std::string> concept_stage{"function_tags", "function_desc",
                                                        "perception_modes", "action_modes"};
    static const std::vector<std::string> technology{"technical_elements", "on_body_location",
                                                     "wearing_mode"};
    switch (stage) {
        case StageId::Discovery: return discovery;
        case StageId::RequirementAnalysis: return requirement;
        case StageId::ProduceIdeateDefine: return concept_stage;
        case StageId::TechnologyAnalysis: return technology;
    }
    throw ConfigError("unknown stage in facet projection");
}

inline FacetView project(const DesignCase& c, StageId stage) {
    auto field_value = [&c](const std::string& name) -> std::string {
        if (name == "name") return c.name;
        if (name == "category") return c.category;
        if (name == "function_tags") return join_tags(c.function_tags);
        if (name == "function_desc") return c.function_desc;
        if (name == "perception_modes") return join_tags(c.perception_modes);
        if (name == "action_modes") return join_tags(c.action_modes);
        if (name == "technical_elements") return join_tags(c.technical_elements);
        if (name == "on_body_location") return c.on_body_location;
        if (name == "wearing_mode") return c.wearing_mode;
        if (name == "source") return c.source;
        throw ConfigError("unknown facet field: " + name);
    };
    FacetView view{c.id, stage, {}};
    for (const auto& name : permitted_fields(stage)) {
        view.fields.push_back(FacetField{name, field_value(name)});
    }
    return view;
}

// Case-folded alphanumeric tokens; everything else separates.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

// All text fields except the id, space-joined; this is what the index sees.
inline std::string case_text(const DesignCase& c) {
    std::ostringstream out;
    out << c.name << ' ' << c.category << ' ' << join_tags(c.function_tags) << ' '
        << c.function_desc << ' ' << join_tags(c.perception_modes) << ' '
        << join_tags(c.action_modes) << ' ' << join_tags(c.technical_elements) << ' '
        << c.on_body_location << ' ' << c.wearing_mode << ' ' << c.source;
    return out.str();
}

// Immutable case store with a prebuilt lexical index.
class CaseDb {
  public:
    CaseDb() = default;

    static CaseDb from_records(std::vector<DesignCase> records) {
        std::set<std::string> seen;
        std::vector<std::string> duplicates;
        for (const auto& record : records) {
            record.validate();
            if (!seen.insert(record.id).second) duplicates.push_back(record.id);
        }
        if (!duplicates.empty()) {
            std::string joined;
            for (const auto& id : duplicates) {
                if (!joined.empty()) joined += ", ";
                joined += id;
            }
            throw ValidationError("duplicate case ids: " + joined);
        }
        CaseDb db;
        db.cases_ = std::move(records);
        db.build_index();
        return db;
    }

    static CaseDb from_stream(std::istream& in, const std::string& origin) {
        std::vector<DesignCase> records;
        std::string line;
        std::size_t offset = 0;
        int line_number = 0;
        while (std::getline(in, line)) {
            ++line_number;
            std::size_t line_start = offset;
            offset += line.size() + 1;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                records.push_back(json::parse(line).get<DesignCase>());
            } catch (const json::exception& e) {
                throw ParseError(origin + " line " + std::to_string(line_number) +
                                     ": " + e.what(),
                                 line_start);
            }
        }
        return from_records(std::move(records));
    }

    static CaseDb from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError("cannot open case file: " + path, 0);
        return from_stream(in, path);
    }

    const std::vector<DesignCase>& cases() const { return cases_; }
    bool ungrounded() const { return cases_.empty(); }

    const DesignCase* find(std::string_view id) const {
        for (const auto& c : cases_) {
            if (c.id == id) return &c;
        }
        return nullptr;
    }

    std::map<std::string, int> category_counts() const {
        std::map<std::string, int> counts;
        for (const auto& c : cases_) ++counts[c.category];
        return counts;
    }

    // Canonical line-oriented form; ingest(export(db)) is the identity.
    std::string export_jsonl() const {
        std::string out;
        for (const auto& c : cases_) {
            out += json(c).dump();
            out += '\n';
        }
        return out;
    }

    // Index internals, exposed read-only so scorers stay decoupled.
    const std::vector<std::string>& document_tokens(std::size_t doc) const {
        return doc_tokens_.at(doc);
    }
    int document_frequency(const std::string& term) const {
        auto it = df_.find(term);
        return it == df_.end() ? 0 : it->second;
    }
    double average_length() const { return avgdl_; }

  private:
    void build_index() {
        doc_tokens_.clear();
        df_.clear();
        std::size_t total = 0;
        for (const auto& c : cases_) {
            doc_tokens_.push_back(tokenize(case_text(c)));
            total += doc_tokens_.back().size();
            std::set<std::string> unique(doc_tokens_.back().begin(), doc_tokens_.back().end());
            for (const auto& term : unique) ++df_[term];
        }
        avgdl_ = cases_.empty() ? 0.0 : static_cast<double>(total) / cases_.size();
    }

    std::vector<DesignCase> cases_;
    std::vector<std::vector<std::string>> doc_tokens_;
    std::unordered_map<std::string, int> df_;
    double avgdl_ = 0.0;
};

// Ranking seam: retrieval goes through this interface so a different scorer
// (e.g. embeddings) can replace the lexical default without touching callers.
class Scorer {
  public:
    virtual ~Scorer() = default;
    virtual std::vector<RankedHit> rank(const CaseDb& db, const std::string& query,
                                        int top_n) const = 0;
};

// BM25 with k1 = 1.2, b = 0.75 and the non-negative idf variant
// ln(1 + (N - df + 0.5) / (df + 0.5)). Ties break by ascending id.
class Bm25Scorer : public Scorer {
  public:
    static constexpr double kK1 = 1.2;
    static constexpr double kB = 0.75;

    std::vector<RankedHit> rank(const CaseDb& db, const std::string& query,
                                int top_n) const override {
        if (top_n < 1) throw ValidationError("top_n must be at least 1");
        std::vector<std::string> terms = tokenize(query);
        if (terms.empty()) throw ValidationError("query has no tokens");
        if (db.cases().empty()) return {};

        const double n_docs = static_cast<double>(db.cases().size());
        std::vector<RankedHit> hits;
        hits.reserve(db.cases().size());
        for (std::size_t doc = 0; doc < db.cases().size(); ++doc) {
            const auto& tokens = db.document_tokens(doc);
            const double length_norm =
                1.0 - kB + kB * static_cast<double>(tokens.size()) / db.average_length();
            double score = 0.0;
            for (const auto& term : terms) {
                int df = db.document_frequency(term);
                if (df == 0) continue;
                double tf = static_cast<double>(
                    std::count(tokens.begin(), tokens.end(), term));
                if (tf == 0.0) continue;
                double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
                score += idf * tf * (kK1 + 1.0) / (tf + kK1 * length_norm);
            }
            hits.push_back(RankedHit{db.cases()[doc].id, score});
        }
        std::sort(hits.begin(), hits.end(), [](const RankedHit& a, const RankedHit& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.case_id < b.case_id;
        });
        if (static_cast<std::size_t>(top_n) < hits.size()) hits.resize(top_n);
        return hits;
    }
};

inline std::vector<RankedHit> retrieve(const CaseDb& db, const std::string& query, int top_n) {
    static const Bm25Scorer scorer;
    return scorer.rank(db, query, top_n);
}

// Top products for the brief, as Discovery-stage benchmark views. An empty
// result means the step runs ungrounded.
inline std::vector<FacetView> best_products(const CaseDb& db, const DesignBrief& brief,
                                            int top_n) {
    if (top_n < 1) throw ValidationError("top_n must be at least 1");
    std::vector<DesignCase> products;
    for (const auto& c : db.cases()) {
        if (c.category == "product") products.push_back(c);
    }
    if (products.empty()) return {};
    CaseDb product_db = CaseDb::from_records(std::move(products));
    std::vector<FacetView> views;
    for (const auto& hit :
         retrieve(product_db, brief.background + " " + brief.target_problems, top_n)) {
        views.push_back(project(*product_db.find(hit.case_id), StageId::Discovery));
    }
    return views;
}

}  // namespace dot

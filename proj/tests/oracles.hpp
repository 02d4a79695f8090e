#pragma once
// Brute-force restatements used to cross-check the engine. They read the
// graph through nodes() and edges() only and share no helper with the
// component under test beyond tokenize/embed_text/cosine, which have their own
// golden checks.
#include "kgrx/embedding.hpp"
#include "kgrx/kg_store.hpp"
#include "kgrx/record.hpp"
#include "kgrx/safety.hpp"
#include "kgrx/text.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace kgrx::oracle {

inline double number(const Attrs& a, const std::string& key) {
    auto it = a.find(key);
    if (it == a.end()) return 0.0;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    return 0.0;
}

inline const KGNode* node(const KnowledgeGraph& g, const std::string& id) {
    for (const auto& n : g.nodes()) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

struct Rule {
    double min_dose, max_dose, abs_max;
    double freq_min, freq_max, dur_min, dur_max;
};

inline std::optional<Rule> rule(const KnowledgeGraph& g, const std::string& drug, std::int64_t age) {
    for (const auto& e : g.edges()) {
        if (e.src != drug || e.rel != Relation::has_dose_rule) continue;
        const KGNode* band = node(g, e.dst);
        const double lo = number(band->attrs, "min_months");
        const double hi = number(band->attrs, "max_months");
        const auto a = static_cast<double>(age);
        if (a < lo || a > hi) continue;
        return Rule{number(e.attrs, "min_mg_per_kg_day"), number(e.attrs, "max_mg_per_kg_day"),
                    number(e.attrs, "abs_max_mg_day"),   number(e.attrs, "freq_min_per_day"),
                    number(e.attrs, "freq_max_per_day"), number(e.attrs, "duration_min_days"),
                    number(e.attrs, "duration_max_days")};
    }
    return std::nullopt;
}

inline bool allergy_conflict(const KnowledgeGraph& g, const std::string& drug, const std::set<std::string>& allergies) {
    std::set<std::string> sources{drug};
    for (const auto& e : g.edges()) {
        if (e.src == drug && e.rel == Relation::member_of) sources.insert(e.dst);
    }
    for (const auto& e : g.edges()) {
        if (e.rel == Relation::cross_reactive && sources.contains(e.src) && allergies.contains(e.dst)) return true;
    }
    return false;
}

inline std::vector<Violation> hard_rules(const AntibioticCandidate& c, const PatientProfile& p,
                                         const KnowledgeGraph& g) {
    std::vector<Violation> out;
    const auto r = rule(g, c.drug, p.age_months);
    if (allergy_conflict(g, c.drug, p.allergies)) out.push_back(Violation::AllergyConflict);
    if (r && c.dose_mg_per_kg_day * p.weight_kg > r->abs_max) out.push_back(Violation::AbsoluteDoseExceeded);
    if (!r) out.push_back(Violation::NoDoseRuleForAge);
    for (const auto& e : g.edges()) {
        if (e.src == c.drug && e.rel == Relation::contraindicated_in && p.comorbidities.contains(e.dst)) {
            out.push_back(Violation::ComorbidityContraindication);
            break;
        }
    }
    if (r) {
        const auto f = static_cast<double>(c.frequency_per_day);
        const auto d = static_cast<double>(c.duration_days);
        if (f < r->freq_min || f > r->freq_max) out.push_back(Violation::FrequencyOutOfRange);
        if (d < r->dur_min || d > r->dur_max) out.push_back(Violation::DurationOutOfRange);
    }
    return out;
}

inline double s_dose(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g) {
    const auto r = rule(g, c.drug, p.age_months);
    if (!r) return 0.0;
    const double d = c.dose_mg_per_kg_day;
    if (d >= r->min_dose && d <= r->max_dose) return 1.0;
    const double bound = d < r->min_dose ? r->min_dose : r->max_dose;
    return std::max(0.0, 1.0 - 2.0 * std::abs(d - bound) / bound);
}

inline double s_interaction(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g) {
    double worst = 0.0;
    for (const auto& e : g.edges()) {
        if (e.rel != Relation::interacts_with) continue;
        const bool hit = (e.src == c.drug && p.current_medications.contains(e.dst)) ||
                         (e.dst == c.drug && p.current_medications.contains(e.src));
        if (hit) worst = std::max(worst, number(e.attrs, "severity"));
    }
    return 1.0 - worst;
}

inline double s_safety(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g,
                       const SafetyWeights& w) {
    return w.w_dose() * oracle::s_dose(c, p, g) + w.w_allergy() * (allergy_conflict(g, c.drug, p.allergies) ? 0.0 : 1.0) +
           w.w_interaction() * oracle::s_interaction(c, p, g);
}

inline std::vector<std::string> unique_tokens(const std::string& text) {
    std::set<std::string> s;
    for (const auto& t : tokenize(text)) s.insert(t.text);
    return {s.begin(), s.end()};
}

inline double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end()), all = sa;
    all.insert(sb.begin(), sb.end());
    if (all.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : sa) common += sb.count(t);
    return static_cast<double>(common) / static_cast<double>(all.size());
}

inline std::string record_text(const ClinicalRecord& r) {
    return r.chief_complaint + "\n" + r.exam_notes + "\n" + r.radiographic_report;
}

struct RankedNode {
    std::string id;
    double score;
};

/// Scores every non-passage node and sorts the whole list.
inline std::vector<RankedNode> top_entities(const KnowledgeGraph& g, const ClinicalRecord& r, std::size_t k) {
    const std::string text = record_text(r);
    const Embedding hx = embed_text(text);
    const auto rec_tokens = unique_tokens(text);
    std::vector<RankedNode> all;
    for (const auto& n : g.nodes()) {
        if (n.kind == NodeKind::GuidelinePassage) continue;
        std::string lex = n.name;
        for (const auto& s : n.synonyms) lex += " " + s;
        const double score = 0.7 * cosine(embed_text(lex), hx) + 0.3 * jaccard(unique_tokens(lex), rec_tokens);
        all.push_back({n.id, score});
    }
    std::sort(all.begin(), all.end(), [](const RankedNode& a, const RankedNode& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

inline bool safety_relation(Relation rel) {
    return rel == Relation::has_dose_rule || rel == Relation::cross_reactive || rel == Relation::interacts_with ||
           rel == Relation::contraindicated_in;
}

/// Edges among the members plus safety edges touching a member drug.
inline std::vector<std::size_t> subgraph_edges(const KnowledgeGraph& g, const std::vector<RankedNode>& members) {
    std::set<std::string> ids;
    for (const auto& m : members) ids.insert(m.id);
    auto is_member_drug = [&](const std::string& id) { return ids.contains(id) && node(g, id)->kind == NodeKind::Drug; };
    std::vector<std::size_t> out;
    const auto edges = g.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        const bool inner = ids.contains(e.src) && ids.contains(e.dst);
        const bool safety = safety_relation(e.rel) && (is_member_drug(e.src) || is_member_drug(e.dst));
        if (inner || safety) out.push_back(i);
    }
    return out;
}

inline std::vector<RankedNode> top_passages(const KnowledgeGraph& g, const Embedding& h, std::size_t m) {
    std::vector<RankedNode> all;
    for (const auto& n : g.nodes()) {
        if (n.kind != NodeKind::GuidelinePassage) continue;
        auto it = n.attrs.find("text");
        const std::string text = it == n.attrs.end() ? "" : std::get<std::string>(it->second);
        all.push_back({n.id, cosine(h, embed_text(text))});
    }
    std::sort(all.begin(), all.end(), [](const RankedNode& a, const RankedNode& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    if (all.size() > m) all.resize(m);
    return all;
}

/// True when a trigger appears among the preceding tokens of the same
/// sentence inside the window, after the last terminator.
inline bool negated(const std::vector<Token>& tokens, std::size_t begin, const std::set<std::string>& triggers,
                    const std::set<std::string>& terminators, std::size_t window) {
    std::vector<std::string> before;
    const std::size_t start = begin > window ? begin - window : 0;
    for (std::size_t j = start; j < begin; ++j) {
        if (tokens[j].sentence == tokens[begin].sentence) before.push_back(tokens[j].text);
    }
    std::size_t from = 0;
    for (std::size_t j = 0; j < before.size(); ++j) {
        if (terminators.contains(before[j])) from = j + 1;
    }
    for (std::size_t j = from; j < before.size(); ++j) {
        if (triggers.contains(before[j])) return true;
    }
    return false;
}

} // namespace kgrx::oracle

#include "kgrx/record_parser.hpp"

#include <algorithm>
#include <map>

namespace kgrx {

namespace {

bool is_linkable(NodeKind k) noexcept { return k != NodeKind::GuidelinePassage && k != NodeKind::AgeBand; }

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

} // namespace

std::string_view to_string(Severity s) noexcept {
    switch (s) {
    case Severity::mild: return "mild";
    case Severity::moderate: return "moderate";
    case Severity::severe: return "severe";
    case Severity::unknown: return "unknown";
    }
    return "unknown";
}

std::optional<Severity> parse_severity(std::string_view s) noexcept {
    for (auto v : {Severity::mild, Severity::moderate, Severity::severe, Severity::unknown}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::optional<std::string> resolve_tooth_notation(std::string_view token, const KnowledgeGraph& graph) {
    if (token.size() != 3 || token[0] != '#' || !is_digit(token[1]) || !is_digit(token[2])) return std::nullopt;
    const int quadrant = token[1] - '0';
    const int position = token[2] - '0';
    const bool permanent = quadrant >= 1 && quadrant <= 4 && position >= 1 && position <= 8;
    const bool primary = quadrant >= 5 && quadrant <= 8 && position >= 1 && position <= 5;
    if (!permanent && !primary) return std::nullopt;
    auto id = graph.tooth_by_fdi(quadrant * 10 + position);
    if (!id) return std::nullopt;
    return std::string(*id);
}

bool detect_negation(std::span<const Token> tokens, std::size_t begin, std::size_t /*end*/, const NegationRules& rules) {
    if (begin >= tokens.size()) return false;
    const std::size_t sentence = tokens[begin].sentence;
    const std::size_t stop = begin > rules.window ? begin - rules.window : 0;
    for (std::size_t j = begin; j > stop; --j) {
        const Token& t = tokens[j - 1];
        if (t.sentence != sentence) break;
        if (rules.terminators.contains(t.text)) return false;
        if (rules.triggers.contains(t.text)) return true;
    }
    return false;
}

std::vector<EntityMention> scan_section(std::string_view text, Section section, const KnowledgeGraph& graph,
                                        const ParserConfig& config) {
    const auto tokens = tokenize(text);
    std::vector<EntityMention> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (tokens[i].text.front() == '#') {
            if (auto tooth = resolve_tooth_notation(tokens[i].text, graph)) {
                out.push_back({section, tokens[i].begin, tokens[i].end,
                               std::string(text.substr(tokens[i].begin, tokens[i].end - tokens[i].begin)), *tooth,
                               detect_negation(tokens, i, i + 1, config.negation)});
            }
            ++i;
            continue;
        }
        std::size_t matched = 0;
        const std::string* node_id = nullptr;
        const std::size_t longest = std::min(graph.max_lexicon_tokens(), tokens.size() - i);
        for (std::size_t len = longest; len >= 1 && node_id == nullptr; --len) {
            if (tokens[i + len - 1].sentence != tokens[i].sentence) continue;
            std::string key = tokens[i].text;
            for (std::size_t k = 1; k < len; ++k) {
                key.push_back(' ');
                key.append(tokens[i + k].text);
            }
            auto it = graph.lexicon().find(key);
            if (it == graph.lexicon().end()) continue;
            for (const auto& id : it->second) {
                if (is_linkable(graph.node(id).kind)) {
                    node_id = &id;
                    matched = len;
                    break;
                }
            }
        }
        if (node_id == nullptr) {
            ++i;
            continue;
        }
        const std::size_t begin = tokens[i].begin;
        const std::size_t end = tokens[i + matched - 1].end;
        out.push_back({section, begin, end, std::string(text.substr(begin, end - begin)), *node_id,
                       detect_negation(tokens, i, i + matched, config.negation)});
        i += matched;
    }
    return out;
}

StructuredFindings summarize_mentions(std::vector<EntityMention> mentions, const KnowledgeGraph& graph,
                                      const ParserConfig& config) {
    StructuredFindings f;
    std::map<std::string, std::size_t> votes;
    std::set<std::string> symptoms;
    std::size_t symptom_mentions = 0;
    auto push_unique = [](std::vector<std::string>& v, const std::string& id) {
        if (std::find(v.begin(), v.end(), id) == v.end()) v.push_back(id);
    };
    for (const auto& m : mentions) {
        if (m.negated) continue;
        const KGNode& n = graph.node(m.node_id);
        switch (n.kind) {
        case NodeKind::Symptom:
            ++symptom_mentions;
            symptoms.insert(n.id);
            for (auto e : graph.out_edges(n.id, Relation::indicates)) ++votes[graph.edges()[e].dst];
            break;
        case NodeKind::ToothSite: push_unique(f.tooth_sites, n.id); break;
        case NodeKind::Drug: push_unique(f.prior_antibiotics, n.id); break;
        default: break;
        }
    }
    for (const auto& [condition, count] : votes) {
        f.diagnosis_candidates.push_back(
            {condition, static_cast<double>(count) / static_cast<double>(symptom_mentions)});
    }
    std::stable_sort(f.diagnosis_candidates.begin(), f.diagnosis_candidates.end(),
                     [](const DiagnosisCandidate& a, const DiagnosisCandidate& b) { return a.score > b.score; });

    if (symptoms.empty()) {
        f.severity = Severity::unknown;
    } else if (std::any_of(symptoms.begin(), symptoms.end(),
                           [&](const std::string& s) { return config.severe_symptoms.contains(s); })) {
        f.severity = Severity::severe;
    } else if (symptoms.size() >= 2) {
        f.severity = Severity::moderate;
    } else {
        f.severity = Severity::mild;
    }
    f.mentions = std::move(mentions);
    return f;
}

StructuredFindings extract(const ClinicalRecord& record, const KnowledgeGraph& graph, const ParserConfig& config) {
    std::vector<EntityMention> mentions;
    for (auto section : kSections) {
        auto found = scan_section(record.text(section), section, graph, config);
        mentions.insert(mentions.end(), found.begin(), found.end());
    }
    return summarize_mentions(std::move(mentions), graph, config);
}

} // namespace kgrx

#pragma once

#include "kgrx/kg_store.hpp"
#include "kgrx/record.hpp"
#include "kgrx/text.hpp"

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgrx {

enum class Severity { mild, moderate, severe, unknown };

std::string_view to_string(Severity s) noexcept;
std::optional<Severity> parse_severity(std::string_view s) noexcept;

struct DiagnosisCandidate {
    std::string condition;
    double score = 0.0;

    friend bool operator==(const DiagnosisCandidate&, const DiagnosisCandidate&) = default;
};

struct StructuredFindings {
    std::vector<EntityMention> mentions;
    std::vector<DiagnosisCandidate> diagnosis_candidates; ///< score-descending, ties by id
    std::vector<std::string> tooth_sites;
    std::vector<std::string> prior_antibiotics;
    Severity severity = Severity::unknown;

    friend bool operator==(const StructuredFindings&, const StructuredFindings&) = default;
};

/// NegEx-style window rule.
struct NegationRules {
    std::set<std::string, std::less<>> triggers{"no", "denies", "without", "absent", "negative"};
    std::set<std::string, std::less<>> terminators{"but", "however"};
    std::size_t window = 4;
};

struct ParserConfig {
    NegationRules negation;
    /// Symptom ids whose non-negated presence makes a case severe.
    std::set<std::string, std::less<>> severe_symptoms{"facial_swelling", "fever", "trismus"};
};

/// '#' plus two FDI digits (quadrants 1-4 permanent, 5-8 primary) mapped to
/// the ToothSite node carrying that code.
std::optional<std::string> resolve_tooth_notation(std::string_view token, const KnowledgeGraph& graph);

/// True iff a trigger occurs within `rules.window` tokens before
/// tokens[begin], in the same sentence, with no terminator in between.
bool detect_negation(std::span<const Token> tokens, std::size_t begin, std::size_t end,
                     const NegationRules& rules = {});

/// Longest-match lexicon scan of one section. Only clinical kinds are linked
/// (guideline passages and age bands are not text entities).
std::vector<EntityMention> scan_section(std::string_view text, Section section, const KnowledgeGraph& graph,
                                        const ParserConfig& config = {});

/// Derives diagnosis candidates, tooth sites, prior antibiotics and severity
/// from a mention list.
StructuredFindings summarize_mentions(std::vector<EntityMention> mentions, const KnowledgeGraph& graph,
                                      const ParserConfig& config = {});

StructuredFindings extract(const ClinicalRecord& record, const KnowledgeGraph& graph, const ParserConfig& config = {});

} // namespace kgrx

#pragma once

#include "kgrx/candidate.hpp"
#include "kgrx/kg_store.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace kgrx {

inline constexpr std::int64_t kMaxPediatricAgeMonths = 216;

struct PatientProfile {
    std::int64_t age_months = 0;
    double weight_kg = 0.0;
    std::set<std::string> allergies;           ///< AllergyClass ids
    std::set<std::string> current_medications; ///< Drug ids
    std::set<std::string> comorbidities;       ///< Condition ids

    friend bool operator==(const PatientProfile&, const PatientProfile&) = default;
};

enum class Section { chief_complaint, exam_notes, radiographic_report };

inline constexpr std::array<Section, 3> kSections = {Section::chief_complaint, Section::exam_notes,
                                                     Section::radiographic_report};

std::string_view to_string(Section s) noexcept;
std::optional<Section> parse_section(std::string_view s) noexcept;

struct EntityMention {
    Section section = Section::chief_complaint;
    std::size_t begin = 0; ///< character offsets into the section text, half-open
    std::size_t end = 0;
    std::string surface;
    std::string node_id;
    bool negated = false;

    friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct GoldAnnotation {
    std::vector<EntityMention> entities;
    std::string diagnosis;
    std::optional<AntibioticCandidate> prescription; ///< absent when no safe option exists
    std::vector<std::string> evidence_node_ids;
    std::string reference_summary;

    friend bool operator==(const GoldAnnotation&, const GoldAnnotation&) = default;
};

struct ClinicalRecord {
    std::string record_id;
    std::string patient_id;
    std::string chief_complaint;
    std::string exam_notes;
    std::string radiographic_report;
    PatientProfile profile;
    std::optional<GoldAnnotation> gold;

    const std::string& text(Section s) const noexcept;
    /// All sections joined by newlines.
    std::string full_text() const;

    friend bool operator==(const ClinicalRecord&, const ClinicalRecord&) = default;
};

/// Rough growth-curve weight for an age; used by the synthetic generators.
double typical_weight_kg(std::int64_t age_months);

/// Checks the profile invariants (0 <= age <= 216 months, weight in (1, 150) kg).
/// Throws InvalidRecord naming the field path.
void validate_profile(const PatientProfile& profile);

/// Profile invariants plus a non-empty id and at least one non-empty section.
void validate_record(const ClinicalRecord& record);

/// Every profile id resolves to a node of the expected kind.
void validate_profile_ids(const PatientProfile& profile, const KnowledgeGraph& graph);

} // namespace kgrx

#include "kgrx/record.hpp"

#include "kgrx/errors.hpp"

namespace kgrx {

std::string_view to_string(Section s) noexcept {
    switch (s) {
    case Section::chief_complaint: return "chief_complaint";
    case Section::exam_notes: return "exam_notes";
    case Section::radiographic_report: return "radiographic_report";
    }
    return "chief_complaint";
}

std::optional<Section> parse_section(std::string_view s) noexcept {
    for (auto sec : kSections) {
        if (to_string(sec) == s) return sec;
    }
    return std::nullopt;
}

const std::string& ClinicalRecord::text(Section s) const noexcept {
    switch (s) {
    case Section::chief_complaint: return chief_complaint;
    case Section::exam_notes: return exam_notes;
    case Section::radiographic_report: return radiographic_report;
    }
    return chief_complaint;
}

std::string ClinicalRecord::full_text() const {
    return chief_complaint + "\n" + exam_notes + "\n" + radiographic_report;
}

void validate_profile(const PatientProfile& profile) {
    if (profile.age_months < 0 || profile.age_months > kMaxPediatricAgeMonths) {
        throw InvalidRecord("profile.age_months", "must lie in [0, 216]");
    }
    if (!(profile.weight_kg > 1.0 && profile.weight_kg < 150.0)) {
        throw InvalidRecord("profile.weight_kg", "must lie in (1, 150)");
    }
}

void validate_record(const ClinicalRecord& record) {
    if (record.record_id.empty()) throw InvalidRecord("record_id", "must be non-empty");
    if (record.chief_complaint.empty() && record.exam_notes.empty() && record.radiographic_report.empty()) {
        throw InvalidRecord("chief_complaint", "at least one text section must be non-empty");
    }
    validate_profile(record.profile);
}

void validate_profile_ids(const PatientProfile& profile, const KnowledgeGraph& graph) {
    auto check = [&](const std::set<std::string>& ids, const char* field, NodeKind kind) {
        std::size_t i = 0;
        for (const auto& id : ids) {
            const KGNode* n = graph.find(id);
            const std::string path = std::string("profile.") + field + "[" + std::to_string(i++) + "]";
            if (n == nullptr) throw InvalidRecord(path, "unknown node '" + id + "'");
            if (n->kind != kind) throw InvalidRecord(path, "'" + id + "' is not a " + std::string(to_string(kind)));
        }
    };
    check(profile.allergies, "allergies", NodeKind::AllergyClass);
    check(profile.current_medications, "current_medications", NodeKind::Drug);
    check(profile.comorbidities, "comorbidities", NodeKind::Condition);
}

double typical_weight_kg(std::int64_t age_months) {
    const double age = static_cast<double>(age_months);
    return age < 12.0 ? 3.5 + 0.5 * age : 9.5 + 0.23 * (age - 12.0);
}

} // namespace kgrx

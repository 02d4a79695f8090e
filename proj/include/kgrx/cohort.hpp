#pragma once

#include "kgrx/kg_store.hpp"
#include "kgrx/record.hpp"
#include "kgrx/rng.hpp"
#include "kgrx/safety.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgrx {

struct CohortConfig {
    std::uint64_t seed = 42;
    std::size_t n_records = 100;
    double allergy_rate = 0.15;
    double comedication_rate = 0.10;
    double comorbidity_rate = 0.08;
    double negation_rate = 0.20;
    std::string template_set = "default";

    /// Throws ConfigError.
    void validate() const;
};

enum class Split { train, dev, test };

std::string_view to_string(Split s) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;

struct Cohort {
    std::vector<ClinicalRecord> records;
    std::vector<Split> splits; ///< parallel to records; assigned per patient

    std::vector<const ClinicalRecord*> select(Split s) const;
};

/// Seeded synthetic visits built from sentence templates over the graph's
/// dental conditions. Each record carries gold entities with spans, the
/// diagnosis, a rule-clean prescription when one exists for the profile, gold
/// evidence ids and a reference summary. Patients (some with repeat visits)
/// are split 70/15/15. Throws ConfigError.
Cohort generate_cohort(const CohortConfig& config, const KnowledgeGraph& graph);

/// Gold prescription for a profile: treating drugs in first-line-then-id
/// order, the first with an in-band, under-cap dose that validate() passes
/// under default weights and the given classifier. Absent when none qualifies.
std::optional<AntibioticCandidate> gold_prescription(const std::string& diagnosis, const PatientProfile& profile,
                                                     const KnowledgeGraph& graph, const SafetyClassifier& classifier,
                                                     Rng& rng);

} // namespace kgrx

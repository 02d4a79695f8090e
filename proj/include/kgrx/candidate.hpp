#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kgrx {

/// A drug-dose-frequency-duration proposal.
struct AntibioticCandidate {
    std::string drug;
    double dose_mg_per_kg_day = 0.0;
    std::int64_t frequency_per_day = 0;
    std::int64_t duration_days = 0;
    std::string rationale;
    std::vector<std::string> evidence_node_ids;

    friend bool operator==(const AntibioticCandidate&, const AntibioticCandidate&) = default;
};

} // namespace kgrx

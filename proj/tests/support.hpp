#pragma once
#include "kgrx/cohort.hpp"
#include "kgrx/errors.hpp"
#include "kgrx/harness.hpp"
#include "kgrx/json_io.hpp"
#include "kgrx/kg_store.hpp"
#include "kgrx/record.hpp"
#include "kgrx/safety.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgrx::test {

inline std::string fixture(std::string_view name) { return std::string(KGRX_FIXTURE_DIR) + "/" + std::string(name); }
inline std::string golden(std::string_view name) { return std::string(KGRX_GOLDEN_DIR) + "/" + std::string(name); }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline const KnowledgeGraph& mini_graph() {
    static const KnowledgeGraph g = load_graph(fixture("kg_mini.jsonl"));
    return g;
}

inline const KnowledgeGraph& fixture_graph() {
    static const KnowledgeGraph g = load_graph(fixture("kg_fixture.jsonl"));
    return g;
}

inline const std::vector<ClinicalRecord>& mini_records() {
    static const std::vector<ClinicalRecord> r = load_records(fixture("records_mini.jsonl"));
    return r;
}

inline const ClinicalRecord& mini_record(std::string_view id) {
    for (const auto& r : mini_records()) {
        if (r.record_id == id) return r;
    }
    throw std::runtime_error("no fixture record " + std::string(id));
}

inline const SafetyClassifier& mini_classifier() {
    static const SafetyClassifier c = default_classifier(mini_graph());
    return c;
}

inline const SafetyClassifier& fixture_classifier() {
    static const SafetyClassifier c = default_classifier(fixture_graph());
    return c;
}

inline const Cohort& fixture_cohort() {
    static const Cohort c = [] {
        CohortConfig cfg;
        cfg.n_records = 300;
        return generate_cohort(cfg, fixture_graph());
    }();
    return c;
}

} // namespace kgrx::test

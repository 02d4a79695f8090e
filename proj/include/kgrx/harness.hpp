#pragma once

#include "kgrx/metrics.hpp"
#include "kgrx/recommender.hpp"
#include "kgrx/record.hpp"
#include "kgrx/retrieval.hpp"
#include "kgrx/safety.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kgrx {

enum class Variant { full, no_kg, no_rag, no_safety };

inline constexpr std::array<Variant, 4> kAllVariants = {Variant::full, Variant::no_kg, Variant::no_rag,
                                                        Variant::no_safety};

std::string_view to_string(Variant v) noexcept;
/// Throws UnknownVariant.
Variant parse_variant(std::string_view s);

struct EvaluationConfig {
    RecommendConfig recommend;
    RankingCoefficients coefficients;
    std::int64_t duration_tolerance_days = 1;
    std::size_t threads = 1;
    std::size_t bootstrap_resamples = 1000;
    std::uint64_t bootstrap_seed = 0;
};

/// Variant overrides on top of a base configuration. no_kg forces the gate
/// to text-only and drops retrieval terms from ranking; no_rag disables
/// guideline search; no_safety emits the raw top candidate.
RecommendConfig variant_config(RecommendConfig base, Variant v);

struct CaseResult {
    const ClinicalRecord* record = nullptr;
    PipelineResult result;
};

struct PrescriptionMetrics {
    double top1 = 0.0;
    double top3 = 0.0;
    double cvr = 0.0;
    double der = 0.0;
    double gcs = 0.0;
    double abstention_rate = 0.0;
    std::size_t cases = 0;
    std::size_t emitted = 0;
    std::size_t abstained = 0;
    std::size_t violations = 0;
    std::size_t dose_errors = 0;
};

/// True iff the candidate names the gold drug, its dose lies in the gold
/// drug's band for the patient's age, and its duration is within the
/// tolerance of the gold duration.
bool matches_gold(const AntibioticCandidate& c, const AntibioticCandidate& gold, const PatientProfile& p,
                  const KnowledgeGraph& graph, std::int64_t duration_tolerance_days);

/// Dose outside the applicable band (or no band) or above the absolute cap.
bool is_dose_error(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& graph);

/// Top-k over cases with gold: a case without a gold prescription counts as
/// correct iff the engine abstained. CVR, DER and GCS are over emissions only.
PrescriptionMetrics prescription_metrics(std::span<const CaseResult> cases, const KnowledgeGraph& graph,
                                         std::int64_t duration_tolerance_days = 1);

struct EvaluationReport {
    std::string variant;
    PrecisionRecall ner;
    double bleu = 0.0;
    PrescriptionMetrics rx;
    double eas = 0.0;
    std::pair<double, double> top1_ci{0.0, 0.0};
    std::pair<double, double> eas_ci{0.0, 0.0};
    std::size_t records = 0;
    std::size_t gold_records = 0;
};

nlohmann::json report_json(const EvaluationReport& r);
/// Fixed-width table with one row per report.
std::string report_table(std::span<const EvaluationReport> reports);

struct Evaluation {
    EvaluationReport report;
    std::vector<CaseResult> cases; ///< in record order
};

/// Runs the pipeline on every record (in parallel when configured; results
/// do not depend on the thread count) and reduces the metric suite.
Evaluation evaluate(std::span<const ClinicalRecord> records, const Retriever& retriever,
                    const SafetyClassifier& classifier, Variant variant, const EvaluationConfig& config = {});

std::vector<EvaluationReport> run_ablation(std::span<const ClinicalRecord> records, const Retriever& retriever,
                                           const SafetyClassifier& classifier, std::span<const Variant> variants,
                                           const EvaluationConfig& config = {});

/// Name-checked form used by the CLI; throws UnknownVariant.
std::vector<EvaluationReport> run_ablation(std::span<const ClinicalRecord> records, const Retriever& retriever,
                                           const SafetyClassifier& classifier,
                                           std::span<const std::string> variant_names,
                                           const EvaluationConfig& config = {});

} // namespace kgrx

#pragma once

#include "kgrx/candidate.hpp"
#include "kgrx/embedding.hpp"
#include "kgrx/kg_store.hpp"
#include "kgrx/record.hpp"
#include "kgrx/record_parser.hpp"
#include "kgrx/retrieval.hpp"
#include "kgrx/safety.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace kgrx {

struct ScoredCandidate {
    AntibioticCandidate candidate;
    double score = 0.0;
};

/// Seam where a parametric model would propose candidates. Implementations
/// must be deterministic for fixed inputs, never propose an excluded drug,
/// and return finite scores in descending order.
class CandidateGenerator {
public:
    virtual ~CandidateGenerator() = default;
    virtual std::vector<ScoredCandidate> generate(const StructuredFindings& findings, const PatientProfile& profile,
                                                  const RetrievalContext& context,
                                                  const std::set<std::string>& exclusions, std::size_t n) const = 0;
};

struct RankingCoefficients {
    double first_line = 2.0;
    double retrieval = 1.0;
    double similarity = 0.1;

    friend bool operator==(const RankingCoefficients&, const RankingCoefficients&) = default;
};

/// Default generator: drugs that treat the top diagnosis, dosed at the band
/// midpoint with the rule's minimum frequency and duration. Drugs without a
/// band for the patient's age are proposed from the nearest band so that the
/// validator can reject them explicitly.
class KgTemplateGenerator final : public CandidateGenerator {
public:
    KgTemplateGenerator(const Retriever& retriever, RankingCoefficients coefficients = {},
                        bool use_retrieval_scores = true);

    /// Throws NoDiagnosis on empty diagnosis candidates.
    std::vector<ScoredCandidate> generate(const StructuredFindings& findings, const PatientProfile& profile,
                                          const RetrievalContext& context, const std::set<std::string>& exclusions,
                                          std::size_t n) const override;

private:
    const Retriever* retriever_;
    RankingCoefficients coefficients_;
    bool use_retrieval_scores_;
};

struct RecommendConfig {
    SafetyWeights weights;
    FusionGate gate;
    std::size_t top_k = 10;
    std::size_t guidelines_m = 3;
    std::size_t candidates_per_round = 5;
    std::size_t max_rounds = 3;
    bool use_rag = true;
    bool bypass_safety = false; ///< ablation only: emit the raw top candidate
};

enum class AbstentionReason { NoDiagnosis, NoCandidates, AllCandidatesRejected };

std::string_view to_string(AbstentionReason r) noexcept;

struct ValidatedCandidate {
    AntibioticCandidate candidate;
    SafetyReport report;
};

struct Recommendation {
    std::optional<ValidatedCandidate> emitted;    ///< empty on abstention
    std::optional<AbstentionReason> abstention;
    std::vector<ValidatedCandidate> alternatives; ///< later candidates of the emitting round that also pass
    std::vector<ValidatedCandidate> rejected;     ///< in validation order
    std::vector<GuidelineHit> guideline_hits;
    std::size_t attempts = 0;                     ///< candidates validated up to the emission
    bool safety_bypassed = false;
    std::string summary;

    bool abstained() const noexcept { return !emitted.has_value(); }
    /// Emitted candidate followed by the alternatives.
    std::vector<const AntibioticCandidate*> ranked() const;
};

struct PipelineResult {
    StructuredFindings findings;
    RetrievalContext context;
    Recommendation recommendation;
};

/// extract -> build_context -> bounded reject-and-regenerate loop. Each round
/// asks for `candidates_per_round` candidates excluding every drug already
/// rejected and validates them in score order; the first Pass is emitted. If
/// every round is exhausted the result is an abstention carrying every
/// rejection. Safety is never relaxed to produce an output.
PipelineResult run_pipeline(const ClinicalRecord& record, const Retriever& retriever, const RecommendConfig& config,
                            const SafetyClassifier& classifier, const CandidateGenerator& generator);

Recommendation recommend(const ClinicalRecord& record, const Retriever& retriever, const RecommendConfig& config,
                         const SafetyClassifier& classifier, const CandidateGenerator& generator);

struct RxLoss {
    double value = 0.0;
    bool gold_found = true; ///< false: value is +infinity
};

/// -log softmax(scores)[gold] + lambda * (1 - S_safety(gold)).
RxLoss rx_loss(const AntibioticCandidate& gold, std::span<const ScoredCandidate> candidates,
               const PatientProfile& profile, const KnowledgeGraph& graph, const SafetyWeights& weights,
               double lambda = 1.0);

/// Slot-filled diagnostic summary; the wording is fixed so that BLEU against
/// template-built references is meaningful.
std::string generate_summary(const StructuredFindings& findings, const Recommendation& recommendation,
                             const KnowledgeGraph& graph);

/// Human-readable dose figure used in summaries ("65", "16.5").
std::string format_quantity(double value);

} // namespace kgrx

#include "kgrx/recommender.hpp"

#include "kgrx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace kgrx {

namespace {

std::string violation_phrase(Violation v) {
    switch (v) {
    case Violation::AllergyConflict: return "allergy conflict";
    case Violation::AbsoluteDoseExceeded: return "absolute dose exceeded";
    case Violation::NoDoseRuleForAge: return "no dose rule for age";
    case Violation::ComorbidityContraindication: return "comorbidity contraindication";
    case Violation::FrequencyOutOfRange: return "frequency out of range";
    case Violation::DurationOutOfRange: return "duration out of range";
    }
    return "unsafe";
}

std::string verdict_phrase(Verdict v) {
    switch (v) {
    case Verdict::RejectClassifier: return "classifier flagged unsafe";
    case Verdict::RejectThreshold: return "safety score below threshold";
    default: return "rejected";
    }
}

std::string reason_phrase(AbstentionReason r) {
    switch (r) {
    case AbstentionReason::NoDiagnosis: return "no diagnosis";
    case AbstentionReason::NoCandidates: return "no candidate drug";
    case AbstentionReason::AllCandidatesRejected: return "all candidates rejected";
    }
    return "no candidate drug";
}

} // namespace

std::string_view to_string(AbstentionReason r) noexcept {
    switch (r) {
    case AbstentionReason::NoDiagnosis: return "NoDiagnosis";
    case AbstentionReason::NoCandidates: return "NoCandidates";
    case AbstentionReason::AllCandidatesRejected: return "AllCandidatesRejected";
    }
    return "NoCandidates";
}

std::vector<const AntibioticCandidate*> Recommendation::ranked() const {
    std::vector<const AntibioticCandidate*> out;
    if (emitted) out.push_back(&emitted->candidate);
    for (const auto& a : alternatives) out.push_back(&a.candidate);
    return out;
}

KgTemplateGenerator::KgTemplateGenerator(const Retriever& retriever, RankingCoefficients coefficients,
                                         bool use_retrieval_scores)
    : retriever_(&retriever), coefficients_(coefficients), use_retrieval_scores_(use_retrieval_scores) {}

std::vector<ScoredCandidate> KgTemplateGenerator::generate(const StructuredFindings& findings,
                                                           const PatientProfile& profile,
                                                           const RetrievalContext& context,
                                                           const std::set<std::string>& exclusions,
                                                           std::size_t n) const {
    if (findings.diagnosis_candidates.empty()) throw NoDiagnosis();
    const KnowledgeGraph& g = retriever_->graph();
    const std::string& diagnosis = findings.diagnosis_candidates.front().condition;
    const auto edges = g.edges();

    std::vector<ScoredCandidate> out;
    for (auto i : g.in_edges(diagnosis, Relation::treats)) {
        const KGEdge& e = edges[i];
        if (exclusions.contains(e.src)) continue;
        const auto rule = nearest_dose_rule(g, e.src, profile.age_months);
        if (!rule) continue;
        const bool first_line = as_text(e.attrs, "line").value_or("") == "first";

        ScoredCandidate sc;
        sc.score = coefficients_.first_line * (first_line ? 1.0 : 0.0);
        if (use_retrieval_scores_) {
            sc.score += coefficients_.retrieval * context.subgraph.score_of(e.src) +
                        coefficients_.similarity * cosine(embed_text(g.node(e.src).name), context.h_star);
        }
        auto& c = sc.candidate;
        c.drug = e.src;
        c.dose_mg_per_kg_day = rule->midpoint();
        c.frequency_per_day = rule->freq_min_per_day;
        c.duration_days = rule->duration_min_days;
        c.rationale = std::string(first_line ? "first-line" : "second-line") + " therapy for " +
                      g.node(diagnosis).name + "; dose at the midpoint of the " + g.node(rule->band).name + " band";
        c.evidence_node_ids = {diagnosis, e.src, rule->band};
        if (!context.guideline_hits.empty()) {
            const auto& top = context.guideline_hits.front().passage_node_id;
            if (std::find(c.evidence_node_ids.begin(), c.evidence_node_ids.end(), top) == c.evidence_node_ids.end()) {
                c.evidence_node_ids.push_back(top);
            }
        }
        out.push_back(std::move(sc));
    }
    std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.candidate.drug < b.candidate.drug;
    });
    if (out.size() > n) out.resize(n);
    return out;
}

PipelineResult run_pipeline(const ClinicalRecord& record, const Retriever& retriever, const RecommendConfig& config,
                            const SafetyClassifier& classifier, const CandidateGenerator& generator) {
    const KnowledgeGraph& g = retriever.graph();
    PipelineResult result;
    result.findings = extract(record, g);
    result.context =
        retriever.build_context(record, config.gate, config.top_k, config.use_rag ? config.guidelines_m : 0);
    Recommendation& rec = result.recommendation;
    rec.guideline_hits = result.context.guideline_hits;
    rec.safety_bypassed = config.bypass_safety;

    auto finish = [&]() -> PipelineResult& {
        rec.summary = generate_summary(result.findings, rec, g);
        return result;
    };

    if (result.findings.diagnosis_candidates.empty()) {
        rec.abstention = AbstentionReason::NoDiagnosis;
        return finish();
    }

    std::set<std::string> exclusions;
    for (std::size_t round = 0; round < config.max_rounds; ++round) {
        const auto batch = generator.generate(result.findings, record.profile, result.context, exclusions,
                                              config.candidates_per_round);
        if (batch.empty()) break;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& cand = batch[i].candidate;
            if (exclusions.contains(cand.drug)) {
                throw std::logic_error("generator proposed excluded drug " + cand.drug);
            }
            SafetyReport report = validate(cand, record.profile, g, config.weights, classifier);
            ++rec.attempts;
            if (config.bypass_safety || report.verdict == Verdict::Pass) {
                if (!config.bypass_safety) {
                    const auto again = validate(cand, record.profile, g, config.weights, classifier);
                    if (again.verdict != Verdict::Pass || !again.hard_violations.empty()) {
                        throw std::logic_error("emitted candidate failed re-validation");
                    }
                }
                rec.emitted = ValidatedCandidate{cand, std::move(report)};
                for (std::size_t j = i + 1; j < batch.size(); ++j) {
                    auto alt = validate(batch[j].candidate, record.profile, g, config.weights, classifier);
                    if (config.bypass_safety || alt.verdict == Verdict::Pass) {
                        rec.alternatives.push_back({batch[j].candidate, std::move(alt)});
                    }
                }
                return finish();
            }
            exclusions.insert(cand.drug);
            rec.rejected.push_back({cand, std::move(report)});
        }
    }
    rec.abstention = rec.rejected.empty() ? AbstentionReason::NoCandidates : AbstentionReason::AllCandidatesRejected;
    return finish();
}

Recommendation recommend(const ClinicalRecord& record, const Retriever& retriever, const RecommendConfig& config,
                         const SafetyClassifier& classifier, const CandidateGenerator& generator) {
    return run_pipeline(record, retriever, config, classifier, generator).recommendation;
}

RxLoss rx_loss(const AntibioticCandidate& gold, std::span<const ScoredCandidate> candidates,
               const PatientProfile& profile, const KnowledgeGraph& graph, const SafetyWeights& weights,
               double lambda) {
    auto it = std::find_if(candidates.begin(), candidates.end(),
                           [&](const ScoredCandidate& c) { return c.candidate.drug == gold.drug; });
    if (it == candidates.end()) return {std::numeric_limits<double>::infinity(), false};
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) top = std::max(top, c.score);
    double sum = 0.0;
    for (const auto& c : candidates) sum += std::exp(c.score - top);
    const double nll = std::log(sum) - (it->score - top);
    const double safety = safety_score(gold, profile, graph, weights).s_safety;
    return {nll + lambda * (1.0 - safety), true};
}

std::string format_quantity(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

std::string generate_summary(const StructuredFindings& findings, const Recommendation& recommendation,
                             const KnowledgeGraph& graph) {
    std::string out = "Diagnosis: ";
    if (findings.diagnosis_candidates.empty()) {
        out += "undetermined";
    } else {
        out += graph.node(findings.diagnosis_candidates.front().condition).name;
    }
    if (!findings.tooth_sites.empty()) out += " at " + graph.node(findings.tooth_sites.front()).name;
    if (findings.severity != Severity::unknown) out += ", " + std::string(to_string(findings.severity));
    out += ". Findings: ";
    std::vector<std::string> symptoms;
    for (const auto& m : findings.mentions) {
        if (m.negated || graph.node(m.node_id).kind != NodeKind::Symptom) continue;
        const std::string& name = graph.node(m.node_id).name;
        if (std::find(symptoms.begin(), symptoms.end(), name) == symptoms.end()) symptoms.push_back(name);
    }
    out += symptoms.empty() ? "none" : join(symptoms, ", ");
    out += ".";
    if (recommendation.emitted) {
        const auto& c = recommendation.emitted->candidate;
        out += " Recommendation: " + graph.node(c.drug).name + " " + format_quantity(c.dose_mg_per_kg_day) +
               " mg/kg/day in " + std::to_string(c.frequency_per_day) + " doses daily for " +
               std::to_string(c.duration_days) + " days.";
    } else {
        std::string reason;
        if (!recommendation.rejected.empty()) {
            const auto& report = recommendation.rejected.front().report;
            reason = !report.hard_violations.empty() ? violation_phrase(report.hard_violations.front())
                                                     : verdict_phrase(report.verdict.value_or(Verdict::RejectHardRule));
        } else {
            reason = reason_phrase(recommendation.abstention.value_or(AbstentionReason::NoCandidates));
        }
        out += " No safe antibiotic option; top reason: " + reason + ".";
    }
    return out;
}

} // namespace kgrx

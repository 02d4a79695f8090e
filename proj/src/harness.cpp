#include "kgrx/harness.hpp"

#include "kgrx/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

namespace kgrx {

namespace {

constexpr std::array<std::string_view, 4> kVariantNames = {"full", "no_kg", "no_rag", "no_safety"};

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

std::pair<double, double> interval(const std::vector<double>& xs, const EvaluationConfig& config) {
    if (xs.size() < 2) {
        const double m = mean(xs);
        return {m, m};
    }
    return bootstrap_ci(xs, config.bootstrap_resamples, 0.95, config.bootstrap_seed);
}

bool first_line_for(const std::string& drug, const std::string& diagnosis, const KnowledgeGraph& graph) {
    if (!graph.contains(diagnosis)) return false;
    for (auto i : graph.in_edges(diagnosis, Relation::treats)) {
        const auto& e = graph.edges()[i];
        if (e.src == drug && as_text(e.attrs, "line").value_or("") == "first") return true;
    }
    return false;
}

} // namespace

std::string_view to_string(Variant v) noexcept { return kVariantNames[static_cast<std::size_t>(v)]; }

Variant parse_variant(std::string_view s) {
    for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
        if (kVariantNames[i] == s) return static_cast<Variant>(i);
    }
    throw UnknownVariant(std::string(s));
}

RecommendConfig variant_config(RecommendConfig base, Variant v) {
    switch (v) {
    case Variant::full: break;
    case Variant::no_kg: base.gate = FusionGate(1.0); break;
    case Variant::no_rag: base.use_rag = false; break;
    case Variant::no_safety: base.bypass_safety = true; break;
    }
    return base;
}

bool matches_gold(const AntibioticCandidate& c, const AntibioticCandidate& gold, const PatientProfile& p,
                  const KnowledgeGraph& graph, std::int64_t duration_tolerance_days) {
    if (c.drug != gold.drug) return false;
    const auto rule = dose_rule_for(graph, gold.drug, p.age_months);
    if (!rule) return false;
    if (c.dose_mg_per_kg_day < rule->min_mg_per_kg_day || c.dose_mg_per_kg_day > rule->max_mg_per_kg_day) {
        return false;
    }
    return std::abs(c.duration_days - gold.duration_days) <= duration_tolerance_days;
}

bool is_dose_error(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& graph) {
    const auto rule = dose_rule_for(graph, c.drug, p.age_months);
    if (!rule) return true;
    if (c.dose_mg_per_kg_day < rule->min_mg_per_kg_day || c.dose_mg_per_kg_day > rule->max_mg_per_kg_day) return true;
    return c.dose_mg_per_kg_day * p.weight_kg > rule->abs_max_mg_day;
}

PrescriptionMetrics prescription_metrics(std::span<const CaseResult> cases, const KnowledgeGraph& graph,
                                         std::int64_t duration_tolerance_days) {
    PrescriptionMetrics m;
    std::size_t gold_cases = 0, top1 = 0, top3 = 0, guideline = 0, emitted_with_gold = 0;
    for (const auto& c : cases) {
        const auto& rec = c.result.recommendation;
        const auto& profile = c.record->profile;
        ++m.cases;
        if (rec.abstained()) {
            ++m.abstained;
        } else {
            ++m.emitted;
            const auto& cand = rec.emitted->candidate;
            if (!hard_rule_check(cand, profile, graph).empty()) ++m.violations;
            if (is_dose_error(cand, profile, graph)) ++m.dose_errors;
            if (c.record->gold) {
                ++emitted_with_gold;
                if (first_line_for(cand.drug, c.record->gold->diagnosis, graph)) ++guideline;
            }
        }
        if (!c.record->gold) continue;
        ++gold_cases;
        const auto& gold = c.record->gold->prescription;
        if (!gold) {
            top1 += rec.abstained();
            top3 += rec.abstained();
            continue;
        }
        const auto ranked = rec.ranked();
        for (std::size_t k = 0; k < ranked.size() && k < 3; ++k) {
            if (matches_gold(*ranked[k], *gold, profile, graph, duration_tolerance_days)) {
                top1 += k == 0;
                ++top3;
                break;
            }
        }
    }
    m.top1 = ratio(top1, gold_cases);
    m.top3 = ratio(top3, gold_cases);
    m.cvr = ratio(m.violations, m.emitted);
    m.der = ratio(m.dose_errors, m.emitted);
    m.gcs = ratio(guideline, emitted_with_gold);
    m.abstention_rate = ratio(m.abstained, m.cases);
    return m;
}

nlohmann::json report_json(const EvaluationReport& r) {
    return {{"variant", r.variant},
            {"ner_precision", r.ner.precision},
            {"ner_recall", r.ner.recall},
            {"ner_f1", r.ner.f1},
            {"bleu", r.bleu},
            {"top1", r.rx.top1},
            {"top3", r.rx.top3},
            {"cvr", r.rx.cvr},
            {"der", r.rx.der},
            {"gcs", r.rx.gcs},
            {"eas", r.eas},
            {"abstention_rate", r.rx.abstention_rate},
            {"top1_ci", {r.top1_ci.first, r.top1_ci.second}},
            {"eas_ci", {r.eas_ci.first, r.eas_ci.second}},
            {"counts",
             {{"records", r.records},
              {"gold_records", r.gold_records},
              {"emitted", r.rx.emitted},
              {"abstained", r.rx.abstained},
              {"violations", r.rx.violations},
              {"dose_errors", r.rx.dose_errors}}}};
}

std::string report_table(std::span<const EvaluationReport> reports) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %7s %7s %6s %6s %6s %6s %6s %6s %8s\n", "variant", "ner_f1", "bleu", "top1",
                  "top3", "cvr", "der", "gcs", "eas", "abstain");
    out << buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%-10s %7.4f %7.2f %6.3f %6.3f %6.3f %6.3f %6.3f %6.3f %8.3f\n",
                      r.variant.c_str(), r.ner.f1, r.bleu, r.rx.top1, r.rx.top3, r.rx.cvr, r.rx.der, r.rx.gcs, r.eas,
                      r.rx.abstention_rate);
        out << buf;
    }
    return out.str();
}

Evaluation evaluate(std::span<const ClinicalRecord> records, const Retriever& retriever,
                    const SafetyClassifier& classifier, Variant variant, const EvaluationConfig& config) {
    const RecommendConfig rc = variant_config(config.recommend, variant);
    const KgTemplateGenerator generator(retriever, config.coefficients, variant != Variant::no_kg);

    Evaluation ev;
    ev.cases.resize(records.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto work = [&] {
        for (std::size_t i = next++; i < records.size() && !failed; i = next++) {
            try {
                ev.cases[i] = {&records[i], run_pipeline(records[i], retriever, rc, classifier, generator)};
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, records.size()));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    const KnowledgeGraph& graph = retriever.graph();
    EvaluationReport& r = ev.report;
    r.variant = std::string(to_string(variant));
    r.records = records.size();
    MatchCounts ner;
    std::vector<std::string> summaries, references;
    std::vector<double> top1_samples, eas_samples;
    for (const auto& c : ev.cases) {
        if (!c.record->gold) continue;
        const auto& gold = *c.record->gold;
        ++r.gold_records;
        ner += ner_counts(c.result.findings.mentions, gold.entities);
        summaries.push_back(c.result.recommendation.summary);
        references.push_back(gold.reference_summary);
        const CaseResult one[] = {c};
        top1_samples.push_back(prescription_metrics(one, graph, config.duration_tolerance_days).top1);
        if (const auto& e = c.result.recommendation.emitted) {
            const std::set<std::string> cited(e->candidate.evidence_node_ids.begin(),
                                              e->candidate.evidence_node_ids.end());
            eas_samples.push_back(eas(cited, {gold.evidence_node_ids.begin(), gold.evidence_node_ids.end()}));
        }
    }
    r.ner = precision_recall(ner);
    r.bleu = bleu4(summaries, references);
    r.rx = prescription_metrics(ev.cases, graph, config.duration_tolerance_days);
    r.eas = mean(eas_samples);
    r.top1_ci = interval(top1_samples, config);
    r.eas_ci = interval(eas_samples, config);
    return ev;
}

std::vector<EvaluationReport> run_ablation(std::span<const ClinicalRecord> records, const Retriever& retriever,
                                           const SafetyClassifier& classifier, std::span<const Variant> variants,
                                           const EvaluationConfig& config) {
    std::vector<EvaluationReport> out;
    for (Variant v : variants) out.push_back(evaluate(records, retriever, classifier, v, config).report);
    return out;
}

std::vector<EvaluationReport> run_ablation(std::span<const ClinicalRecord> records, const Retriever& retriever,
                                           const SafetyClassifier& classifier,
                                           std::span<const std::string> variant_names, const EvaluationConfig& config) {
    std::vector<Variant> variants;
    for (const auto& name : variant_names) variants.push_back(parse_variant(name));
    return run_ablation(records, retriever, classifier, variants, config);
}

} // namespace kgrx

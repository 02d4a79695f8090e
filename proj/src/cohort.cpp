#include "kgrx/cohort.hpp"

#include "kgrx/errors.hpp"
#include "kgrx/recommender.hpp"
#include "kgrx/record_parser.hpp"
#include "kgrx/safety.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace kgrx {

namespace {

constexpr std::array<std::string_view, 3> kSplitNames = {"train", "dev", "test"};

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

std::string padded(const char* prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%05zu", prefix, n);
    return buf;
}

/// Accumulates one section's text and the gold spans inside it.
struct SectionBuilder {
    Section section;
    std::string text;
    std::vector<EntityMention> mentions;

    void plain(std::string_view s) { text += s; }
    void mention(const std::string& surface, const std::string& id, bool negated) {
        const std::size_t begin = text.size();
        text += surface;
        mentions.push_back({section, begin, text.size(), surface, id, negated});
    }
    /// "a", "a and b", "a, b and c".
    void mention_list(const std::vector<std::pair<std::string, std::string>>& items) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i > 0) plain(i + 1 == items.size() ? " and " : ", ");
            mention(items[i].first, items[i].second, false);
        }
    }
};

struct Vocabulary {
    struct Diagnosis {
        std::string id;
        std::vector<std::string> symptoms; ///< indicating symptoms, by id
        std::vector<std::string> specific; ///< symptoms indicating nothing else
        std::vector<int> teeth;            ///< FDI codes
    };
    std::vector<Diagnosis> diagnoses;
    std::vector<std::string> symptoms;
    std::vector<std::string> allergies;
    std::vector<std::string> drugs;
    std::vector<std::string> comorbidities;
};

bool is_radiographic(const KnowledgeGraph& g, const std::string& id) {
    return as_text(g.node(id).attrs, "modality").value_or("") == "radiographic";
}

Vocabulary build_vocabulary(const KnowledgeGraph& g) {
    Vocabulary v;
    const auto edges = g.edges();
    std::vector<int> default_teeth;
    for (int code : {84, 85, 74, 75, 54, 55, 64, 65}) {
        if (g.tooth_by_fdi(code)) default_teeth.push_back(code);
    }
    for (const KGNode* c : g.nodes_of_kind(NodeKind::Condition)) {
        const auto category = as_text(c->attrs, "category").value_or("");
        if (category == "comorbidity") {
            v.comorbidities.push_back(c->id);
            continue;
        }
        if (category != "dental" || g.in_edges(c->id, Relation::treats).empty()) continue;
        Vocabulary::Diagnosis d{c->id, {}, {}, {}};
        for (auto i : g.in_edges(c->id, Relation::indicates)) {
            const auto& s = edges[i].src;
            d.symptoms.push_back(s);
            if (g.out_edges(s, Relation::indicates).size() == 1) d.specific.push_back(s);
        }
        std::sort(d.symptoms.begin(), d.symptoms.end());
        std::sort(d.specific.begin(), d.specific.end());
        for (auto i : g.out_edges(c->id, Relation::located_at)) {
            if (auto fdi = as_integer(g.node(edges[i].dst).attrs, "fdi")) d.teeth.push_back(static_cast<int>(*fdi));
        }
        if (d.teeth.empty()) d.teeth = default_teeth;
        if (!d.specific.empty() && !d.teeth.empty()) v.diagnoses.push_back(std::move(d));
    }
    for (const KGNode* n : g.nodes_of_kind(NodeKind::Symptom)) v.symptoms.push_back(n->id);
    for (const KGNode* n : g.nodes_of_kind(NodeKind::AllergyClass)) v.allergies.push_back(n->id);
    for (const KGNode* n : g.nodes_of_kind(NodeKind::Drug)) v.drugs.push_back(n->id);
    return v;
}

std::string surface_for(const KGNode& n, Rng& rng) {
    std::vector<std::string> forms{n.name};
    forms.insert(forms.end(), n.synonyms.begin(), n.synonyms.end());
    return rng.pick(forms);
}

PatientProfile sample_profile(const CohortConfig& cfg, const Vocabulary& v, Rng& rng) {
    PatientProfile p;
    p.age_months = rng.chance(0.08) ? rng.between(6, 23) : rng.between(24, kMaxPediatricAgeMonths);
    p.weight_kg = std::clamp(typical_weight_kg(p.age_months) * rng.uniform(0.85, 1.2), 1.5, 149.0);
    p.weight_kg = std::round(p.weight_kg * 10.0) / 10.0;
    if (!v.allergies.empty() && rng.chance(cfg.allergy_rate)) {
        const bool penicillin = std::find(v.allergies.begin(), v.allergies.end(), "penicillin_allergy") !=
                                v.allergies.end();
        p.allergies.insert(penicillin && rng.chance(0.5) ? std::string("penicillin_allergy") : rng.pick(v.allergies));
    }
    if (!v.drugs.empty() && rng.chance(cfg.comedication_rate)) p.current_medications.insert(rng.pick(v.drugs));
    if (!v.comorbidities.empty() && rng.chance(cfg.comorbidity_rate)) p.comorbidities.insert(rng.pick(v.comorbidities));
    return p;
}

std::vector<const KGEdge*> treating_edges(const std::string& diagnosis, const KnowledgeGraph& g) {
    std::vector<const KGEdge*> out;
    for (auto i : g.in_edges(diagnosis, Relation::treats)) out.push_back(&g.edges()[i]);
    std::sort(out.begin(), out.end(), [](const KGEdge* a, const KGEdge* b) {
        const bool fa = as_text(a->attrs, "line").value_or("") == "first";
        const bool fb = as_text(b->attrs, "line").value_or("") == "first";
        if (fa != fb) return fa;
        return a->src < b->src;
    });
    return out;
}

/// Rejections a careful prescriber would note when nothing qualifies; used
/// only to word the reference summary.
std::vector<ValidatedCandidate> explain_abstention(const std::string& diagnosis, const PatientProfile& p,
                                                   const KnowledgeGraph& g) {
    std::vector<ValidatedCandidate> out;
    const SafetyWeights weights;
    for (const KGEdge* e : treating_edges(diagnosis, g)) {
        const auto rule = nearest_dose_rule(g, e->src, p.age_months);
        if (!rule) continue;
        AntibioticCandidate c;
        c.drug = e->src;
        c.dose_mg_per_kg_day = rule->midpoint();
        c.frequency_per_day = rule->freq_min_per_day;
        c.duration_days = rule->duration_min_days;
        SafetyReport r = safety_score(c, p, g, weights);
        r.hard_violations = hard_rule_check(c, p, g);
        r.verdict = r.hard_violations.empty() ? Verdict::RejectThreshold : Verdict::RejectHardRule;
        out.push_back({std::move(c), std::move(r)});
    }
    return out;
}

} // namespace

void CohortConfig::validate() const {
    if (n_records < 1) throw ConfigError("n_records must be at least 1");
    if (!in_unit(allergy_rate)) throw ConfigError("allergy_rate must lie in [0, 1]");
    if (!in_unit(comedication_rate)) throw ConfigError("comedication_rate must lie in [0, 1]");
    if (!in_unit(comorbidity_rate)) throw ConfigError("comorbidity_rate must lie in [0, 1]");
    if (!in_unit(negation_rate)) throw ConfigError("negation_rate must lie in [0, 1]");
    if (template_set != "default") throw ConfigError("unknown template set: " + template_set);
}

std::string_view to_string(Split s) noexcept { return kSplitNames[static_cast<std::size_t>(s)]; }

std::optional<Split> parse_split(std::string_view s) noexcept {
    for (std::size_t i = 0; i < kSplitNames.size(); ++i) {
        if (kSplitNames[i] == s) return static_cast<Split>(i);
    }
    return std::nullopt;
}

std::vector<const ClinicalRecord*> Cohort::select(Split s) const {
    std::vector<const ClinicalRecord*> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (splits[i] == s) out.push_back(&records[i]);
    }
    return out;
}

std::optional<AntibioticCandidate> gold_prescription(const std::string& diagnosis, const PatientProfile& profile,
                                                     const KnowledgeGraph& graph, const SafetyClassifier& classifier,
                                                     Rng& rng) {
    const SafetyWeights weights;
    for (const KGEdge* e : treating_edges(diagnosis, graph)) {
        const auto rule = dose_rule_for(graph, e->src, profile.age_months);
        if (!rule) continue;
        const double lo = rule->min_mg_per_kg_day;
        const double hi = std::min(rule->max_mg_per_kg_day, rule->abs_max_mg_day / profile.weight_kg);
        if (hi < lo) continue;
        const auto k_lo = static_cast<std::int64_t>(std::ceil(lo * 2.0));
        const auto k_hi = static_cast<std::int64_t>(std::floor(hi * 2.0));
        AntibioticCandidate c;
        c.drug = e->src;
        c.frequency_per_day = rng.between(rule->freq_min_per_day, rule->freq_max_per_day);
        c.duration_days = rng.between(rule->duration_min_days, rule->duration_max_days);
        c.rationale = "reference prescription";
        c.evidence_node_ids = {diagnosis, c.drug, rule->band};
        // half-unit doses the full validation accepts, the band minimum when none fit the grid
        std::vector<double> doses;
        for (auto k = k_lo; k <= k_hi; ++k) doses.push_back(static_cast<double>(k) / 2.0);
        if (doses.empty()) doses.push_back(lo);
        std::erase_if(doses, [&](double d) {
            c.dose_mg_per_kg_day = d;
            return validate(c, profile, graph, weights, classifier).verdict != Verdict::Pass;
        });
        if (doses.empty()) continue;
        c.dose_mg_per_kg_day = doses[rng.index(doses.size())];
        return c;
    }
    return std::nullopt;
}

Cohort generate_cohort(const CohortConfig& config, const KnowledgeGraph& graph) {
    config.validate();
    const Vocabulary vocab = build_vocabulary(graph);
    if (vocab.diagnoses.empty()) throw ConfigError("graph has no dental condition with a specific symptom and a treatment");

    const SafetyClassifier classifier = default_classifier(graph);
    Rng rng(config.seed);
    Cohort cohort;
    struct Patient {
        std::string id;
        PatientProfile profile;
    };
    std::vector<Patient> patients;

    for (std::size_t r = 0; r < config.n_records; ++r) {
        ClinicalRecord rec;
        rec.record_id = padded("rec", r);
        if (!patients.empty() && rng.chance(0.15)) {
            Patient& prior = patients[rng.index(patients.size())];
            prior.profile.age_months = std::min(prior.profile.age_months + rng.between(1, 6), kMaxPediatricAgeMonths);
            rec.patient_id = prior.id;
            rec.profile = prior.profile;
        } else {
            patients.push_back({padded("pat", patients.size()), sample_profile(config, vocab, rng)});
            rec.patient_id = patients.back().id;
            rec.profile = patients.back().profile;
        }

        const auto& dx = rng.pick(vocab.diagnoses);
        std::vector<std::string> clinical_first;
        for (const auto& s : dx.specific) {
            if (!is_radiographic(graph, s)) clinical_first.push_back(s);
        }
        const std::string lead = rng.pick(clinical_first.empty() ? dx.specific : clinical_first);
        std::vector<std::string> others;
        for (const auto& s : dx.symptoms) {
            if (s != lead) others.push_back(s);
        }
        rng.shuffle(others);
        others.resize(std::min(others.size(), static_cast<std::size_t>(rng.index(3))));
        std::vector<std::pair<std::string, std::string>> exam, radio;
        for (const auto& s : others) {
            (is_radiographic(graph, s) ? radio : exam).emplace_back(surface_for(graph.node(s), rng), s);
        }
        const int fdi = rng.pick(dx.teeth);
        const std::string tooth_id(*graph.tooth_by_fdi(fdi));
        const std::string notation = "#" + std::to_string(fdi);

        SectionBuilder cc{Section::chief_complaint, {}, {}};
        const std::string lead_surface = surface_for(graph.node(lead), rng);
        switch (rng.index(3)) {
        case 0:
            cc.plain("Child presents with ");
            cc.mention(lead_surface, lead, false);
            cc.plain(" near tooth ");
            cc.mention(notation, tooth_id, false);
            cc.plain(".");
            break;
        case 1:
            cc.plain("Parent reports ");
            cc.mention(lead_surface, lead, false);
            cc.plain(" around tooth ");
            cc.mention(notation, tooth_id, false);
            cc.plain(" for " + std::to_string(rng.between(1, 10)) + " days.");
            break;
        default:
            cc.plain("Patient has ");
            cc.mention(lead_surface, lead, false);
            cc.plain(" at tooth ");
            cc.mention(notation, tooth_id, false);
            cc.plain(".");
            break;
        }

        SectionBuilder ex{Section::exam_notes, {}, {}};
        if (exam.empty()) {
            ex.plain("Exam confirms the complaint.");
        } else {
            ex.plain(rng.chance(0.5) ? "Exam shows " : "On examination ");
            ex.mention_list(exam);
            ex.plain(".");
        }
        if (rng.chance(config.negation_rate)) {
            std::vector<std::string> absent;
            for (const auto& s : vocab.symptoms) {
                if (s != lead && std::find(others.begin(), others.end(), s) == others.end()) absent.push_back(s);
            }
            if (!absent.empty()) {
                const std::string& s = rng.pick(absent);
                static constexpr std::array<std::string_view, 4> kLeads = {" No ", " Denies ", " Negative for ",
                                                                           " Without "};
                ex.plain(kLeads[rng.index(kLeads.size())]);
                ex.mention(surface_for(graph.node(s), rng), s, true);
                ex.plain(".");
            }
        }

        SectionBuilder rad{Section::radiographic_report, {}, {}};
        if (!radio.empty()) {
            rad.plain("Radiograph shows ");
            rad.mention_list(radio);
            rad.plain(".");
        } else if (rng.chance(0.5)) {
            rad.plain("Radiograph unremarkable.");
        }

        rec.chief_complaint = cc.text;
        rec.exam_notes = ex.text;
        rec.radiographic_report = rad.text;

        GoldAnnotation gold;
        for (auto* b : {&cc, &ex, &rad}) gold.entities.insert(gold.entities.end(), b->mentions.begin(), b->mentions.end());
        gold.diagnosis = dx.id;
        gold.prescription = gold_prescription(dx.id, rec.profile, graph, classifier, rng);
        std::set<std::string> evidence{dx.id};
        if (gold.prescription) {
            evidence.insert(gold.prescription->evidence_node_ids.begin(), gold.prescription->evidence_node_ids.end());
        }
        for (auto i : graph.in_edges(dx.id, Relation::supports)) evidence.insert(graph.edges()[i].src);
        gold.evidence_node_ids.assign(evidence.begin(), evidence.end());

        Recommendation reference;
        if (gold.prescription) {
            reference.emitted = ValidatedCandidate{*gold.prescription, {}};
        } else {
            reference.rejected = explain_abstention(dx.id, rec.profile, graph);
            reference.abstention =
                reference.rejected.empty() ? AbstentionReason::NoCandidates : AbstentionReason::AllCandidatesRejected;
        }
        gold.reference_summary = generate_summary(summarize_mentions(gold.entities, graph), reference, graph);
        rec.gold = std::move(gold);
        validate_record(rec);
        cohort.records.push_back(std::move(rec));
    }

    std::vector<std::string> order;
    for (const auto& p : patients) order.push_back(p.id);
    rng.shuffle(order);
    const auto n = static_cast<double>(order.size());
    const auto n_train = static_cast<std::size_t>(std::llround(0.70 * n));
    const auto n_dev = static_cast<std::size_t>(std::llround(0.15 * n));
    std::map<std::string, Split> assignment;
    for (std::size_t i = 0; i < order.size(); ++i) {
        assignment[order[i]] = i < n_train ? Split::train : (i < n_train + n_dev ? Split::dev : Split::test);
    }
    for (const auto& rec : cohort.records) cohort.splits.push_back(assignment.at(rec.patient_id));
    return cohort;
}

} // namespace kgrx

#include "kgrx/safety.hpp"

#include "kgrx/errors.hpp"
#include "kgrx/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kgrx {

namespace {

constexpr std::array<std::string_view, 6> kViolationNames = {
    "AllergyConflict",       "AbsoluteDoseExceeded", "NoDoseRuleForAge", "ComorbidityContraindication",
    "FrequencyOutOfRange", "DurationOutOfRange"};

constexpr std::array<std::string_view, 4> kVerdictNames = {"Pass", "RejectHardRule", "RejectClassifier",
                                                           "RejectThreshold"};

const KGNode& require_drug(const KnowledgeGraph& g, std::string_view id) {
    const KGNode& n = g.node(id);
    if (n.kind != NodeKind::Drug) throw KindMismatch("'" + n.id + "' is not a Drug");
    return n;
}

struct InteractionStats {
    std::size_t count = 0;
    double max_severity = 0.0;
};

InteractionStats interactions(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g) {
    InteractionStats stats;
    const auto edges = g.edges();
    auto visit = [&](std::size_t i, const std::string& other) {
        if (!p.current_medications.contains(other)) return;
        ++stats.count;
        stats.max_severity = std::max(stats.max_severity, as_number(edges[i].attrs, "severity").value_or(0.0));
    };
    for (auto i : g.out_edges(c.drug, Relation::interacts_with)) visit(i, edges[i].dst);
    for (auto i : g.in_edges(c.drug, Relation::interacts_with)) visit(i, edges[i].src);
    return stats;
}

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
double softplus(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

} // namespace

SafetyWeights::SafetyWeights(double w_dose, double w_allergy, double w_interaction, double tau)
    : w_dose_(w_dose), w_allergy_(w_allergy), w_interaction_(w_interaction), tau_(tau) {
    if (!(w_dose >= 0.0 && w_allergy >= 0.0 && w_interaction >= 0.0)) {
        throw ConfigError("safety weights must be nonnegative");
    }
    if (std::abs(w_dose + w_allergy + w_interaction - 1.0) > 1e-9) throw ConfigError("safety weights must sum to 1");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
}

std::string_view to_string(Violation v) noexcept { return kViolationNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Verdict v) noexcept { return kVerdictNames[static_cast<std::size_t>(v)]; }

std::optional<Violation> parse_violation(std::string_view s) noexcept {
    for (std::size_t i = 0; i < kViolationNames.size(); ++i) {
        if (kViolationNames[i] == s) return static_cast<Violation>(i);
    }
    return std::nullopt;
}

std::optional<Verdict> parse_verdict(std::string_view s) noexcept {
    for (std::size_t i = 0; i < kVerdictNames.size(); ++i) {
        if (kVerdictNames[i] == s) return static_cast<Verdict>(i);
    }
    return std::nullopt;
}

double s_dose(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g) {
    require_drug(g, c.drug);
    const auto rule = dose_rule_for(g, c.drug, p.age_months);
    if (!rule) return 0.0;
    const double dose = c.dose_mg_per_kg_day;
    if (dose >= rule->min_mg_per_kg_day && dose <= rule->max_mg_per_kg_day) return 1.0;
    const double bound = dose < rule->min_mg_per_kg_day ? rule->min_mg_per_kg_day : rule->max_mg_per_kg_day;
    const double deviation = std::abs(dose - bound) / bound;
    return std::max(0.0, 1.0 - deviation / 0.5);
}

double s_allergy(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g) {
    require_drug(g, c.drug);
    if (p.allergies.empty()) return 1.0;
    const auto edges = g.edges();
    auto reaches_allergy = [&](const std::string& id) {
        for (auto i : g.out_edges(id, Relation::cross_reactive)) {
            if (p.allergies.contains(edges[i].dst)) return true;
        }
        return false;
    };
    if (reaches_allergy(c.drug)) return 0.0;
    for (auto i : g.out_edges(c.drug, Relation::member_of)) {
        if (reaches_allergy(edges[i].dst)) return 0.0;
    }
    return 1.0;
}

double s_interaction(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g) {
    require_drug(g, c.drug);
    return 1.0 - interactions(c, p, g).max_severity;
}

SafetyReport safety_score(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g,
                          const SafetyWeights& w) {
    SafetyReport r;
    r.s_dose = s_dose(c, p, g);
    r.s_allergy = s_allergy(c, p, g);
    r.s_interaction = s_interaction(c, p, g);
    r.s_safety = w.w_dose() * r.s_dose + w.w_allergy() * r.s_allergy + w.w_interaction() * r.s_interaction;
    r.weights = w;
    return r;
}

std::vector<Violation> hard_rule_check(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g) {
    require_drug(g, c.drug);
    std::vector<Violation> out;
    const auto rule = dose_rule_for(g, c.drug, p.age_months);
    if (s_allergy(c, p, g) == 0.0) out.push_back(Violation::AllergyConflict);
    if (rule && c.dose_mg_per_kg_day * p.weight_kg > rule->abs_max_mg_day) out.push_back(Violation::AbsoluteDoseExceeded);
    if (!rule) out.push_back(Violation::NoDoseRuleForAge);
    const auto edges = g.edges();
    for (auto i : g.out_edges(c.drug, Relation::contraindicated_in)) {
        if (p.comorbidities.contains(edges[i].dst)) {
            out.push_back(Violation::ComorbidityContraindication);
            break;
        }
    }
    if (rule && (c.frequency_per_day < rule->freq_min_per_day || c.frequency_per_day > rule->freq_max_per_day)) {
        out.push_back(Violation::FrequencyOutOfRange);
    }
    if (rule && (c.duration_days < rule->duration_min_days || c.duration_days > rule->duration_max_days)) {
        out.push_back(Violation::DurationOutOfRange);
    }
    return out;
}

ClassifierFeatures classifier_features(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g) {
    const auto stats = interactions(c, p, g);
    double position = 0.0;
    if (const auto rule = dose_rule_for(g, c.drug, p.age_months)) {
        const double half = 0.5 * (rule->max_mg_per_kg_day - rule->min_mg_per_kg_day);
        const double offset = c.dose_mg_per_kg_day - rule->midpoint();
        position = half > 0.0 ? std::clamp(offset / half, -1.0, 1.0) : (offset > 0.0 ? 1.0 : offset < 0.0 ? -1.0 : 0.0);
    }
    return {s_dose(c, p, g),
            s_allergy(c, p, g),
            1.0 - stats.max_severity,
            static_cast<double>(p.age_months) / 216.0,
            p.weight_kg / 100.0,
            static_cast<double>(stats.count),
            stats.max_severity,
            position};
}

double SafetyClassifier::unsafe_probability(const ClassifierFeatures& x) const noexcept {
    double z = bias;
    for (std::size_t i = 0; i < kClassifierFeatures; ++i) z += weights[i] * x[i];
    return sigmoid(z);
}

std::vector<LabeledCandidate> generate_classifier_examples(const KnowledgeGraph& graph, std::size_t n,
                                                           std::uint64_t seed) {
    std::vector<const KGNode*> drugs;
    for (const KGNode* d : graph.nodes_of_kind(NodeKind::Drug)) {
        if (!graph.dose_rules(d->id).empty()) drugs.push_back(d);
    }
    const auto allergies = graph.nodes_of_kind(NodeKind::AllergyClass);
    std::vector<const KGNode*> comorbidities;
    for (const KGNode* c : graph.nodes_of_kind(NodeKind::Condition)) {
        if (as_text(c->attrs, "category").value_or("") == "comorbidity") comorbidities.push_back(c);
    }
    if (drugs.empty()) throw ConfigError("graph has no drug with a dose rule");

    Rng rng(seed);
    std::vector<LabeledCandidate> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        LabeledCandidate ex;
        auto& p = ex.profile;
        p.age_months = rng.chance(0.08) ? rng.between(0, 23) : rng.between(24, kMaxPediatricAgeMonths);
        p.weight_kg = std::clamp(typical_weight_kg(p.age_months) * rng.uniform(0.8, 1.25), 1.5, 149.0);
        if (!allergies.empty() && rng.chance(0.3)) {
            p.allergies.insert(allergies[rng.index(allergies.size())]->id);
            if (rng.chance(0.1)) p.allergies.insert(allergies[rng.index(allergies.size())]->id);
        }
        const KGNode* drug = drugs[rng.index(drugs.size())];
        if (rng.chance(0.3)) {
            const std::size_t meds = 1 + rng.index(2);
            for (std::size_t m = 0; m < meds; ++m) {
                const KGNode* med = drugs[rng.index(drugs.size())];
                if (med != drug) p.current_medications.insert(med->id);
            }
        }
        if (!comorbidities.empty() && rng.chance(0.05)) {
            p.comorbidities.insert(comorbidities[rng.index(comorbidities.size())]->id);
        }

        auto& c = ex.candidate;
        c.drug = drug->id;
        const auto rule = nearest_dose_rule(graph, drug->id, p.age_months);
        const double u = rng.uniform();
        if (u < 0.6) {
            c.dose_mg_per_kg_day = rng.uniform(rule->min_mg_per_kg_day, rule->max_mg_per_kg_day);
        } else if (u < 0.75) {
            c.dose_mg_per_kg_day = rule->min_mg_per_kg_day * rng.uniform(0.4, 1.0);
        } else {
            // gross overdose: above the band and past the daily cap
            const double floor = std::max(rule->max_mg_per_kg_day, rule->abs_max_mg_day / p.weight_kg);
            c.dose_mg_per_kg_day = floor * rng.uniform(1.05, 1.8);
        }
        c.frequency_per_day = rng.between(rule->freq_min_per_day, rule->freq_max_per_day);
        c.duration_days = rng.between(rule->duration_min_days, rule->duration_max_days);
        ex.unsafe = !hard_rule_check(c, p, graph).empty();
        out.push_back(std::move(ex));
    }
    return out;
}

double logistic_loss(const SafetyClassifier& model, std::span<const ClassifierFeatures> x, std::span<const int> y,
                     std::array<double, kClassifierFeatures + 1>* gradient) {
    if (gradient != nullptr) gradient->fill(0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double z = model.bias;
        for (std::size_t f = 0; f < kClassifierFeatures; ++f) z += model.weights[f] * x[i][f];
        // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
        total += softplus(z) - static_cast<double>(y[i]) * z;
        if (gradient != nullptr) {
            const double r = sigmoid(z) - static_cast<double>(y[i]);
            for (std::size_t f = 0; f < kClassifierFeatures; ++f) (*gradient)[f] += r * x[i][f];
            (*gradient)[kClassifierFeatures] += r;
        }
    }
    const double n = x.empty() ? 1.0 : static_cast<double>(x.size());
    if (gradient != nullptr) {
        for (auto& v : *gradient) v /= n;
    }
    return total / n;
}

ClassifierTrainResult train_safety_classifier(std::span<const LabeledCandidate> examples, const KnowledgeGraph& graph,
                                              std::uint64_t seed, const ClassifierTrainOptions& options) {
    const auto positives = std::count_if(examples.begin(), examples.end(), [](const auto& e) { return e.unsafe; });
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(examples.size())) throw DegenerateLabels();

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<ClassifierFeatures> x;
    std::vector<int> y;
    for (auto i : order) {
        x.push_back(classifier_features(examples[i].candidate, examples[i].profile, graph));
        y.push_back(examples[i].unsafe ? 1 : 0);
    }

    ClassifierTrainResult result;
    std::array<double, kClassifierFeatures + 1> grad{};
    for (std::size_t epoch = 0; epoch <= options.epochs; ++epoch) {
        result.epoch_loss.push_back(logistic_loss(result.classifier, x, y, &grad));
        if (epoch == options.epochs) break;
        for (std::size_t f = 0; f < kClassifierFeatures; ++f) result.classifier.weights[f] -= options.learning_rate * grad[f];
        result.classifier.bias -= options.learning_rate * grad[kClassifierFeatures];
    }
    return result;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] != 0) {
                rank_sum += avg_rank;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = idx.size() - pos;
    if (pos == 0 || neg == 0) return 0.5;
    const double p = static_cast<double>(pos);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

SafetyReport validate(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g,
                      const SafetyWeights& w, const SafetyClassifier& classifier) {
    SafetyReport r = safety_score(c, p, g, w);
    r.hard_violations = hard_rule_check(c, p, g);
    r.classifier_unsafe_prob = classifier.unsafe_probability(classifier_features(c, p, g));
    if (!r.hard_violations.empty()) {
        r.verdict = Verdict::RejectHardRule;
    } else if (r.classifier_unsafe_prob >= kClassifierThreshold) {
        r.verdict = Verdict::RejectClassifier;
    } else if (r.s_safety < w.tau()) {
        r.verdict = Verdict::RejectThreshold;
    } else {
        r.verdict = Verdict::Pass;
    }
    return r;
}

SafetyClassifier default_classifier(const KnowledgeGraph& graph) {
    const auto examples = generate_classifier_examples(graph, 2000, 7);
    return train_safety_classifier(examples, graph, 7).classifier;
}

} // namespace kgrx

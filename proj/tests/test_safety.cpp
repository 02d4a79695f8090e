#include "support.hpp"
#include "oracles.hpp"
#include "kgrx/kg_synth.hpp"
#include "kgrx/rng.hpp"
#include "kgrx/safety.hpp"

#include <doctest.h>

#include <cmath>

using namespace kgrx;
using test::fixture_graph;
using test::mini_graph;

namespace {

AntibioticCandidate cand(std::string drug, double dose, std::int64_t freq = 2, std::int64_t days = 7) {
    AntibioticCandidate c;
    c.drug = std::move(drug);
    c.dose_mg_per_kg_day = dose;
    c.frequency_per_day = freq;
    c.duration_days = days;
    return c;
}

PatientProfile child(double weight = 18.0, std::int64_t age = 60) {
    PatientProfile p;
    p.age_months = age;
    p.weight_kg = weight;
    return p;
}

struct GridCase {
    AntibioticCandidate c;
    PatientProfile p;
};

GridCase random_case(Rng& rng, const KnowledgeGraph& g) {
    const auto drugs = g.nodes_of_kind(NodeKind::Drug);
    const auto allergies = g.nodes_of_kind(NodeKind::AllergyClass);
    const auto conditions = g.nodes_of_kind(NodeKind::Condition);
    GridCase gc;
    gc.c = cand(rng.pick(drugs)->id, 0.5 * static_cast<double>(rng.between(0, 240)), rng.between(1, 5),
                rng.between(1, 15));
    gc.p = child(rng.uniform(2.0, 120.0), rng.between(0, kMaxPediatricAgeMonths));
    if (!allergies.empty() && rng.chance(0.3)) gc.p.allergies.insert(rng.pick(allergies)->id);
    if (rng.chance(0.3)) gc.p.current_medications.insert(rng.pick(drugs)->id);
    if (!conditions.empty() && rng.chance(0.3)) gc.p.comorbidities.insert(rng.pick(conditions)->id);
    return gc;
}

KnowledgeGraph with_severity(const KnowledgeGraph& g, std::size_t edge, double severity) {
    std::vector<KGNode> nodes(g.nodes().begin(), g.nodes().end());
    std::vector<KGEdge> edges(g.edges().begin(), g.edges().end());
    edges[edge].attrs["severity"] = severity;
    return KnowledgeGraph::build(std::move(nodes), std::move(edges));
}

} // namespace

TEST_CASE("dose score examples") {
    const auto& g = mini_graph();
    CHECK(s_dose(cand("AMX", 50), child(), g) == 1.0);
    CHECK(s_dose(cand("AMX", 40), child(), g) == 1.0);
    CHECK(s_dose(cand("AMX", 90), child(), g) == 1.0);
    CHECK(s_dose(cand("AMX", 20), child(), g) == 0.0);
    CHECK(s_dose(cand("AMX", 36), child(), g) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(s_dose(cand("AMX", 99), child(), g) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(s_dose(cand("AMX", 50), child(7.5, 6), g) == 0.0);
    CHECK_THROWS_AS(s_dose(cand("penicillins", 50), child(), g), KindMismatch);
    CHECK_THROWS_AS(s_dose(cand("nope", 50), child(), g), UnknownNode);
}

TEST_CASE("allergy score examples") {
    const auto& g = mini_graph();
    auto p = child();
    CHECK(s_allergy(cand("AMX", 50), p, g) == 1.0);
    p.allergies = {"penicillin_allergy"};
    CHECK(s_allergy(cand("AMX", 50), p, g) == 0.0);
    CHECK(s_allergy(cand("AMC", 30), p, g) == 0.0);
    CHECK(s_allergy(cand("CLI", 20), p, g) == 1.0);
}

TEST_CASE("interaction score examples") {
    const auto& g = mini_graph();
    auto p = child();
    CHECK(s_interaction(cand("AZI", 10), p, g) == 1.0);
    p.current_medications = {"CLI"};
    CHECK(s_interaction(cand("AZI", 10), p, g) == doctest::Approx(0.7).epsilon(1e-12));
    p.current_medications = {"AZI", "AMC"};
    CHECK(s_interaction(cand("CLI", 20), p, g) == 1.0 - 0.9);
}

TEST_CASE("weighted safety examples") {
    const auto& g = mini_graph();
    auto p = child();
    CHECK(safety_score(cand("AMX", 50), p, g, SafetyWeights{}).s_safety == doctest::Approx(1.0).epsilon(1e-15));
    p.allergies = {"penicillin_allergy"};
    CHECK(safety_score(cand("AMX", 50), p, g, SafetyWeights{}).s_safety == doctest::Approx(0.6).epsilon(1e-15));
    const SafetyWeights dose_only(1.0, 0.0, 0.0, 0.8);
    CHECK(safety_score(cand("AMX", 36), child(), g, dose_only).s_safety == s_dose(cand("AMX", 36), child(), g));
}

TEST_CASE("safety weights are validated") {
    CHECK_THROWS_AS(SafetyWeights(0.5, 0.5, 0.5, 0.8), ConfigError);
    CHECK_THROWS_AS(SafetyWeights(0.4, 0.4, 0.2, 1.5), ConfigError);
    CHECK_THROWS_AS(SafetyWeights(-0.2, 1.0, 0.2, 0.8), ConfigError);
    CHECK_NOTHROW(SafetyWeights(0.2, 0.3, 0.5, 0.0));
    const SafetyWeights d;
    CHECK(d.w_dose() == 0.4);
    CHECK(d.w_allergy() == 0.4);
    CHECK(d.w_interaction() == 0.2);
    CHECK(d.tau() == 0.8);
}

TEST_CASE("hard rule examples") {
    const auto& g = mini_graph();
    CHECK(hard_rule_check(cand("AMX", 80), child(40.0), g) ==
          std::vector<Violation>{Violation::AbsoluteDoseExceeded});
    CHECK(hard_rule_check(cand("AMX", 50), child(), g).empty());
    CHECK(hard_rule_check(cand("AMX", 50), child(7.5, 6), g) == std::vector<Violation>{Violation::NoDoseRuleForAge});
    auto allergic = child(40.0);
    allergic.allergies = {"penicillin_allergy"};
    CHECK(hard_rule_check(cand("AMX", 80), allergic, g) ==
          std::vector<Violation>{Violation::AllergyConflict, Violation::AbsoluteDoseExceeded});
    CHECK(hard_rule_check(cand("AMX", 50, 5, 7), child(), g) == std::vector<Violation>{Violation::FrequencyOutOfRange});
    CHECK(hard_rule_check(cand("AMX", 50, 2, 30), child(), g) == std::vector<Violation>{Violation::DurationOutOfRange});
}

TEST_CASE("comorbidity contraindication") {
    auto p = child(20.0, 100);
    p.comorbidities = {"long_qt_syndrome"};
    const auto rule = dose_rule_for(fixture_graph(), "AZI", p.age_months);
    REQUIRE(rule.has_value());
    const auto c = cand("AZI", rule->midpoint(), rule->freq_min_per_day, rule->duration_min_days);
    CHECK(hard_rule_check(c, p, fixture_graph()) == std::vector<Violation>{Violation::ComorbidityContraindication});
}

TEST_CASE("hard rules agree with brute force on a random grid") {
    Rng rng(61);
    std::size_t flagged = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto gc = random_case(rng, fixture_graph());
        const auto expected = oracle::hard_rules(gc.c, gc.p, fixture_graph());
        CHECK(hard_rule_check(gc.c, gc.p, fixture_graph()) == expected);
        flagged += expected.empty() ? 0 : 1;
    }
    CHECK(flagged > 1000);
}

TEST_CASE("validation never passes a flagged candidate") {
    Rng rng(67);
    for (int trial = 0; trial < 10000; ++trial) {
        const auto gc = random_case(rng, fixture_graph());
        const auto rep = validate(gc.c, gc.p, fixture_graph(), SafetyWeights{}, test::fixture_classifier());
        REQUIRE(rep.verdict.has_value());
        if (!oracle::hard_rules(gc.c, gc.p, fixture_graph()).empty()) {
            CHECK(*rep.verdict == Verdict::RejectHardRule);
        }
        if (*rep.verdict == Verdict::Pass) {
            CHECK(rep.hard_violations.empty());
            CHECK(rep.s_safety >= SafetyWeights{}.tau());
            CHECK(rep.classifier_unsafe_prob < kClassifierThreshold);
        }
    }
}

TEST_CASE("component scores agree with brute force") {
    Rng rng(71);
    for (int trial = 0; trial < 3000; ++trial) {
        const auto gc = random_case(rng, fixture_graph());
        const auto rep = safety_score(gc.c, gc.p, fixture_graph(), SafetyWeights{});
        CHECK(rep.s_dose == doctest::Approx(oracle::s_dose(gc.c, gc.p, fixture_graph())).epsilon(1e-12));
        CHECK(rep.s_interaction == oracle::s_interaction(gc.c, gc.p, fixture_graph()));
        CHECK(rep.s_safety == doctest::Approx(oracle::s_safety(gc.c, gc.p, fixture_graph(), SafetyWeights{})).epsilon(1e-12));
    }
}

TEST_CASE("weighted score is exactly the weighted sum") {
    Rng rng(73);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto gc = random_case(rng, fixture_graph());
        const double a = rng.uniform(), b = rng.uniform() * (1.0 - a);
        const SafetyWeights w(a, b, 1.0 - a - b, rng.uniform());
        const auto r = safety_score(gc.c, gc.p, fixture_graph(), w);
        CHECK(r.s_safety == w.w_dose() * r.s_dose + w.w_allergy() * r.s_allergy + w.w_interaction() * r.s_interaction);
        CHECK(r.s_safety >= 0.0);
        CHECK(r.s_safety <= 1.0 + 1e-12);
    }
}

TEST_CASE("adding an allergy never raises the allergy or total score") {
    Rng rng(79);
    const auto allergies = fixture_graph().nodes_of_kind(NodeKind::AllergyClass);
    for (int trial = 0; trial < 1000; ++trial) {
        auto gc = random_case(rng, fixture_graph());
        const auto before = safety_score(gc.c, gc.p, fixture_graph(), SafetyWeights{});
        gc.p.allergies.insert(rng.pick(allergies)->id);
        const auto after = safety_score(gc.c, gc.p, fixture_graph(), SafetyWeights{});
        CHECK(after.s_allergy <= before.s_allergy);
        CHECK(after.s_safety <= before.s_safety);
    }
}

TEST_CASE("raising an interaction severity never raises the interaction score") {
    Rng rng(83);
    std::size_t checked = 0;
    for (int trial = 0; checked < 1000 && trial < 20000; ++trial) {
        const auto g = random_small_graph(rng, 12 + rng.index(20));
        std::vector<std::size_t> interactions;
        for (std::size_t i = 0; i < g.edge_count(); ++i) {
            if (g.edges()[i].rel == Relation::interacts_with) interactions.push_back(i);
        }
        if (interactions.empty()) continue;
        const std::size_t e = rng.pick(interactions);
        const auto& edge = g.edges()[e];
        const double old = as_number(edge.attrs, "severity").value_or(0.0);
        const auto raised = with_severity(g, e, old + (1.0 - old) * rng.uniform());
        auto p = child();
        p.current_medications = {edge.dst};
        if (rng.chance(0.5)) p.current_medications.insert(rng.pick(g.nodes_of_kind(NodeKind::Drug))->id);
        const auto c = cand(edge.src, 10.0);
        CHECK(s_interaction(c, p, raised) <= s_interaction(c, p, g));
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("moving the dose toward the band never lowers the dose score") {
    Rng rng(89);
    std::size_t checked = 0;
    while (checked < 1000) {
        auto gc = random_case(rng, fixture_graph());
        const auto rule = dose_rule_for(fixture_graph(), gc.c.drug, gc.p.age_months);
        if (!rule) continue;
        const double target = rng.uniform(rule->min_mg_per_kg_day, rule->max_mg_per_kg_day);
        const double before = s_dose(gc.c, gc.p, fixture_graph());
        gc.c.dose_mg_per_kg_day += (target - gc.c.dose_mg_per_kg_day) * rng.uniform();
        CHECK(s_dose(gc.c, gc.p, fixture_graph()) >= before);
        ++checked;
    }
}

TEST_CASE("threshold rejection implies a score below tau") {
    Rng rng(97);
    const SafetyClassifier never_unsafe{{}, -50.0};
    std::size_t thresholded = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        const auto gc = random_case(rng, fixture_graph());
        const double a = rng.uniform(), b = rng.uniform() * (1.0 - a);
        const SafetyWeights w(a, b, 1.0 - a - b, rng.uniform());
        const auto r = validate(gc.c, gc.p, fixture_graph(), w, never_unsafe);
        if (*r.verdict == Verdict::RejectThreshold) {
            ++thresholded;
            CHECK(r.s_safety < w.tau());
        }
        if (*r.verdict == Verdict::Pass) CHECK(r.s_safety >= w.tau());
    }
    CHECK(thresholded > 0);
}

TEST_CASE("validation examples") {
    const auto& g = mini_graph();
    const auto& clf = test::mini_classifier();
    auto allergic = child();
    allergic.allergies = {"penicillin_allergy"};
    const auto a = validate(cand("AMX", 50), allergic, g, SafetyWeights{}, clf);
    CHECK(*a.verdict == Verdict::RejectHardRule);
    CHECK(a.hard_violations == std::vector<Violation>{Violation::AllergyConflict});
    CHECK(a.s_safety == doctest::Approx(0.6).epsilon(1e-15));

    const auto ok = validate(cand("AMX", 50), child(), g, SafetyWeights{}, clf);
    CHECK(*ok.verdict == Verdict::Pass);
    CHECK(ok.s_safety == doctest::Approx(1.0).epsilon(1e-15));

    const auto low = validate(cand("AMX", 36), child(), g, SafetyWeights{}, clf);
    CHECK(low.s_safety == doctest::Approx(0.92).epsilon(1e-12));
    CHECK(low.hard_violations.empty());
    CHECK((*low.verdict == Verdict::Pass || *low.verdict == Verdict::RejectClassifier));
}

TEST_CASE("validation is deterministic") {
    const auto a = validate(cand("AMX", 50), child(), mini_graph(), SafetyWeights{}, test::mini_classifier());
    const auto b = validate(cand("AMX", 50), child(), mini_graph(), SafetyWeights{}, test::mini_classifier());
    CHECK(a == b);
}

TEST_CASE("classifier reaches a high held-out AUC") {
    const auto train = generate_classifier_examples(fixture_graph(), 2000, 7);
    const auto held = generate_classifier_examples(fixture_graph(), 1000, 8);
    const auto res = train_safety_classifier(train, fixture_graph(), 7);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& ex : held) {
        scores.push_back(res.classifier.unsafe_probability(classifier_features(ex.candidate, ex.profile, fixture_graph())));
        labels.push_back(ex.unsafe ? 1 : 0);
    }
    CHECK(roc_auc(scores, labels) >= 0.95);
    CHECK(res.epoch_loss.back() < res.epoch_loss.front());
    CHECK(res.classifier == test::fixture_classifier());
}

TEST_CASE("single-class training data is rejected") {
    auto examples = generate_classifier_examples(mini_graph(), 200, 3);
    for (auto& ex : examples) ex.unsafe = false;
    CHECK_THROWS_AS(train_safety_classifier(examples, mini_graph(), 1), DegenerateLabels);
}

TEST_CASE("classifier gradient matches finite differences") {
    Rng rng(101);
    const auto examples = generate_classifier_examples(fixture_graph(), 300, 11);
    std::vector<ClassifierFeatures> x;
    std::vector<int> y;
    for (const auto& ex : examples) {
        x.push_back(classifier_features(ex.candidate, ex.profile, fixture_graph()));
        y.push_back(ex.unsafe ? 1 : 0);
    }
    for (int trial = 0; trial < 20; ++trial) {
        SafetyClassifier m;
        for (auto& w : m.weights) w = rng.uniform(-2.0, 2.0);
        m.bias = rng.uniform(-1.0, 1.0);
        std::array<double, kClassifierFeatures + 1> grad{};
        logistic_loss(m, x, y, &grad);
        for (std::size_t p = 0; p <= kClassifierFeatures; ++p) {
            double& param = p < kClassifierFeatures ? m.weights[p] : m.bias;
            const double saved = param, h = 1e-6;
            param = saved + h;
            const double up = logistic_loss(m, x, y);
            param = saved - h;
            const double down = logistic_loss(m, x, y);
            param = saved;
            const double numeric = (up - down) / (2.0 * h);
            CHECK(std::abs(numeric - grad[p]) <= 1e-6 * std::max(1.0, std::abs(numeric)));
        }
    }
}

TEST_CASE("roc auc hand examples") {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> l{0, 0, 1, 1};
    CHECK(roc_auc(s, l) == 0.75);
    const std::vector<double> tied{0.5, 0.5, 0.5, 0.5};
    CHECK(roc_auc(tied, l) == 0.5);
    const std::vector<double> perfect{0.1, 0.2, 0.8, 0.9};
    CHECK(roc_auc(perfect, l) == 1.0);
}

TEST_CASE("verdict and violation names round trip") {
    for (auto v : {Violation::AllergyConflict, Violation::AbsoluteDoseExceeded, Violation::NoDoseRuleForAge,
                   Violation::ComorbidityContraindication, Violation::FrequencyOutOfRange,
                   Violation::DurationOutOfRange}) {
        CHECK(parse_violation(to_string(v)) == v);
    }
    for (auto v : {Verdict::Pass, Verdict::RejectHardRule, Verdict::RejectClassifier, Verdict::RejectThreshold}) {
        CHECK(parse_verdict(to_string(v)) == v);
    }
    CHECK_FALSE(parse_verdict("Maybe").has_value());
}

#include "support.hpp"
#include "oracles.hpp"
#include "kgrx/recommender.hpp"
#include "kgrx/record_parser.hpp"
#include "kgrx/retrieval.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace kgrx;
using test::fixture_graph;
using test::mini_graph;

namespace {

const Retriever& mini_retriever() {
    static const Retriever r(mini_graph());
    return r;
}

ClinicalRecord with_allergy(ClinicalRecord r, std::string allergy) {
    r.profile.allergies.insert(std::move(allergy));
    return r;
}

Recommendation run(const ClinicalRecord& r, const RecommendConfig& cfg = {}) {
    const KgTemplateGenerator gen(mini_retriever());
    return recommend(r, mini_retriever(), cfg, test::mini_classifier(), gen);
}

/// Records every call and forwards to an inner generator.
class RecordingGenerator final : public CandidateGenerator {
public:
    explicit RecordingGenerator(const CandidateGenerator& inner) : inner_(&inner) {}
    std::vector<ScoredCandidate> generate(const StructuredFindings& f, const PatientProfile& p,
                                          const RetrievalContext& c, const std::set<std::string>& exclusions,
                                          std::size_t n) const override {
        calls.push_back(exclusions);
        auto out = inner_->generate(f, p, c, exclusions, n);
        for (const auto& s : out) proposed.push_back(s.candidate.drug);
        return out;
    }
    mutable std::vector<std::set<std::string>> calls;
    mutable std::vector<std::string> proposed;

private:
    const CandidateGenerator* inner_;
};

/// Always proposes a fresh unsafe drug name; never repeats.
class EndlessUnsafeGenerator final : public CandidateGenerator {
public:
    std::vector<ScoredCandidate> generate(const StructuredFindings&, const PatientProfile&, const RetrievalContext&,
                                          const std::set<std::string>& exclusions, std::size_t n) const override {
        std::vector<ScoredCandidate> out;
        for (const char* d : {"AMX", "AMC", "CLI", "AZI"}) {
            if (out.size() == n) break;
            if (exclusions.contains(d)) continue;
            AntibioticCandidate c;
            c.drug = d;
            c.dose_mg_per_kg_day = 500.0;
            c.frequency_per_day = 2;
            c.duration_days = 7;
            out.push_back({c, 1.0});
        }
        return out;
    }
};

/// Ignores exclusions.
class StubbornGenerator final : public CandidateGenerator {
public:
    std::vector<ScoredCandidate> generate(const StructuredFindings&, const PatientProfile&, const RetrievalContext&,
                                          const std::set<std::string>&, std::size_t) const override {
        AntibioticCandidate c;
        c.drug = "AMX";
        c.dose_mg_per_kg_day = 500.0;
        c.frequency_per_day = 2;
        c.duration_days = 7;
        return {{c, 1.0}};
    }
};

} // namespace

TEST_CASE("generator ranks first-line amoxicillin first for R1") {
    const auto& r = test::mini_record("R1");
    const auto f = extract(r, mini_graph());
    const auto ctx = mini_retriever().build_context(r, FusionGate(0.5), 10, 3);
    const KgTemplateGenerator gen(mini_retriever());
    const auto out = gen.generate(f, r.profile, ctx, {}, 5);
    REQUIRE(out.size() >= 2);
    CHECK(out[0].candidate.drug == "AMX");
    CHECK(out[1].candidate.drug == "CLI");
    const auto excluded = gen.generate(f, r.profile, ctx, {"AMX"}, 5);
    REQUIRE_FALSE(excluded.empty());
    CHECK(excluded[0].candidate.drug == "CLI");
    for (const auto& s : excluded) CHECK(s.candidate.drug != "AMX");
    CHECK(gen.generate(f, r.profile, ctx, {}, 1).size() == 1);
    CHECK_THROWS_AS(gen.generate(StructuredFindings{}, r.profile, ctx, {}, 5), NoDiagnosis);
}

TEST_CASE("generator proposals are valid graph drugs with evidence") {
    const auto& r = test::mini_record("R1");
    const auto f = extract(r, mini_graph());
    const auto ctx = mini_retriever().build_context(r, FusionGate(0.5), 10, 3);
    for (const auto& s : KgTemplateGenerator(mini_retriever()).generate(f, r.profile, ctx, {}, 5)) {
        CHECK(mini_graph().node(s.candidate.drug).kind == NodeKind::Drug);
        CHECK_FALSE(s.candidate.rationale.empty());
        for (const auto& id : s.candidate.evidence_node_ids) CHECK(mini_graph().contains(id));
    }
}

TEST_CASE("R1 emits amoxicillin on the first attempt") {
    const auto rec = run(test::mini_record("R1"));
    REQUIRE_FALSE(rec.abstained());
    CHECK(rec.emitted->candidate.drug == "AMX");
    CHECK(*rec.emitted->report.verdict == Verdict::Pass);
    CHECK(rec.attempts == 1);
    CHECK(rec.rejected.empty());
    CHECK(rec.summary ==
          "Diagnosis: periapical abscess at primary mandibular right second molar, moderate. Findings: swelling, "
          "pain, periapical radiolucency. Recommendation: amoxicillin 65 mg/kg/day in 2 doses daily for 5 days.");
}

TEST_CASE("penicillin allergy switches to clindamycin on the second attempt") {
    const auto rec = run(with_allergy(test::mini_record("R1"), "penicillin_allergy"));
    REQUIRE_FALSE(rec.abstained());
    CHECK(rec.emitted->candidate.drug == "CLI");
    CHECK(rec.attempts == 2);
    REQUIRE(rec.rejected.size() == 1);
    CHECK(rec.rejected[0].candidate.drug == "AMX");
    CHECK(rec.rejected[0].report.hard_violations == std::vector<Violation>{Violation::AllergyConflict});
}

TEST_CASE("all-conflict profile abstains and lists every rejection") {
    const auto rec = run(test::mini_record("R4"));
    CHECK(rec.abstained());
    CHECK(rec.abstention == AbstentionReason::AllCandidatesRejected);
    REQUIRE(rec.rejected.size() == 2);
    CHECK(rec.rejected[0].candidate.drug == "AMX");
    CHECK(rec.rejected[1].candidate.drug == "CLI");
    for (const auto& v : rec.rejected) CHECK(*v.report.verdict != Verdict::Pass);
    CHECK(rec.summary.find("No safe antibiotic option") != std::string::npos);
    CHECK(rec.summary.find("allergy conflict") != std::string::npos);
}

TEST_CASE("infant without a dose rule abstains") {
    const auto rec = run(test::mini_record("R3"));
    CHECK(rec.abstention == AbstentionReason::AllCandidatesRejected);
    for (const auto& v : rec.rejected) {
        CHECK(v.report.hard_violations == std::vector<Violation>{Violation::NoDoseRuleForAge});
    }
}

TEST_CASE("no diagnosis abstains without attempts") {
    const auto rec = run(test::mini_record("R2"));
    CHECK(rec.abstention == AbstentionReason::NoDiagnosis);
    CHECK(rec.attempts == 0);
    CHECK(rec.summary.find("no diagnosis") != std::string::npos);
}

TEST_CASE("exclusions only grow and are respected") {
    const KgTemplateGenerator inner(mini_retriever());
    const RecordingGenerator gen(inner);
    recommend(test::mini_record("R4"), mini_retriever(), RecommendConfig{}, test::mini_classifier(), gen);
    REQUIRE_FALSE(gen.calls.empty());
    for (std::size_t i = 1; i < gen.calls.size(); ++i) {
        CHECK(std::includes(gen.calls[i].begin(), gen.calls[i].end(), gen.calls[i - 1].begin(),
                            gen.calls[i - 1].end()));
    }
    std::set<std::string> seen;
    for (const auto& d : gen.proposed) CHECK(seen.insert(d).second);
}

TEST_CASE("attempts are bounded by rounds times batch size") {
    const EndlessUnsafeGenerator gen;
    for (std::size_t rounds : {1u, 2u, 3u}) {
        for (std::size_t n : {1u, 2u, 5u}) {
            RecommendConfig cfg;
            cfg.max_rounds = rounds;
            cfg.candidates_per_round = n;
            const auto rec = recommend(test::mini_record("R1"), mini_retriever(), cfg, test::mini_classifier(), gen);
            CHECK(rec.abstained());
            CHECK(rec.attempts <= rounds * n);
            CHECK(rec.attempts == std::min<std::size_t>(rounds * n, 4));
        }
    }
}

TEST_CASE("a generator that ignores exclusions is caught") {
    const StubbornGenerator gen;
    CHECK_THROWS_AS(recommend(test::mini_record("R1"), mini_retriever(), RecommendConfig{}, test::mini_classifier(), gen),
                    std::logic_error);
}

TEST_CASE("every emission re-validates as a pass") {
    const Retriever retriever(fixture_graph());
    const KgTemplateGenerator gen(retriever);
    std::size_t emitted = 0;
    for (const auto& r : test::fixture_cohort().records) {
        const auto rec = recommend(r, retriever, RecommendConfig{}, test::fixture_classifier(), gen);
        if (rec.abstained()) continue;
        ++emitted;
        const auto again = validate(rec.emitted->candidate, r.profile, fixture_graph(), SafetyWeights{},
                                    test::fixture_classifier());
        CHECK(*again.verdict == Verdict::Pass);
        CHECK(oracle::hard_rules(rec.emitted->candidate, r.profile, fixture_graph()).empty());
        CHECK(again.s_safety >= SafetyWeights{}.tau());
    }
    CHECK(emitted > 100);
}

TEST_CASE("bypassing safety emits the raw top candidate") {
    RecommendConfig cfg;
    cfg.bypass_safety = true;
    const auto rec = run(with_allergy(test::mini_record("R1"), "penicillin_allergy"), cfg);
    REQUIRE_FALSE(rec.abstained());
    CHECK(rec.safety_bypassed);
    CHECK(rec.emitted->candidate.drug == "AMX");
}

TEST_CASE("disabling guideline retrieval leaves no hits") {
    RecommendConfig cfg;
    cfg.use_rag = false;
    const auto rec = run(test::mini_record("R1"), cfg);
    CHECK(rec.guideline_hits.empty());
    CHECK(rec.emitted->candidate.drug == "AMX");
}

TEST_CASE("recommendation loss examples") {
    const auto& g = mini_graph();
    const SafetyWeights w;
    PatientProfile p;
    p.age_months = 60;
    p.weight_kg = 18.0;
    AntibioticCandidate gold;
    gold.drug = "AMX";
    gold.dose_mg_per_kg_day = 60;
    gold.frequency_per_day = 2;
    gold.duration_days = 7;
    AntibioticCandidate other = gold;
    other.drug = "CLI";
    other.dose_mg_per_kg_day = 20;

    const std::vector<ScoredCandidate> only{{gold, 3.0}};
    CHECK(rx_loss(gold, only, p, g, w).value == doctest::Approx(0.0).epsilon(1e-15));

    const std::vector<ScoredCandidate> pair{{gold, 1.0}, {other, 1.0}};
    CHECK(rx_loss(gold, pair, p, g, w).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    auto allergic = p;
    allergic.allergies = {"penicillin_allergy"};
    CHECK(rx_loss(gold, pair, allergic, g, w).value == doctest::Approx(std::log(2.0) + 0.4).epsilon(1e-14));

    const std::vector<ScoredCandidate> missing{{other, 1.0}};
    const auto none = rx_loss(gold, missing, p, g, w);
    CHECK_FALSE(none.gold_found);
    CHECK(std::isinf(none.value));

    const std::vector<ScoredCandidate> huge{{gold, 1000.0}, {other, -1000.0}};
    CHECK(std::isfinite(rx_loss(gold, huge, p, g, w).value));
}

TEST_CASE("recommendation loss is nonnegative") {
    Rng rng(103);
    const auto& g = mini_graph();
    for (int trial = 0; trial < 1000; ++trial) {
        PatientProfile p;
        p.age_months = rng.between(24, 143);
        p.weight_kg = rng.uniform(10.0, 40.0);
        if (rng.chance(0.3)) p.allergies.insert("penicillin_allergy");
        std::vector<ScoredCandidate> cands;
        for (const char* d : {"AMX", "AMC", "CLI"}) {
            AntibioticCandidate c;
            c.drug = d;
            c.dose_mg_per_kg_day = rng.uniform(0.0, 100.0);
            c.frequency_per_day = 2;
            c.duration_days = 7;
            cands.push_back({c, rng.uniform(-5.0, 5.0)});
        }
        const auto loss = rx_loss(cands[rng.index(3)].candidate, cands, p, g, SafetyWeights{});
        CHECK(loss.value >= 0.0);
    }
}

TEST_CASE("summary omits an unknown severity") {
    StructuredFindings f;
    f.diagnosis_candidates = {{"periapical_abscess", 1.0}};
    Recommendation rec;
    rec.abstention = AbstentionReason::NoCandidates;
    const auto s = generate_summary(f, rec, mini_graph());
    CHECK(s.rfind("Diagnosis: periapical abscess. Findings: none.", 0) == 0);
}

TEST_CASE("quantities print compactly") {
    CHECK(format_quantity(65.0) == "65");
    CHECK(format_quantity(37.5) == "37.5");
    CHECK(format_quantity(0.1) == "0.1");
}

TEST_CASE("pipeline is deterministic") {
    const auto a = json(run(test::mini_record("R1"))).dump();
    const auto b = json(run(test::mini_record("R1"))).dump();
    CHECK(a == b);
}

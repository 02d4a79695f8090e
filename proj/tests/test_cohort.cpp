#include "support.hpp"
#include "oracles.hpp"
#include "kgrx/cohort.hpp"
#include "kgrx/json_io.hpp"
#include "kgrx/rng.hpp"

#include <doctest.h>

#include <map>
#include <sstream>

using namespace kgrx;
using test::fixture_graph;

namespace {

std::string serialize(const Cohort& c) {
    std::ostringstream out;
    write_records(c.records, out);
    return out.str();
}

} // namespace

TEST_CASE("same seed gives a byte-identical cohort") {
    CohortConfig cfg;
    const auto a = generate_cohort(cfg, fixture_graph());
    const auto b = generate_cohort(cfg, fixture_graph());
    CHECK(a.records.size() == 100);
    CHECK(serialize(a) == serialize(b));
    CHECK(a.splits == b.splits);
    cfg.seed = 43;
    CHECK(serialize(generate_cohort(cfg, fixture_graph())) != serialize(a));
}

TEST_CASE("allergy rate one gives every patient an allergy") {
    CohortConfig cfg;
    cfg.allergy_rate = 1.0;
    for (const auto& r : generate_cohort(cfg, fixture_graph()).records) CHECK_FALSE(r.profile.allergies.empty());
}

TEST_CASE("configuration is validated") {
    CohortConfig cfg;
    cfg.allergy_rate = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.n_records = 0;
    CHECK_THROWS_AS(generate_cohort(cfg, fixture_graph()), ConfigError);
    cfg = {};
    cfg.template_set = "martian";
    CHECK_THROWS_AS(generate_cohort(cfg, fixture_graph()), ConfigError);
    cfg = {};
    cfg.negation_rate = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("records are valid and carry gold") {
    for (const auto& r : test::fixture_cohort().records) {
        CHECK_NOTHROW(validate_record(r));
        CHECK_NOTHROW(validate_profile_ids(r.profile, fixture_graph()));
        REQUIRE(r.gold.has_value());
        CHECK(fixture_graph().node(r.gold->diagnosis).kind == NodeKind::Condition);
        CHECK_FALSE(r.gold->reference_summary.empty());
        for (const auto& id : r.gold->evidence_node_ids) CHECK(fixture_graph().contains(id));
    }
}

TEST_CASE("gold prescriptions pass validation") {
    const auto& clf = test::fixture_classifier();
    std::size_t with_rx = 0;
    for (const auto& r : test::fixture_cohort().records) {
        if (!r.gold->prescription) continue;
        ++with_rx;
        const auto rep = validate(*r.gold->prescription, r.profile, fixture_graph(), SafetyWeights{}, clf);
        CAPTURE(r.record_id);
        CHECK(*rep.verdict == Verdict::Pass);
        CHECK(oracle::hard_rules(*r.gold->prescription, r.profile, fixture_graph()).empty());
    }
    CHECK(with_rx > 200);
}

TEST_CASE("patients never straddle splits") {
    CohortConfig cfg;
    cfg.n_records = 1000;
    const auto c = generate_cohort(cfg, fixture_graph());
    REQUIRE(c.splits.size() == c.records.size());
    std::map<std::string, Split> seen;
    std::size_t repeats = 0;
    for (std::size_t i = 0; i < c.records.size(); ++i) {
        const auto [it, fresh] = seen.emplace(c.records[i].patient_id, c.splits[i]);
        if (!fresh) {
            ++repeats;
            CHECK(it->second == c.splits[i]);
        }
    }
    CHECK(repeats > 0);
    const double train = static_cast<double>(c.select(Split::train).size()) / 1000.0;
    const double dev = static_cast<double>(c.select(Split::dev).size()) / 1000.0;
    CHECK(train == doctest::Approx(0.70).epsilon(0.08));
    CHECK(dev == doctest::Approx(0.15).epsilon(0.3));
    CHECK(c.select(Split::train).size() + c.select(Split::dev).size() + c.select(Split::test).size() == 1000);
}

TEST_CASE("gold prescription helper") {
    Rng rng(5);
    PatientProfile p;
    p.age_months = 60;
    p.weight_kg = 18.0;
    const auto rx = gold_prescription("periapical_abscess", p, fixture_graph(), test::fixture_classifier(), rng);
    REQUIRE(rx.has_value());
    CHECK(fixture_graph().node(rx->drug).kind == NodeKind::Drug);
    PatientProfile infant;
    infant.age_months = 1;
    infant.weight_kg = 4.0;
    for (const auto* a : fixture_graph().nodes_of_kind(NodeKind::AllergyClass)) infant.allergies.insert(a->id);
    CHECK_FALSE(gold_prescription("periapical_abscess", infant, fixture_graph(), test::fixture_classifier(), rng).has_value());
}

TEST_CASE("split names round trip") {
    for (auto s : {Split::train, Split::dev, Split::test}) CHECK(parse_split(to_string(s)) == s);
    CHECK_FALSE(parse_split("holdout").has_value());
}

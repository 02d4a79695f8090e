#include "support.hpp"
#include "oracles.hpp"
#include "kgrx/kg_synth.hpp"
#include "kgrx/record_parser.hpp"
#include "kgrx/rng.hpp"

#include <doctest.h>

using namespace kgrx;
using test::mini_graph;

namespace {

ClinicalRecord record_with(std::string cc, std::string ex = "", std::string rad = "") {
    ClinicalRecord r;
    r.record_id = "t";
    r.chief_complaint = std::move(cc);
    r.exam_notes = std::move(ex);
    r.radiographic_report = std::move(rad);
    r.profile.age_months = 60;
    r.profile.weight_kg = 18.0;
    return r;
}

const EntityMention* find_mention(const StructuredFindings& f, std::string_view id) {
    for (const auto& m : f.mentions) {
        if (m.node_id == id) return &m;
    }
    return nullptr;
}

KnowledgeGraph overlap_graph() {
    return KnowledgeGraph::build(
        {
            {"sym_periapical", NodeKind::Symptom, "periapical", {}, {}},
            {"periapical_abscess", NodeKind::Condition, "periapical abscess", {}, {}},
        },
        {});
}

} // namespace

TEST_CASE("tooth notation resolves against the graph") {
    const auto& g = mini_graph();
    CHECK(resolve_tooth_notation("#85", g).value() == "tooth_85");
    CHECK(g.node("tooth_85").name == "primary mandibular right second molar");
    CHECK_FALSE(resolve_tooth_notation("#99", g).has_value());
    CHECK_FALSE(resolve_tooth_notation("pain", g).has_value());
    CHECK_FALSE(resolve_tooth_notation("#19", g).has_value());
    CHECK_FALSE(resolve_tooth_notation("#8x", g).has_value());
    CHECK(resolve_tooth_notation("#16", test::fixture_graph()).has_value());
    CHECK_FALSE(resolve_tooth_notation("#16", g).has_value());
}

TEST_CASE("negation scope examples") {
    const auto& g = mini_graph();
    auto negated = [&](const std::string& text, std::string_view id) {
        const auto ms = scan_section(text, Section::exam_notes, g);
        for (const auto& m : ms) {
            if (m.node_id == id) return m.negated;
        }
        FAIL("mention not found: " << id);
        return false;
    };
    CHECK(negated("no swelling", "swelling"));
    CHECK_FALSE(negated("swelling, no fever", "swelling"));
    CHECK(negated("swelling, no fever", "fever"));
    CHECK(negated("no pain but swelling", "pain"));
    CHECK_FALSE(negated("no pain but swelling", "swelling"));
    CHECK_FALSE(negated("no fever. swelling", "swelling"));
    CHECK(negated("denies any recent facial swelling", "facial_swelling"));
    CHECK_FALSE(negated("no history of recent dental visits or pain", "pain"));
}

TEST_CASE("negation agrees with a brute-force scope check") {
    const std::vector<std::string> vocab = {"no",     "denies", "without", "absent", "negative", "but",
                                            "however", "pain",  "swelling", "fever",  "tooth",    "mild",
                                            "the",     "and",   ".",        ";",      ",",        "of"};
    const NegationRules rules;
    const std::set<std::string> triggers(rules.triggers.begin(), rules.triggers.end());
    const std::set<std::string> terminators(rules.terminators.begin(), rules.terminators.end());
    Rng rng(29);
    std::size_t negated_count = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::string text;
        const std::size_t len = 1 + rng.index(14);
        for (std::size_t i = 0; i < len; ++i) text += rng.pick(vocab) + " ";
        const auto toks = tokenize(text);
        if (toks.empty()) continue;
        const std::size_t begin = rng.index(toks.size());
        const bool expected = oracle::negated(toks, begin, triggers, terminators, rules.window);
        negated_count += expected ? 1 : 0;
        CAPTURE(text);
        CAPTURE(begin);
        CHECK(detect_negation(toks, begin, begin + 1, rules) == expected);
    }
    CHECK(negated_count > 50);
}

TEST_CASE("fixture record R1 extraction") {
    const auto f = extract(test::mini_record("R1"), mini_graph());
    const auto* swelling = find_mention(f, "swelling");
    const auto* fever = find_mention(f, "fever");
    const auto* tooth = find_mention(f, "tooth_85");
    REQUIRE(swelling != nullptr);
    REQUIRE(fever != nullptr);
    REQUIRE(tooth != nullptr);
    CHECK_FALSE(swelling->negated);
    CHECK(fever->negated);
    CHECK(tooth->surface == "#85");
    CHECK(f.tooth_sites == std::vector<std::string>{"tooth_85"});
    REQUIRE(f.diagnosis_candidates.size() == 2);
    CHECK(f.diagnosis_candidates[0].condition == "periapical_abscess");
    CHECK(f.diagnosis_candidates[0].score == 1.0);
    CHECK(f.diagnosis_candidates[1].condition == "acute_pulpitis");
    CHECK(f.diagnosis_candidates[1].score == doctest::Approx(2.0 / 3.0));
    CHECK(f.severity == Severity::moderate);
}

TEST_CASE("fully negated record has no diagnosis") {
    const auto f = extract(test::mini_record("R2"), mini_graph());
    REQUIRE_FALSE(f.mentions.empty());
    for (const auto& m : f.mentions) CHECK(m.negated);
    CHECK(f.diagnosis_candidates.empty());
    CHECK(f.severity == Severity::unknown);
}

TEST_CASE("severity rubric") {
    const auto& g = mini_graph();
    CHECK(extract(record_with("Swelling and fever."), g).severity == Severity::severe);
    CHECK(extract(record_with("Facial swelling."), g).severity == Severity::severe);
    CHECK(extract(record_with("Pain."), g).severity == Severity::mild);
    CHECK(extract(record_with("Pain. Pain again."), g).severity == Severity::mild);
    CHECK(extract(record_with("Pain and swelling."), g).severity == Severity::moderate);
    CHECK(extract(record_with("Routine visit."), g).severity == Severity::unknown);
}

TEST_CASE("longest match wins over a shorter prefix entry") {
    const auto g = overlap_graph();
    const auto ms = scan_section("periapical abscess noted", Section::exam_notes, g);
    REQUIRE(ms.size() == 1);
    CHECK(ms[0].node_id == "periapical_abscess");
    CHECK(ms[0].begin == 0);
    CHECK(ms[0].end == 18);
}

TEST_CASE("matches do not cross sentence boundaries") {
    const auto g = overlap_graph();
    const auto ms = scan_section("periapical. abscess", Section::exam_notes, g);
    REQUIRE(ms.size() == 1);
    CHECK(ms[0].node_id == "sym_periapical");
}

TEST_CASE("abbreviations feed the lexicon match") {
    const auto ms = scan_section("Periap. rad. seen", Section::radiographic_report, mini_graph());
    REQUIRE(ms.size() == 1);
    CHECK(ms[0].node_id == "periapical_radiolucency");
    CHECK(ms[0].surface == "Periap. rad.");
}

TEST_CASE("synonyms link to their node") {
    const auto ms = scan_section("Edema present", Section::exam_notes, mini_graph());
    REQUIRE(ms.size() == 1);
    CHECK(ms[0].node_id == "swelling");
}

TEST_CASE("mention spans are sound and ids exist on random records") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const auto g = random_small_graph(rng, 12 + rng.index(30));
        const auto r = random_record(rng, g);
        const auto f = extract(r, g);
        for (const auto& m : f.mentions) {
            const std::string& text = r.text(m.section);
            REQUIRE(m.end <= text.size());
            CHECK(text.substr(m.begin, m.end - m.begin) == m.surface);
            REQUIRE(g.contains(m.node_id));
        }
        for (const auto& d : f.diagnosis_candidates) {
            CHECK(g.node(d.condition).kind == NodeKind::Condition);
            CHECK(d.score > 0.0);
            CHECK(d.score <= 1.0);
        }
        for (std::size_t i = 1; i < f.diagnosis_candidates.size(); ++i) {
            const auto& a = f.diagnosis_candidates[i - 1];
            const auto& b = f.diagnosis_candidates[i];
            CHECK((a.score > b.score || (a.score == b.score && a.condition < b.condition)));
        }
    }
}

TEST_CASE("cohort gold spans and extracted spans are sound") {
    const auto& cohort = test::fixture_cohort();
    for (const auto& r : cohort.records) {
        for (const auto& m : r.gold->entities) {
            CHECK(r.text(m.section).substr(m.begin, m.end - m.begin) == m.surface);
        }
        for (const auto& m : extract(r, test::fixture_graph()).mentions) {
            CHECK(r.text(m.section).substr(m.begin, m.end - m.begin) == m.surface);
        }
    }
}

TEST_CASE("extraction is deterministic") {
    const auto& r = test::mini_record("R1");
    CHECK(extract(r, mini_graph()) == extract(r, mini_graph()));
}

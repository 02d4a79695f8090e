#include "kgrx/kg_synth.hpp"

#include "kgrx/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <tuple>

namespace kgrx {

namespace {

constexpr std::array<std::string_view, 16> kSyllables = {"ka", "lo", "mi", "ne", "ru", "ta", "vo", "zi",
                                                         "pe", "sa", "do", "fu", "gi", "ha", "be", "cor"};
constexpr std::array<std::string_view, 12> kFiller = {"the", "patient", "with", "near", "and", "noted",
                                                      "child", "on", "exam", "shows", "mild", "since"};

std::string word(Rng& rng, std::size_t syllables) {
    std::string out;
    for (std::size_t i = 0; i < syllables; ++i) out += rng.pick(kSyllables);
    return out;
}

std::string numbered(const char* prefix, std::size_t i) { return std::string(prefix) + "_" + std::to_string(i); }

/// Collects nodes and edges while keeping the graph invariants: no duplicate
/// edge and interactions stored once.
struct Builder {
    std::vector<KGNode> nodes;
    std::vector<KGEdge> edges;
    std::set<std::tuple<std::string, Relation, std::string>> seen;

    KGNode& add(std::string id, NodeKind kind, std::string name, std::vector<std::string> synonyms = {}) {
        nodes.push_back({std::move(id), kind, std::move(name), std::move(synonyms), {}});
        return nodes.back();
    }
    bool link(const std::string& src, Relation rel, const std::string& dst, Attrs attrs = {}) {
        if (src == dst && rel == Relation::interacts_with) return false;
        if (rel == Relation::interacts_with && seen.contains({dst, rel, src})) return false;
        if (!seen.insert({src, rel, dst}).second) return false;
        edges.push_back({src, rel, dst, std::move(attrs)});
        return true;
    }
};

struct Band {
    std::string id;
    std::int64_t lo, hi;
};

void add_bands(Builder& b, const std::vector<Band>& bands) {
    for (const auto& band : bands) {
        auto& n = b.add(band.id, NodeKind::AgeBand, "age " + std::to_string(band.lo) + " to " + std::to_string(band.hi) + " months");
        n.attrs["min_months"] = band.lo;
        n.attrs["max_months"] = band.hi;
    }
}

void add_dose_rule(Builder& b, Rng& rng, const std::string& drug, const std::string& band) {
    const double lo = static_cast<double>(rng.between(5, 40));
    const double hi = lo + static_cast<double>(rng.between(0, 40));
    const auto fmin = rng.between(1, 3);
    const auto dmin = rng.between(3, 7);
    b.link(drug, Relation::has_dose_rule, band,
           {{"min_mg_per_kg_day", lo},
            {"max_mg_per_kg_day", hi},
            {"abs_max_mg_day", static_cast<double>(rng.between(500, 4000))},
            {"freq_min_per_day", fmin},
            {"freq_max_per_day", fmin + rng.between(0, 2)},
            {"duration_min_days", dmin},
            {"duration_max_days", dmin + rng.between(0, 4)}});
}

void add_teeth(Builder& b) {
    for (int q = 1; q <= 8; ++q) {
        const int positions = q <= 4 ? 8 : 5;
        for (int p = 1; p <= positions; ++p) {
            const int fdi = q * 10 + p;
            auto& n = b.add("tooth_" + std::to_string(fdi), NodeKind::ToothSite,
                            std::string(q <= 4 ? "permanent" : "primary") + " tooth " + std::to_string(fdi));
            n.attrs["fdi"] = static_cast<std::int64_t>(fdi);
        }
    }
}

} // namespace

KnowledgeGraph synthesize_graph(const SynthConfig& config) {
    if (!(config.scale > 0.0)) throw ConfigError("scale must be positive");
    Rng rng(config.seed);
    auto count = [&](double base) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(base * config.scale))); };
    const std::size_t n_drugs = count(120), n_classes = count(20), n_allergies = count(20), n_dental = count(100),
                      n_comorbid = count(50), n_symptoms = count(600), n_passages = count(235);

    Builder b;
    const std::vector<Band> bands = {{"ageband_infant", 0, 23}, {"ageband_child", 24, 143}, {"ageband_teen", 144, 216}};
    add_bands(b, bands);
    add_teeth(b);
    std::vector<std::string> drugs, classes, allergies, dental, comorbid, symptoms, teeth;
    for (const auto& n : b.nodes) {
        if (n.kind == NodeKind::ToothSite) teeth.push_back(n.id);
    }
    for (std::size_t i = 0; i < n_classes; ++i) {
        classes.push_back(numbered("class", i));
        b.add(classes.back(), NodeKind::DrugClass, word(rng, 3) + " class");
        allergies.push_back(numbered("allergy", i % n_allergies));
    }
    for (std::size_t i = 0; i < n_allergies; ++i) {
        b.add(numbered("allergy", i), NodeKind::AllergyClass, word(rng, 3) + " allergy");
    }
    for (std::size_t i = 0; i < n_drugs; ++i) {
        drugs.push_back(numbered("drug", i));
        b.add(drugs.back(), NodeKind::Drug, word(rng, 3) + "cillin", {word(rng, 2) + "mycin"});
    }
    for (std::size_t i = 0; i < n_dental; ++i) {
        dental.push_back(numbered("condition", i));
        b.add(dental.back(), NodeKind::Condition, word(rng, 2) + " " + word(rng, 3) + "itis").attrs["category"] = "dental";
    }
    for (std::size_t i = 0; i < n_comorbid; ++i) {
        comorbid.push_back(numbered("comorbidity", i));
        b.add(comorbid.back(), NodeKind::Condition, word(rng, 3) + " syndrome").attrs["category"] = "comorbidity";
    }
    for (std::size_t i = 0; i < n_symptoms; ++i) {
        symptoms.push_back(numbered("symptom", i));
        b.add(symptoms.back(), NodeKind::Symptom, word(rng, 2) + " " + word(rng, 2), {word(rng, 3)});
    }

    for (std::size_t i = 0; i < n_classes; ++i) b.link(classes[i], Relation::cross_reactive, allergies[i]);
    for (std::size_t i = 0; i < n_classes; ++i) {
        b.link(classes[i], Relation::cross_reactive, numbered("allergy", rng.index(n_allergies)));
    }
    for (const auto& d : drugs) {
        b.link(d, Relation::member_of, rng.pick(classes));
        add_dose_rule(b, rng, d, "ageband_child");
        if (rng.chance(0.8)) add_dose_rule(b, rng, d, "ageband_teen");
        if (rng.chance(0.2)) add_dose_rule(b, rng, d, "ageband_infant");
    }
    for (const auto& c : dental) {
        for (int k = 0; k < 5; ++k) b.link(rng.pick(drugs), Relation::treats, c, {{"line", k < 2 ? "first" : "second"}});
        for (int k = 0; k < 4; ++k) b.link(c, Relation::located_at, rng.pick(teeth));
    }
    for (std::size_t k = 0; k < count(400); ++k) {
        b.link(rng.pick(drugs), Relation::interacts_with, rng.pick(drugs),
               {{"severity", std::round(rng.uniform() * 100.0) / 100.0}});
    }
    for (std::size_t k = 0; k < count(200); ++k) b.link(rng.pick(drugs), Relation::contraindicated_in, rng.pick(comorbid));
    for (const auto& s : symptoms) {
        for (int k = 0; k < 4; ++k) b.link(s, Relation::indicates, rng.pick(dental));
    }
    for (std::size_t i = 0; i < n_passages; ++i) {
        const std::string id = numbered("passage", i);
        const std::string& cond = rng.pick(dental);
        const std::string& drug = rng.pick(drugs);
        std::string text;
        for (const auto* n : {&cond, &drug}) {
            for (const auto& node : b.nodes) {
                if (node.id == *n) text += node.name + " ";
            }
        }
        text += word(rng, 2) + " " + word(rng, 3) + " guidance.";
        auto& n = b.add(id, NodeKind::GuidelinePassage, "guideline " + std::to_string(i));
        n.attrs["text"] = text;
        n.attrs["source"] = "synthetic";
        b.link(id, Relation::supports, cond);
        b.link(id, Relation::supports, drug);
        for (int k = 0; k < 3; ++k) b.link(id, Relation::supports, rng.pick(symptoms));
    }
    return KnowledgeGraph::build(std::move(b.nodes), std::move(b.edges));
}

KnowledgeGraph random_small_graph(Rng& rng, std::size_t nodes) {
    Builder b;
    const std::size_t per = std::max<std::size_t>(2, nodes / 8);
    std::vector<std::string> drugs, classes, allergies, conditions, symptoms, teeth, passages;
    // A small shared vocabulary makes token overlaps and score ties likely.
    std::vector<std::string> vocab;
    for (std::size_t i = 0; i < 12; ++i) vocab.push_back(word(rng, 2));
    auto phrase = [&] {
        std::string s = rng.pick(vocab);
        if (rng.chance(0.5)) s += " " + rng.pick(vocab);
        return s;
    };
    std::set<int> codes;
    for (std::size_t i = 0; i < per; ++i) {
        drugs.push_back(numbered("d", i));
        b.add(drugs.back(), NodeKind::Drug, phrase(), rng.chance(0.5) ? std::vector<std::string>{phrase()} : std::vector<std::string>{});
        classes.push_back(numbered("c", i));
        b.add(classes.back(), NodeKind::DrugClass, phrase());
        allergies.push_back(numbered("a", i));
        b.add(allergies.back(), NodeKind::AllergyClass, phrase());
        conditions.push_back(numbered("k", i));
        b.add(conditions.back(), NodeKind::Condition, phrase());
        symptoms.push_back(numbered("s", i));
        b.add(symptoms.back(), NodeKind::Symptom, phrase(), {phrase()});
        int fdi = 0;
        do {
            const int q = static_cast<int>(rng.between(1, 8));
            fdi = q * 10 + static_cast<int>(rng.between(1, q <= 4 ? 8 : 5));
        } while (!codes.insert(fdi).second);
        teeth.push_back(numbered("t", i));
        b.add(teeth.back(), NodeKind::ToothSite, phrase()).attrs["fdi"] = static_cast<std::int64_t>(fdi);
        passages.push_back(numbered("p", i));
        auto& p = b.add(passages.back(), NodeKind::GuidelinePassage, phrase());
        p.attrs["text"] = phrase() + " " + phrase() + " " + phrase();
        p.attrs["source"] = "random";
    }
    add_bands(b, {{"b_0", 0, 59}, {"b_1", 60, 216}});
    for (const auto& d : drugs) {
        b.link(d, Relation::member_of, rng.pick(classes));
        add_dose_rule(b, rng, d, rng.chance(0.5) ? "b_0" : "b_1");
        b.link(d, Relation::treats, rng.pick(conditions), {{"line", rng.chance(0.5) ? "first" : "second"}});
        if (rng.chance(0.5)) b.link(d, Relation::interacts_with, rng.pick(drugs), {{"severity", rng.uniform()}});
        if (rng.chance(0.3)) b.link(d, Relation::contraindicated_in, rng.pick(conditions));
    }
    for (const auto& c : classes) b.link(c, Relation::cross_reactive, rng.pick(allergies));
    for (const auto& s : symptoms) {
        b.link(s, Relation::indicates, rng.pick(conditions));
        if (rng.chance(0.5)) b.link(s, Relation::located_at, rng.pick(teeth));
    }
    for (const auto& p : passages) {
        b.link(p, Relation::supports, rng.pick(conditions));
        b.link(p, Relation::supports, rng.pick(drugs));
    }
    return KnowledgeGraph::build(std::move(b.nodes), std::move(b.edges));
}

ClinicalRecord random_record(Rng& rng, const KnowledgeGraph& graph) {
    std::vector<std::string> phrases;
    for (const auto& n : graph.nodes()) {
        if (n.kind == NodeKind::GuidelinePassage || n.kind == NodeKind::AgeBand) continue;
        phrases.push_back(n.name);
        phrases.insert(phrases.end(), n.synonyms.begin(), n.synonyms.end());
    }
    auto sentence = [&] {
        std::string s;
        const auto words = rng.between(2, 8);
        for (std::int64_t i = 0; i < words; ++i) {
            if (!s.empty()) s += ' ';
            if (!phrases.empty() && rng.chance(0.4)) s += rng.pick(phrases);
            else s += rng.pick(kFiller);
        }
        return s + '.';
    };
    ClinicalRecord r;
    r.record_id = "rand-" + std::to_string(rng.next() % 1000000);
    r.patient_id = r.record_id;
    r.chief_complaint = sentence();
    r.exam_notes = sentence() + " " + sentence();
    if (rng.chance(0.5)) r.radiographic_report = sentence();
    r.profile.age_months = rng.between(0, kMaxPediatricAgeMonths);
    r.profile.weight_kg = std::clamp(typical_weight_kg(r.profile.age_months) * rng.uniform(0.8, 1.25), 1.5, 149.0);
    return r;
}

} // namespace kgrx

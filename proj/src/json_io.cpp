#include "kgrx/json_io.hpp"

#include "kgrx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace kgrx {

namespace {

std::string join_path(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

const json& require(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(join_path(path, key), "missing field");
    return *it;
}

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw SchemaError(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
        }
    }
}


std::string text_at(const json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path, "expected a string");
    return j.get<std::string>();
}

std::string text_field(const json& j, const char* key, const std::string& path, bool required = true) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) throw SchemaError(join_path(path, key), "missing field");
        return {};
    }
    return text_at(*it, join_path(path, key));
}

double number_field(const json& j, const char* key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) throw SchemaError(join_path(path, key), "expected a number");
    return v.get<double>();
}

std::int64_t integer_field(const json& j, const char* key, const std::string& path) {
    const json& v = require(j, key, path);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
    }
    throw SchemaError(join_path(path, key), "expected an integer");
}

bool bool_field(const json& j, const char* key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_boolean()) throw SchemaError(join_path(path, key), "expected a boolean");
    return v.get<bool>();
}

std::vector<std::string> strings_field(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) return {};
    const std::string p = join_path(path, key);
    if (!it->is_array()) throw SchemaError(p, "expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < it->size(); ++i) out.push_back(text_at((*it)[i], p + "[" + std::to_string(i) + "]"));
    return out;
}

std::set<std::string> string_set(const json& j, const char* key, const std::string& path) {
    const auto v = strings_field(j, key, path);
    return {v.begin(), v.end()};
}

json scalar_json(const Scalar& s) {
    return std::visit([](const auto& v) { return json(v); }, s);
}

json attrs_json(const Attrs& attrs) {
    json obj = json::object();
    for (const auto& [k, v] : attrs) obj[k] = scalar_json(v);
    return obj;
}

} // namespace

void to_json(json& j, const PatientProfile& p) {
    j = json{{"age_months", p.age_months},
             {"weight_kg", p.weight_kg},
             {"allergies", p.allergies},
             {"current_medications", p.current_medications},
             {"comorbidities", p.comorbidities}};
}

void to_json(json& j, const EntityMention& m) {
    j = json{{"section", to_string(m.section)},
             {"span", {{"start", m.begin}, {"end", m.end}}},
             {"surface", m.surface},
             {"node_id", m.node_id},
             {"negated", m.negated}};
}

void to_json(json& j, const AntibioticCandidate& c) {
    j = json{{"drug", c.drug},
             {"dose_mg_per_kg_day", c.dose_mg_per_kg_day},
             {"frequency_per_day", c.frequency_per_day},
             {"duration_days", c.duration_days},
             {"rationale", c.rationale},
             {"evidence_node_ids", c.evidence_node_ids}};
}

void to_json(json& j, const GoldAnnotation& g) {
    j = json{{"entities", g.entities},
             {"diagnosis", g.diagnosis},
             {"prescription", g.prescription ? json(*g.prescription) : json(nullptr)},
             {"evidence_node_ids", g.evidence_node_ids},
             {"reference_summary", g.reference_summary}};
}

void to_json(json& j, const ClinicalRecord& r) {
    j = json{{"record_id", r.record_id},
             {"patient_id", r.patient_id},
             {"chief_complaint", r.chief_complaint},
             {"exam_notes", r.exam_notes},
             {"radiographic_report", r.radiographic_report},
             {"profile", r.profile}};
    if (r.gold) j["gold"] = *r.gold;
}

void to_json(json& j, const DiagnosisCandidate& d) { j = json{{"condition", d.condition}, {"score", d.score}}; }

void to_json(json& j, const StructuredFindings& f) {
    j = json{{"mentions", f.mentions},
             {"diagnosis_candidates", f.diagnosis_candidates},
             {"tooth_sites", f.tooth_sites},
             {"prior_antibiotics", f.prior_antibiotics},
             {"severity", to_string(f.severity)}};
}

void to_json(json& j, const SafetyWeights& w) {
    j = json{{"w_dose", w.w_dose()}, {"w_allergy", w.w_allergy()}, {"w_interaction", w.w_interaction()}};
}

void to_json(json& j, const SafetyReport& r) {
    json violations = json::array();
    for (auto v : r.hard_violations) violations.push_back(to_string(v));
    j = json{{"s_dose", r.s_dose},
             {"s_allergy", r.s_allergy},
             {"s_interaction", r.s_interaction},
             {"s_safety", r.s_safety},
             {"hard_violations", violations},
             {"classifier_unsafe_prob", r.classifier_unsafe_prob},
             {"verdict", r.verdict ? json(to_string(*r.verdict)) : json(nullptr)},
             {"weights", r.weights},
             {"tau", r.weights.tau()}};
}

void to_json(json& j, const GuidelineHit& h) {
    j = json{{"passage_node_id", h.passage_node_id}, {"similarity", h.similarity}};
}

void to_json(json& j, const ValidatedCandidate& v) { j = json{{"candidate", v.candidate}, {"report", v.report}}; }

void to_json(json& j, const Recommendation& r) {
    j = json{{"outcome", r.abstained() ? "abstention" : "recommendation"},
             {"attempts", r.attempts},
             {"guideline_hits", r.guideline_hits},
             {"rejected", r.rejected},
             {"alternatives", r.alternatives},
             {"safety_bypassed", r.safety_bypassed},
             {"summary", r.summary}};
    if (r.emitted) {
        j["candidate"] = r.emitted->candidate;
        j["report"] = r.emitted->report;
    } else {
        j["abstention"] = {{"reason", to_string(r.abstention.value_or(AbstentionReason::NoCandidates))},
                           {"rejected", r.rejected}};
    }
}

void to_json(json& j, const SafetyClassifier& c) { j = json{{"weights", c.weights}, {"bias", c.bias}}; }

void to_json(json& j, const KGNode& n) {
    j = json{{"id", n.id},
             {"kind", to_string(n.kind)},
             {"name", n.name},
             {"synonyms", n.synonyms},
             {"attrs", attrs_json(n.attrs)}};
}

void to_json(json& j, const KGEdge& e) {
    j = json{{"src", e.src}, {"rel", to_string(e.rel)}, {"dst", e.dst}, {"attrs", attrs_json(e.attrs)}};
}

json subgraph_json(const RetrievedSubgraph& s, const KnowledgeGraph& graph) {
    json nodes = json::array();
    for (std::size_t i = 0; i < s.node_ids.size(); ++i) nodes.push_back({{"id", s.node_ids[i]}, {"score", s.scores[i]}});
    json edges = json::array();
    for (auto i : s.edges) {
        const auto& e = graph.edges()[i];
        edges.push_back({{"src", e.src}, {"rel", to_string(e.rel)}, {"dst", e.dst}});
    }
    return {{"nodes", nodes}, {"edges", edges}};
}

json context_json(const RetrievalContext& c, const KnowledgeGraph& graph) {
    return {{"subgraph", subgraph_json(c.subgraph, graph)}, {"guideline_hits", c.guideline_hits}};
}

PatientProfile profile_from_json(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, {"age_months", "weight_kg", "allergies", "current_medications", "comorbidities"}, path);
    PatientProfile p;
    p.age_months = integer_field(j, "age_months", path);
    p.weight_kg = number_field(j, "weight_kg", path);
    p.allergies = string_set(j, "allergies", path);
    p.current_medications = string_set(j, "current_medications", path);
    p.comorbidities = string_set(j, "comorbidities", path);
    return p;
}

EntityMention mention_from_json(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, {"section", "span", "surface", "node_id", "negated"}, path);
    EntityMention m;
    const std::string section = text_field(j, "section", path);
    auto s = parse_section(section);
    if (!s) throw SchemaError(path + ".section", "unknown section " + section);
    m.section = *s;
    const json& span = require(j, "span", path);
    expect_object(span, path + ".span");
    const auto start = integer_field(span, "start", path + ".span");
    const auto end = integer_field(span, "end", path + ".span");
    if (start < 0 || end < start) throw SchemaError(path + ".span", "invalid span");
    m.begin = static_cast<std::size_t>(start);
    m.end = static_cast<std::size_t>(end);
    m.surface = text_field(j, "surface", path);
    m.node_id = text_field(j, "node_id", path);
    m.negated = bool_field(j, "negated", path);
    return m;
}

AntibioticCandidate candidate_from_json(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, {"drug", "dose_mg_per_kg_day", "frequency_per_day", "duration_days", "rationale",
                       "evidence_node_ids"},
                   path);
    AntibioticCandidate c;
    c.drug = text_field(j, "drug", path);
    c.dose_mg_per_kg_day = number_field(j, "dose_mg_per_kg_day", path);
    c.frequency_per_day = integer_field(j, "frequency_per_day", path);
    c.duration_days = integer_field(j, "duration_days", path);
    c.rationale = text_field(j, "rationale", path, false);
    c.evidence_node_ids = strings_field(j, "evidence_node_ids", path);
    return c;
}

GoldAnnotation gold_from_json(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, {"entities", "diagnosis", "prescription", "evidence_node_ids", "reference_summary"}, path);
    GoldAnnotation g;
    if (auto it = j.find("entities"); it != j.end()) {
        if (!it->is_array()) throw SchemaError(path + ".entities", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            g.entities.push_back(mention_from_json((*it)[i], path + ".entities[" + std::to_string(i) + "]"));
        }
    }
    g.diagnosis = text_field(j, "diagnosis", path, false);
    if (auto it = j.find("prescription"); it != j.end() && !it->is_null()) {
        g.prescription = candidate_from_json(*it, path + ".prescription");
    }
    g.evidence_node_ids = strings_field(j, "evidence_node_ids", path);
    g.reference_summary = text_field(j, "reference_summary", path, false);
    return g;
}

ClinicalRecord record_from_json(const json& j) {
    expect_object(j, "");
    reject_unknown(j, {"record_id", "patient_id", "chief_complaint", "exam_notes", "radiographic_report", "profile",
                       "gold"},
                   "");
    ClinicalRecord r;
    r.record_id = text_field(j, "record_id", "", false);
    r.patient_id = text_field(j, "patient_id", "", false);
    r.chief_complaint = text_field(j, "chief_complaint", "", false);
    r.exam_notes = text_field(j, "exam_notes", "", false);
    r.radiographic_report = text_field(j, "radiographic_report", "", false);
    r.profile = profile_from_json(require(j, "profile", ""), "profile");
    if (auto it = j.find("gold"); it != j.end() && !it->is_null()) r.gold = gold_from_json(*it);
    return r;
}

SafetyClassifier classifier_from_json(const json& j) {
    expect_object(j, "classifier");
    reject_unknown(j, {"weights", "bias"}, "classifier");
    SafetyClassifier c;
    const json& w = require(j, "weights", "classifier");
    if (!w.is_array() || w.size() != kClassifierFeatures) {
        throw SchemaError("classifier.weights", "expected " + std::to_string(kClassifierFeatures) + " numbers");
    }
    for (std::size_t i = 0; i < kClassifierFeatures; ++i) {
        if (!w[i].is_number()) throw SchemaError("classifier.weights[" + std::to_string(i) + "]", "expected a number");
        c.weights[i] = w[i].get<double>();
    }
    c.bias = number_field(j, "bias", "classifier");
    return c;
}

json tagger_to_json(const TokenTagger& t) {
    return {{"tags", kTagCount}, {"features", TokenTagger::kFeatureCount},
            {"weights", std::vector<double>(t.weights().begin(), t.weights().end())}};
}

TokenTagger tagger_from_json(const json& j) {
    expect_object(j, "tagger");
    if (integer_field(j, "tags", "tagger") != static_cast<std::int64_t>(kTagCount) ||
        integer_field(j, "features", "tagger") != static_cast<std::int64_t>(TokenTagger::kFeatureCount)) {
        throw SchemaError("tagger", "shape does not match this build");
    }
    const json& w = require(j, "weights", "tagger");
    if (!w.is_array() || w.size() != TokenTagger::kParamCount) throw SchemaError("tagger.weights", "wrong length");
    TokenTagger t;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!w[i].is_number()) throw SchemaError("tagger.weights[" + std::to_string(i) + "]", "expected a number");
        t.weights()[i] = w[i].get<double>();
    }
    return t;
}

std::vector<ClinicalRecord> read_records(std::istream& in) {
    std::vector<ClinicalRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            ClinicalRecord r = record_from_json(json::parse(line));
            validate_record(r);
            out.push_back(std::move(r));
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, e.what());
        } catch (const SchemaError& e) {
            throw ParseError(line_no, e.what());
        } catch (const InvalidRecord& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

std::vector<ClinicalRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open records file " + path);
    return read_records(in);
}

void write_records(std::span<const ClinicalRecord> records, std::ostream& out) {
    for (const auto& r : records) out << json(r).dump() << '\n';
}

SafetyClassifier load_classifier(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open classifier file " + path);
    try {
        return classifier_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("classifier file " + path + ": " + e.what());
    }
}

void save_classifier(const SafetyClassifier& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write classifier file " + path);
    out << json(c).dump(2) << '\n';
}

} // namespace kgrx

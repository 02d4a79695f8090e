#pragma once

#include "kgrx/candidate.hpp"
#include "kgrx/kg_store.hpp"
#include "kgrx/recommender.hpp"
#include "kgrx/record.hpp"
#include "kgrx/record_parser.hpp"
#include "kgrx/retrieval.hpp"
#include "kgrx/safety.hpp"
#include "kgrx/tagger.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace kgrx {

using nlohmann::json;

// Serialization. Field names follow the struct members.
void to_json(json& j, const PatientProfile& p);
void to_json(json& j, const EntityMention& m);
void to_json(json& j, const AntibioticCandidate& c);
void to_json(json& j, const GoldAnnotation& g);
void to_json(json& j, const ClinicalRecord& r);
void to_json(json& j, const DiagnosisCandidate& d);
void to_json(json& j, const StructuredFindings& f);
void to_json(json& j, const SafetyWeights& w);
void to_json(json& j, const SafetyReport& r);
void to_json(json& j, const GuidelineHit& h);
void to_json(json& j, const ValidatedCandidate& v);
void to_json(json& j, const Recommendation& r);
void to_json(json& j, const SafetyClassifier& c);
void to_json(json& j, const KGNode& n);
void to_json(json& j, const KGEdge& e);

/// Retrieved nodes with scores and the subgraph edges as (src, rel, dst).
json subgraph_json(const RetrievedSubgraph& s, const KnowledgeGraph& graph);
/// Subgraph plus guideline hits; embeddings are left out.
json context_json(const RetrievalContext& c, const KnowledgeGraph& graph);

// Parsing. Shape errors throw SchemaError with a dotted field path; value
// invariants are left to validate_record and friends.
PatientProfile profile_from_json(const json& j, const std::string& path = "profile");
EntityMention mention_from_json(const json& j, const std::string& path);
AntibioticCandidate candidate_from_json(const json& j, const std::string& path = "candidate");
GoldAnnotation gold_from_json(const json& j, const std::string& path = "gold");
/// Missing sections read as empty text; a missing record_id reads as "".
ClinicalRecord record_from_json(const json& j);
SafetyClassifier classifier_from_json(const json& j);

json tagger_to_json(const TokenTagger& t);
TokenTagger tagger_from_json(const json& j);

/// One JSON record per line; blank lines skipped. Throws ParseError.
std::vector<ClinicalRecord> read_records(std::istream& in);
std::vector<ClinicalRecord> load_records(const std::string& path);
void write_records(std::span<const ClinicalRecord> records, std::ostream& out);

SafetyClassifier load_classifier(const std::string& path);
void save_classifier(const SafetyClassifier& c, const std::string& path);

} // namespace kgrx

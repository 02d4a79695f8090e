#pragma once

#include "kgrx/embedding.hpp"
#include "kgrx/kg_store.hpp"
#include "kgrx/record.hpp"

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace kgrx {

/// Blend between embedding similarity and keyword overlap in entity scoring.
struct ScoreWeights {
    double embedding = 0.7;
    double keyword = 0.3;
};

struct RetrievedSubgraph {
    std::vector<std::string> node_ids; ///< score-descending, ties by id ascending
    std::vector<double> scores;
    std::vector<std::size_t> edges;    ///< indices into KnowledgeGraph::edges(), ascending

    double score_of(std::string_view id) const;
};

struct GuidelineHit {
    std::string passage_node_id;
    double similarity = 0.0;

    friend bool operator==(const GuidelineHit&, const GuidelineHit&) = default;
};

struct RetrievalContext {
    Embedding h_text;
    Embedding h_graph;
    Embedding h_star;
    RetrievedSubgraph subgraph;
    std::vector<GuidelineHit> guideline_hits;
};

/// |a ∩ b| / |a ∪ b| over sorted, distinct token lists; 0 when both are empty.
double jaccard(std::span<const std::string> a, std::span<const std::string> b);

/// Precomputed node embeddings and token sets over one graph. Holds a
/// reference to the graph, which must outlive it.
class Retriever {
public:
    explicit Retriever(const KnowledgeGraph& graph, ScoreWeights weights = {});

    const KnowledgeGraph& graph() const { return *graph_; }
    const ScoreWeights& weights() const { return weights_; }

    /// w_e * cosine(embed(name + synonyms), h_x) + w_k * Jaccard(node tokens, record tokens).
    double score_entity(const KGNode& node, const Embedding& h_x, std::span<const std::string> record_tokens) const;

    /// Exact TopK over every non-passage node, plus the induced edges and the
    /// safety edges incident to retrieved drugs.
    RetrievedSubgraph retrieve_subgraph(const ClinicalRecord& record, std::size_t k) const;

    /// Top-m passages by cosine(h_star, embed(passage text)), ties by id.
    std::vector<GuidelineHit> retrieve_guidelines(const Embedding& h_star, std::size_t m) const;

    Embedding encode(const RetrievedSubgraph& subgraph) const;

    /// h_x -> subgraph -> h_G -> h* -> guideline hits. `m == 0` disables
    /// guideline retrieval.
    RetrievalContext build_context(const ClinicalRecord& record, FusionGate gate, std::size_t k, std::size_t m) const;

    const Embedding& node_embedding(std::string_view id) const;
    const Embedding& passage_embedding(std::string_view id) const;

private:
    const KnowledgeGraph* graph_;
    ScoreWeights weights_;
    std::map<std::string, Embedding, std::less<>> node_embeddings_;
    std::map<std::string, Embedding, std::less<>> passage_embeddings_;
};

/// Distinct sorted tokens of the record's concatenated sections.
std::vector<std::string> record_token_set(const ClinicalRecord& record);

/// Relations pulled in around every retrieved Drug node.
bool is_safety_relation(Relation rel) noexcept;

struct DevCase {
    const ClinicalRecord* record;
    std::set<std::string> gold_evidence;
};

/// Fraction of gold evidence found among subgraph nodes and guideline hits
/// (1 when the gold set is empty).
double evidence_recall(const RetrievalContext& context, const std::set<std::string>& gold);

/// Grid search of the fusion gate on retrieval recall of gold evidence.
FusionGate fit_gate(const Retriever& retriever, std::span<const DevCase> dev, std::size_t k, std::size_t m);

} // namespace kgrx

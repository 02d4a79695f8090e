#include "kgrx/retrieval.hpp"

#include "kgrx/errors.hpp"
#include "kgrx/text.hpp"

#include <algorithm>
#include <set>

namespace kgrx {

namespace {

struct Scored {
    double score;
    const std::string* id;
};

bool ranks_before(const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return *a.id < *b.id;
}

} // namespace

double RetrievedSubgraph::score_of(std::string_view id) const {
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
        if (node_ids[i] == id) return scores[i];
    }
    return 0.0;
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

bool is_safety_relation(Relation rel) noexcept {
    return rel == Relation::has_dose_rule || rel == Relation::cross_reactive || rel == Relation::interacts_with ||
           rel == Relation::contraindicated_in;
}

std::vector<std::string> record_token_set(const ClinicalRecord& record) {
    auto toks = token_strings(record.full_text());
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    return toks;
}

Retriever::Retriever(const KnowledgeGraph& graph, ScoreWeights weights) : graph_(&graph), weights_(weights) {
    for (const auto& n : graph.nodes()) {
        node_embeddings_.emplace(n.id, embed_text(n.lexical_text()));
        if (n.kind == NodeKind::GuidelinePassage) {
            passage_embeddings_.emplace(n.id, embed_text(as_text(n.attrs, "text").value_or("")));
        }
    }
}

const Embedding& Retriever::node_embedding(std::string_view id) const {
    auto it = node_embeddings_.find(id);
    if (it == node_embeddings_.end()) throw UnknownNode(std::string(id));
    return it->second;
}

const Embedding& Retriever::passage_embedding(std::string_view id) const {
    auto it = passage_embeddings_.find(id);
    if (it == passage_embeddings_.end()) throw UnknownNode(std::string(id));
    return it->second;
}

double Retriever::score_entity(const KGNode& node, const Embedding& h_x,
                               std::span<const std::string> record_tokens) const {
    return weights_.embedding * cosine(node_embedding(node.id), h_x) +
           weights_.keyword * jaccard(graph_->node_tokens(node.id), record_tokens);
}

RetrievedSubgraph Retriever::retrieve_subgraph(const ClinicalRecord& record, std::size_t k) const {
    const Embedding h_x = embed_text(record.full_text());
    const auto tokens = record_token_set(record);
    std::vector<Scored> scored;
    for (const auto& n : graph_->nodes()) {
        if (n.kind == NodeKind::GuidelinePassage) continue;
        scored.push_back({score_entity(n, h_x, tokens), &n.id});
    }
    const std::size_t keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), ranks_before);

    RetrievedSubgraph out;
    std::set<std::string_view> members;
    for (std::size_t i = 0; i < keep; ++i) {
        out.node_ids.push_back(*scored[i].id);
        out.scores.push_back(scored[i].score);
        members.insert(*scored[i].id);
    }
    const auto edges = graph_->edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        const bool src_in = members.contains(e.src);
        const bool dst_in = members.contains(e.dst);
        bool keep_edge = src_in && dst_in;
        if (!keep_edge && is_safety_relation(e.rel)) {
            keep_edge = (src_in && graph_->node(e.src).kind == NodeKind::Drug) ||
                        (dst_in && graph_->node(e.dst).kind == NodeKind::Drug);
        }
        if (keep_edge) out.edges.push_back(i);
    }
    return out;
}

std::vector<GuidelineHit> Retriever::retrieve_guidelines(const Embedding& h_star, std::size_t m) const {
    std::vector<Scored> scored;
    for (const auto& [id, emb] : passage_embeddings_) scored.push_back({cosine(h_star, emb), &id});
    const std::size_t keep = std::min(m, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), ranks_before);
    std::vector<GuidelineHit> out;
    for (std::size_t i = 0; i < keep; ++i) out.push_back({*scored[i].id, scored[i].score});
    return out;
}

Embedding Retriever::encode(const RetrievedSubgraph& subgraph) const {
    std::vector<const KGNode*> nodes;
    for (const auto& id : subgraph.node_ids) nodes.push_back(&graph_->node(id));
    std::vector<const KGEdge*> edges;
    for (auto i : subgraph.edges) edges.push_back(&graph_->edges()[i]);
    return encode_subgraph(nodes, edges);
}

RetrievalContext Retriever::build_context(const ClinicalRecord& record, FusionGate gate, std::size_t k,
                                          std::size_t m) const {
    RetrievalContext ctx;
    ctx.h_text = embed_text(record.full_text());
    ctx.subgraph = retrieve_subgraph(record, k);
    ctx.h_graph = encode(ctx.subgraph);
    ctx.h_star = fuse(ctx.h_text, ctx.h_graph, gate);
    if (m > 0) ctx.guideline_hits = retrieve_guidelines(ctx.h_star, m);
    return ctx;
}

double evidence_recall(const RetrievalContext& context, const std::set<std::string>& gold) {
    if (gold.empty()) return 1.0;
    std::size_t found = 0;
    for (const auto& id : gold) {
        const bool in_subgraph =
            std::find(context.subgraph.node_ids.begin(), context.subgraph.node_ids.end(), id) !=
            context.subgraph.node_ids.end();
        const bool in_hits = std::any_of(context.guideline_hits.begin(), context.guideline_hits.end(),
                                         [&](const GuidelineHit& h) { return h.passage_node_id == id; });
        if (in_subgraph || in_hits) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(gold.size());
}

FusionGate fit_gate(const Retriever& retriever, std::span<const DevCase> dev, std::size_t k, std::size_t m) {
    if (dev.empty()) throw EmptyDevSet();
    // The subgraph and h_G do not depend on alpha; compute them once per case.
    std::vector<RetrievalContext> base;
    base.reserve(dev.size());
    for (const auto& c : dev) base.push_back(retriever.build_context(*c.record, FusionGate(1.0), k, 0));
    return fit_gate(dev.size(), [&](std::size_t i, double alpha) {
        RetrievalContext ctx = base[i];
        ctx.h_star = fuse(ctx.h_text, ctx.h_graph, FusionGate(alpha));
        ctx.guideline_hits = retriever.retrieve_guidelines(ctx.h_star, m);
        return evidence_recall(ctx, dev[i].gold_evidence);
    });
}

} // namespace kgrx

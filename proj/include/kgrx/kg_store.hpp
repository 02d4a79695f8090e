#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace kgrx {

enum class NodeKind { Drug, DrugClass, Condition, Symptom, ToothSite, AllergyClass, AgeBand, GuidelinePassage };

enum class Relation {
    treats,
    has_dose_rule,
    member_of,
    cross_reactive,
    interacts_with,
    contraindicated_in,
    located_at,
    indicates,
    supports,
};

std::string_view to_string(NodeKind kind) noexcept;
std::string_view to_string(Relation rel) noexcept;
std::optional<NodeKind> parse_node_kind(std::string_view s) noexcept;
std::optional<Relation> parse_relation(std::string_view s) noexcept;

/// Flat attribute value. Integers and reals are kept apart so a graph
/// serializes back byte-for-byte.
using Scalar = std::variant<std::int64_t, double, bool, std::string>;
using Attrs = std::map<std::string, Scalar, std::less<>>;

std::optional<double> as_number(const Attrs& attrs, std::string_view key);
std::optional<std::int64_t> as_integer(const Attrs& attrs, std::string_view key);
std::optional<std::string> as_text(const Attrs& attrs, std::string_view key);

struct KGNode {
    std::string id;
    NodeKind kind = NodeKind::Drug;
    std::string name;
    std::vector<std::string> synonyms;
    Attrs attrs;

    /// name followed by the synonyms, space separated; the text every node
    /// embedding is computed from.
    std::string lexical_text() const;

    friend bool operator==(const KGNode&, const KGNode&) = default;
};

struct KGEdge {
    std::string src;
    Relation rel = Relation::treats;
    std::string dst;
    Attrs attrs;

    friend bool operator==(const KGEdge&, const KGEdge&) = default;
};

/// Typed view over a has_dose_rule edge joined with its AgeBand.
struct DoseRule {
    std::string drug;
    std::string band;
    std::int64_t min_months = 0;
    std::int64_t max_months = 0;
    double min_mg_per_kg_day = 0.0;
    double max_mg_per_kg_day = 0.0;
    double abs_max_mg_day = 0.0;
    std::int64_t freq_min_per_day = 0;
    std::int64_t freq_max_per_day = 0;
    std::int64_t duration_min_days = 0;
    std::int64_t duration_max_days = 0;

    bool covers(std::int64_t age_months) const noexcept {
        return age_months >= min_months && age_months <= max_months;
    }
    double midpoint() const noexcept { return 0.5 * (min_mg_per_kg_day + max_mg_per_kg_day); }

    friend bool operator==(const DoseRule&, const DoseRule&) = default;
};

struct Neighbor {
    const KGEdge* edge;
    const KGNode* node; ///< the endpoint that is not the queried node
};

/// Immutable, fully indexed dental-pharmacology graph. Construct through
/// `KnowledgeGraph::build` (or the loaders), which verifies every integrity
/// rule and throws IntegrityError without producing a partial graph.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    static KnowledgeGraph build(std::vector<KGNode> nodes, std::vector<KGEdge> edges);

    /// Nodes sorted by id.
    std::span<const KGNode> nodes() const { return nodes_; }
    /// Edges in file order.
    std::span<const KGEdge> edges() const { return edges_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    const KGNode* find(std::string_view id) const;
    /// Throws UnknownNode.
    const KGNode& node(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

    /// Indices into edges() for stored direction only.
    std::span<const std::size_t> out_edges(std::string_view id, Relation rel) const;
    std::span<const std::size_t> in_edges(std::string_view id, Relation rel) const;

    std::span<const DoseRule> dose_rules(std::string_view drug) const;

    /// Lexicon keyed by space-joined token sequences of every node name and
    /// synonym; values are node ids in ascending order.
    const std::map<std::string, std::vector<std::string>, std::less<>>& lexicon() const { return lexicon_; }
    std::size_t max_lexicon_tokens() const { return max_lexicon_tokens_; }

    /// Distinct lexicon tokens of one node (name and synonyms).
    const std::vector<std::string>& node_tokens(std::string_view id) const;

    std::optional<std::string_view> tooth_by_fdi(int code) const;

    std::vector<const KGNode*> nodes_of_kind(NodeKind kind) const;

private:
    using Key = std::pair<std::string, Relation>;
    struct KeyLess {
        using is_transparent = void;
        bool operator()(const Key& a, const Key& b) const { return a < b; }
    };

    std::vector<KGNode> nodes_;
    std::vector<KGEdge> edges_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<Key, std::vector<std::size_t>, KeyLess> out_;
    std::map<Key, std::vector<std::size_t>, KeyLess> in_;
    std::map<std::string, std::vector<DoseRule>, std::less<>> dose_rules_;
    std::map<std::string, std::vector<std::string>, std::less<>> lexicon_;
    std::unordered_map<std::string, std::vector<std::string>> node_tokens_;
    std::map<int, std::string> teeth_;
    std::size_t max_lexicon_tokens_ = 0;
};

/// Reads the line-delimited node/edge format. Throws ParseError with the
/// offending line number, or IntegrityError once the whole file is read.
KnowledgeGraph parse_graph(std::istream& in);
KnowledgeGraph load_graph(const std::string& path);

/// Nodes (sorted by id) then edges (stored order), one JSON record per line.
void write_graph(const KnowledgeGraph& graph, std::ostream& out);

/// Outgoing edges of `id`, plus incoming interacts_with edges (the relation
/// is symmetric). Sorted by neighbor id, then relation. Throws UnknownNode.
std::vector<Neighbor> neighbors(const KnowledgeGraph& graph, std::string_view id,
                                std::optional<Relation> rel = std::nullopt);

/// The unique dose rule whose band contains `age_months`, if any.
/// Throws UnknownNode, or KindMismatch when `drug` is not a Drug.
std::optional<DoseRule> dose_rule_for(const KnowledgeGraph& graph, std::string_view drug, std::int64_t age_months);

/// Every rule of `drug` ordered by band start; the closest band is used when
/// no band contains the age.
std::optional<DoseRule> nearest_dose_rule(const KnowledgeGraph& graph, std::string_view drug, std::int64_t age_months);

} // namespace kgrx

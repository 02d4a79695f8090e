#include "kgrx/kg_store.hpp"

#include "kgrx/errors.hpp"
#include "kgrx/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace kgrx {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 8> kKindNames = {
    "Drug", "DrugClass", "Condition", "Symptom", "ToothSite", "AllergyClass", "AgeBand", "GuidelinePassage"};

constexpr std::array<std::string_view, 9> kRelationNames = {
    "treats",           "has_dose_rule",      "member_of",  "cross_reactive", "interacts_with",
    "contraindicated_in", "located_at",       "indicates", "supports"};

struct RelationTyping {
    std::vector<NodeKind> src;
    std::vector<NodeKind> dst;
};

const RelationTyping& typing(Relation rel) {
    using K = NodeKind;
    static const std::array<RelationTyping, 9> table = {{
        {{K::Drug}, {K::Condition}},                                           // treats
        {{K::Drug}, {K::AgeBand}},                                             // has_dose_rule
        {{K::Drug}, {K::DrugClass}},                                           // member_of
        {{K::Drug, K::DrugClass}, {K::AllergyClass}},                          // cross_reactive
        {{K::Drug}, {K::Drug}},                                                // interacts_with
        {{K::Drug}, {K::Condition}},                                           // contraindicated_in
        {{K::Condition, K::Symptom}, {K::ToothSite}},                          // located_at
        {{K::Symptom}, {K::Condition}},                                        // indicates
        {{K::GuidelinePassage}, {K::Drug, K::DrugClass, K::Condition, K::Symptom}}, // supports
    }};
    return table[static_cast<std::size_t>(rel)];
}

bool allowed(const std::vector<NodeKind>& kinds, NodeKind k) {
    return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

std::string edge_label(const KGEdge& e) {
    return e.src + " -" + std::string(to_string(e.rel)) + "-> " + e.dst;
}

Scalar scalar_from_json(const json& v, std::size_t line, const std::string& key) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) return v.get<double>();
    if (v.is_string()) return v.get<std::string>();
    throw ParseError(line, "attribute '" + key + "' must be a scalar");
}

json scalar_to_json(const Scalar& s) {
    return std::visit([](const auto& v) { return json(v); }, s);
}

Attrs attrs_from_json(const json& obj, std::size_t line) {
    if (!obj.is_object()) throw ParseError(line, "attrs must be an object");
    Attrs attrs;
    for (auto it = obj.begin(); it != obj.end(); ++it) attrs.emplace(it.key(), scalar_from_json(it.value(), line, it.key()));
    return attrs;
}

json attrs_to_json(const Attrs& attrs) {
    json obj = json::object();
    for (const auto& [k, v] : attrs) obj[k] = scalar_to_json(v);
    return obj;
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known, std::size_t line) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw ParseError(line, "unknown key '" + it.key() + "'");
        }
    }
}

std::string required_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) throw ParseError(line, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

KGNode node_from_json(const json& obj, std::size_t line) {
    if (!obj.is_object()) throw ParseError(line, "node must be an object");
    reject_unknown_keys(obj, {"id", "kind", "name", "synonyms", "attrs"}, line);
    KGNode n;
    n.id = required_string(obj, "id", line);
    const auto kind = required_string(obj, "kind", line);
    auto parsed = parse_node_kind(kind);
    if (!parsed) throw ParseError(line, "unknown node kind '" + kind + "'");
    n.kind = *parsed;
    n.name = required_string(obj, "name", line);
    if (auto it = obj.find("synonyms"); it != obj.end()) {
        if (!it->is_array()) throw ParseError(line, "synonyms must be an array");
        for (const auto& s : *it) {
            if (!s.is_string()) throw ParseError(line, "synonyms must be strings");
            n.synonyms.push_back(s.get<std::string>());
        }
    }
    if (auto it = obj.find("attrs"); it != obj.end()) n.attrs = attrs_from_json(*it, line);
    return n;
}

KGEdge edge_from_json(const json& obj, std::size_t line) {
    if (!obj.is_object()) throw ParseError(line, "edge must be an object");
    reject_unknown_keys(obj, {"src", "rel", "dst", "attrs"}, line);
    KGEdge e;
    e.src = required_string(obj, "src", line);
    const auto rel = required_string(obj, "rel", line);
    auto parsed = parse_relation(rel);
    if (!parsed) throw ParseError(line, "unknown relation '" + rel + "'");
    e.rel = *parsed;
    e.dst = required_string(obj, "dst", line);
    if (auto it = obj.find("attrs"); it != obj.end()) e.attrs = attrs_from_json(*it, line);
    return e;
}

void check_node(const KGNode& n) {
    if (n.id.empty()) throw IntegrityError("node with empty id");
    if (n.name.empty()) throw IntegrityError("node '" + n.id + "' has an empty name");
    switch (n.kind) {
    case NodeKind::AgeBand: {
        auto lo = as_integer(n.attrs, "min_months");
        auto hi = as_integer(n.attrs, "max_months");
        if (!lo || !hi) throw IntegrityError("age band '" + n.id + "' needs integer min_months and max_months");
        if (*lo < 0 || *lo > *hi) throw IntegrityError("age band '" + n.id + "' violates 0 <= min_months <= max_months");
        break;
    }
    case NodeKind::GuidelinePassage:
        if (!as_text(n.attrs, "text") || !as_text(n.attrs, "source")) {
            throw IntegrityError("guideline passage '" + n.id + "' needs string attrs text and source");
        }
        break;
    case NodeKind::ToothSite:
        if (n.attrs.contains("fdi") && !as_integer(n.attrs, "fdi")) {
            throw IntegrityError("tooth site '" + n.id + "' has a non-integer fdi code");
        }
        break;
    default:
        break;
    }
}

DoseRule dose_rule_from(const KGEdge& e, const KGNode& band) {
    const auto label = edge_label(e);
    auto num = [&](const char* key) {
        auto v = as_number(e.attrs, key);
        if (!v) throw IntegrityError(label + ": missing numeric attr " + key);
        return *v;
    };
    auto integer = [&](const char* key) {
        auto v = as_integer(e.attrs, key);
        if (!v) throw IntegrityError(label + ": missing integer attr " + key);
        return *v;
    };
    DoseRule r;
    r.drug = e.src;
    r.band = e.dst;
    r.min_months = *as_integer(band.attrs, "min_months");
    r.max_months = *as_integer(band.attrs, "max_months");
    r.min_mg_per_kg_day = num("min_mg_per_kg_day");
    r.max_mg_per_kg_day = num("max_mg_per_kg_day");
    r.abs_max_mg_day = num("abs_max_mg_day");
    r.freq_min_per_day = integer("freq_min_per_day");
    r.freq_max_per_day = integer("freq_max_per_day");
    r.duration_min_days = integer("duration_min_days");
    r.duration_max_days = integer("duration_max_days");
    if (!(r.min_mg_per_kg_day > 0.0 && r.min_mg_per_kg_day <= r.max_mg_per_kg_day)) {
        throw IntegrityError(label + ": requires 0 < min_mg_per_kg_day <= max_mg_per_kg_day");
    }
    if (!(r.abs_max_mg_day > 0.0)) throw IntegrityError(label + ": requires abs_max_mg_day > 0");
    if (r.freq_min_per_day < 1 || r.freq_min_per_day > r.freq_max_per_day) {
        throw IntegrityError(label + ": requires 1 <= freq_min_per_day <= freq_max_per_day");
    }
    if (r.duration_min_days < 1 || r.duration_min_days > r.duration_max_days) {
        throw IntegrityError(label + ": requires 1 <= duration_min_days <= duration_max_days");
    }
    return r;
}

} // namespace

std::string_view to_string(NodeKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }
std::string_view to_string(Relation rel) noexcept { return kRelationNames[static_cast<std::size_t>(rel)]; }

std::optional<NodeKind> parse_node_kind(std::string_view s) noexcept {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == s) return static_cast<NodeKind>(i);
    }
    return std::nullopt;
}

std::optional<Relation> parse_relation(std::string_view s) noexcept {
    for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
        if (kRelationNames[i] == s) return static_cast<Relation>(i);
    }
    return std::nullopt;
}

std::optional<double> as_number(const Attrs& attrs, std::string_view key) {
    auto it = attrs.find(key);
    if (it == attrs.end()) return std::nullopt;
    if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&it->second)) return *d;
    return std::nullopt;
}

std::optional<std::int64_t> as_integer(const Attrs& attrs, std::string_view key) {
    auto it = attrs.find(key);
    if (it == attrs.end()) return std::nullopt;
    if (auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
    return std::nullopt;
}

std::optional<std::string> as_text(const Attrs& attrs, std::string_view key) {
    auto it = attrs.find(key);
    if (it == attrs.end()) return std::nullopt;
    if (auto* s = std::get_if<std::string>(&it->second)) return *s;
    return std::nullopt;
}

std::string KGNode::lexical_text() const {
    std::string out = name;
    for (const auto& s : synonyms) {
        out.push_back(' ');
        out.append(s);
    }
    return out;
}

KnowledgeGraph KnowledgeGraph::build(std::vector<KGNode> nodes, std::vector<KGEdge> edges) {
    KnowledgeGraph g;
    std::sort(nodes.begin(), nodes.end(), [](const KGNode& a, const KGNode& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        check_node(nodes[i]);
        if (i > 0 && nodes[i].id == nodes[i - 1].id) throw IntegrityError("duplicate node id '" + nodes[i].id + "'");
        g.index_.emplace(nodes[i].id, i);
    }
    g.nodes_ = std::move(nodes);

    std::set<std::tuple<std::string, Relation, std::string>> seen;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        const auto label = edge_label(e);
        const KGNode* src = g.find(e.src);
        if (src == nullptr) throw IntegrityError(label + ": dangling endpoint '" + e.src + "'");
        const KGNode* dst = g.find(e.dst);
        if (dst == nullptr) throw IntegrityError(label + ": dangling endpoint '" + e.dst + "'");
        const auto& t = typing(e.rel);
        if (!allowed(t.src, src->kind) || !allowed(t.dst, dst->kind)) {
            throw IntegrityError(label + ": relation does not accept " + std::string(to_string(src->kind)) + " -> " +
                                 std::string(to_string(dst->kind)));
        }
        if (!seen.emplace(e.src, e.rel, e.dst).second) throw IntegrityError(label + ": duplicate edge");
        switch (e.rel) {
        case Relation::treats: {
            auto line = as_text(e.attrs, "line");
            if (!line || (*line != "first" && *line != "second")) {
                throw IntegrityError(label + ": attr line must be 'first' or 'second'");
            }
            break;
        }
        case Relation::interacts_with: {
            if (e.src == e.dst) throw IntegrityError(label + ": self interaction");
            if (seen.contains({e.dst, e.rel, e.src})) throw IntegrityError(label + ": interaction stored in both directions");
            auto sev = as_number(e.attrs, "severity");
            if (!sev || !(*sev >= 0.0 && *sev <= 1.0)) throw IntegrityError(label + ": severity must lie in [0, 1]");
            break;
        }
        case Relation::has_dose_rule:
            g.dose_rules_[e.src].push_back(dose_rule_from(e, *dst));
            break;
        default:
            break;
        }
        g.out_[{e.src, e.rel}].push_back(i);
        g.in_[{e.dst, e.rel}].push_back(i);
    }
    for (auto& [drug, rules] : g.dose_rules_) {
        std::sort(rules.begin(), rules.end(), [](const DoseRule& a, const DoseRule& b) {
            return a.min_months < b.min_months || (a.min_months == b.min_months && a.band < b.band);
        });
        for (std::size_t i = 1; i < rules.size(); ++i) {
            if (rules[i].min_months <= rules[i - 1].max_months) {
                throw IntegrityError("drug '" + drug + "' has overlapping age bands '" + rules[i - 1].band + "' and '" +
                                     rules[i].band + "'");
            }
        }
    }
    g.edges_ = std::move(edges);

    for (const auto& n : g.nodes_) {
        std::set<std::string> distinct;
        auto add_phrase = [&](const std::string& phrase) {
            auto toks = token_strings(phrase);
            if (toks.empty()) return;
            g.max_lexicon_tokens_ = std::max(g.max_lexicon_tokens_, toks.size());
            auto& ids = g.lexicon_[join(toks, " ")];
            if (std::find(ids.begin(), ids.end(), n.id) == ids.end()) ids.push_back(n.id);
            distinct.insert(toks.begin(), toks.end());
        };
        add_phrase(n.name);
        for (const auto& s : n.synonyms) add_phrase(s);
        g.node_tokens_.emplace(n.id, std::vector<std::string>(distinct.begin(), distinct.end()));
        if (n.kind == NodeKind::ToothSite) {
            if (auto fdi = as_integer(n.attrs, "fdi")) {
                if (!g.teeth_.emplace(static_cast<int>(*fdi), n.id).second) {
                    throw IntegrityError("tooth code " + std::to_string(*fdi) + " assigned to two nodes");
                }
            }
        }
    }
    return g;
}

const KGNode* KnowledgeGraph::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

const KGNode& KnowledgeGraph::node(std::string_view id) const {
    const KGNode* n = find(id);
    if (n == nullptr) throw UnknownNode(std::string(id));
    return *n;
}

std::span<const std::size_t> KnowledgeGraph::out_edges(std::string_view id, Relation rel) const {
    auto it = out_.find(Key{std::string(id), rel});
    if (it == out_.end()) return {};
    return it->second;
}

std::span<const std::size_t> KnowledgeGraph::in_edges(std::string_view id, Relation rel) const {
    auto it = in_.find(Key{std::string(id), rel});
    if (it == in_.end()) return {};
    return it->second;
}

std::span<const DoseRule> KnowledgeGraph::dose_rules(std::string_view drug) const {
    auto it = dose_rules_.find(drug);
    if (it == dose_rules_.end()) return {};
    return it->second;
}

const std::vector<std::string>& KnowledgeGraph::node_tokens(std::string_view id) const {
    auto it = node_tokens_.find(std::string(id));
    if (it == node_tokens_.end()) throw UnknownNode(std::string(id));
    return it->second;
}

std::optional<std::string_view> KnowledgeGraph::tooth_by_fdi(int code) const {
    auto it = teeth_.find(code);
    if (it == teeth_.end()) return std::nullopt;
    return it->second;
}

std::vector<const KGNode*> KnowledgeGraph::nodes_of_kind(NodeKind kind) const {
    std::vector<const KGNode*> out;
    for (const auto& n : nodes_) {
        if (n.kind == kind) out.push_back(&n);
    }
    return out;
}

KnowledgeGraph parse_graph(std::istream& in) {
    std::vector<KGNode> nodes;
    std::vector<KGEdge> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!rec.is_object() || rec.size() != 1) throw ParseError(line_no, "record must hold exactly one of node or edge");
        if (auto it = rec.find("node"); it != rec.end()) {
            nodes.push_back(node_from_json(*it, line_no));
        } else if (auto it2 = rec.find("edge"); it2 != rec.end()) {
            edges.push_back(edge_from_json(*it2, line_no));
        } else {
            throw ParseError(line_no, "unknown record type '" + rec.begin().key() + "'");
        }
    }
    return KnowledgeGraph::build(std::move(nodes), std::move(edges));
}

KnowledgeGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open knowledge graph file: " + path);
    return parse_graph(in);
}

void write_graph(const KnowledgeGraph& graph, std::ostream& out) {
    for (const auto& n : graph.nodes()) {
        json obj = {{"id", n.id},
                    {"kind", to_string(n.kind)},
                    {"name", n.name},
                    {"synonyms", n.synonyms},
                    {"attrs", attrs_to_json(n.attrs)}};
        out << json{{"node", obj}}.dump() << '\n';
    }
    for (const auto& e : graph.edges()) {
        json obj = {{"src", e.src}, {"rel", to_string(e.rel)}, {"dst", e.dst}, {"attrs", attrs_to_json(e.attrs)}};
        out << json{{"edge", obj}}.dump() << '\n';
    }
}

std::vector<Neighbor> neighbors(const KnowledgeGraph& graph, std::string_view id, std::optional<Relation> rel) {
    const KGNode& self = graph.node(id);
    std::vector<Neighbor> out;
    const auto edges = graph.edges();
    for (std::size_t r = 0; r < kRelationNames.size(); ++r) {
        const auto relation = static_cast<Relation>(r);
        if (rel && *rel != relation) continue;
        for (auto i : graph.out_edges(self.id, relation)) out.push_back({&edges[i], &graph.node(edges[i].dst)});
        if (relation == Relation::interacts_with) {
            for (auto i : graph.in_edges(self.id, relation)) out.push_back({&edges[i], &graph.node(edges[i].src)});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.node->id != b.node->id) return a.node->id < b.node->id;
        return a.edge->rel < b.edge->rel;
    });
    return out;
}

std::optional<DoseRule> dose_rule_for(const KnowledgeGraph& graph, std::string_view drug, std::int64_t age_months) {
    const KGNode& n = graph.node(drug);
    if (n.kind != NodeKind::Drug) {
        throw KindMismatch("'" + n.id + "' is a " + std::string(to_string(n.kind)) + ", not a Drug");
    }
    for (const auto& rule : graph.dose_rules(drug)) {
        if (rule.covers(age_months)) return rule;
    }
    return std::nullopt;
}

std::optional<DoseRule> nearest_dose_rule(const KnowledgeGraph& graph, std::string_view drug, std::int64_t age_months) {
    if (auto exact = dose_rule_for(graph, drug, age_months)) return exact;
    std::optional<DoseRule> best;
    std::int64_t best_gap = 0;
    for (const auto& rule : graph.dose_rules(drug)) {
        const std::int64_t gap =
            age_months < rule.min_months ? rule.min_months - age_months : age_months - rule.max_months;
        if (!best || gap < best_gap) {
            best = rule;
            best_gap = gap;
        }
    }
    return best;
}

} // namespace kgrx

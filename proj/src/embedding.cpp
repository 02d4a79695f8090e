#include "kgrx/embedding.hpp"

#include "kgrx/errors.hpp"
#include "kgrx/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace kgrx {

bool Embedding::is_zero() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double Embedding::norm() const noexcept {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

Embedding normalized(const std::array<double, kEmbeddingDim>& raw) noexcept {
    Embedding out;
    double sum = 0.0;
    for (double v : raw) sum += v * v;
    if (sum == 0.0) return out;
    const double n = std::sqrt(sum);
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) out.values[i] = raw[i] / n;
    return out;
}

Embedding embed_text(std::string_view text) {
    std::array<double, kEmbeddingDim> raw{};
    for (const auto& tok : tokenize(text)) {
        const std::uint64_t h = fnv1a64(tok.text);
        raw[h % kEmbeddingDim] += (h >> 63) ? -1.0 : 1.0;
    }
    return normalized(raw);
}

double cosine(const Embedding& a, const Embedding& b) noexcept {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Embedding encode_subgraph(std::span<const KGNode* const> nodes, std::span<const KGEdge* const> edges) {
    if (nodes.empty()) return {};
    // Processing in id order keeps the floating-point sums independent of
    // the caller's node order.
    std::map<std::string, Embedding> state;
    for (const KGNode* n : nodes) state.emplace(n->id, embed_text(n->lexical_text()));
    std::map<std::string, std::set<std::string>> adjacent;
    for (const KGEdge* e : edges) {
        if (e->src == e->dst || !state.contains(e->src) || !state.contains(e->dst)) continue;
        adjacent[e->src].insert(e->dst);
        adjacent[e->dst].insert(e->src);
    }
    for (int round = 0; round < 2; ++round) {
        std::map<std::string, Embedding> next;
        for (const auto& [id, h] : state) {
            auto it = adjacent.find(id);
            if (it == adjacent.end()) {
                next.emplace(id, h);
                continue;
            }
            std::array<double, kEmbeddingDim> mean{};
            for (const auto& other : it->second) {
                const auto& v = state.at(other).values;
                for (std::size_t i = 0; i < kEmbeddingDim; ++i) mean[i] += v[i];
            }
            const double count = static_cast<double>(it->second.size());
            std::array<double, kEmbeddingDim> blended{};
            for (std::size_t i = 0; i < kEmbeddingDim; ++i) blended[i] = 0.5 * h.values[i] + 0.5 * (mean[i] / count);
            next.emplace(id, normalized(blended));
        }
        state = std::move(next);
    }
    std::array<double, kEmbeddingDim> total{};
    for (const auto& [id, h] : state) {
        for (std::size_t i = 0; i < kEmbeddingDim; ++i) total[i] += h.values[i];
    }
    const double count = static_cast<double>(state.size());
    for (auto& v : total) v /= count;
    return normalized(total);
}

FusionGate::FusionGate(double alpha) : alpha_(alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("gate alpha must lie in [0, 1]");
}

Embedding fuse(const Embedding& text, const Embedding& graph, FusionGate gate) noexcept {
    const double a = gate.alpha();
    if (a == 1.0) return text;
    if (a == 0.0) return graph;
    // A zero side contributes only a scale factor.
    if (graph.is_zero()) return text;
    if (text.is_zero()) return graph;
    std::array<double, kEmbeddingDim> raw{};
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) raw[i] = a * text.values[i] + (1.0 - a) * graph.values[i];
    return normalized(raw);
}

std::array<double, 11> gate_grid() noexcept {
    std::array<double, 11> grid{};
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) / 10.0;
    return grid;
}

FusionGate fit_gate(std::size_t case_count, const std::function<double(std::size_t, double)>& recall) {
    if (case_count == 0) throw EmptyDevSet();
    double best_alpha = FusionGate::kDefaultAlpha;
    double best_recall = -1.0;
    for (double alpha : gate_grid()) {
        double sum = 0.0;
        for (std::size_t c = 0; c < case_count; ++c) sum += recall(c, alpha);
        const double mean = sum / static_cast<double>(case_count);
        const bool better = mean > best_recall ||
                            (mean == best_recall && std::abs(alpha - 0.5) < std::abs(best_alpha - 0.5));
        if (better) {
            best_recall = mean;
            best_alpha = alpha;
        }
    }
    return FusionGate(best_alpha);
}

} // namespace kgrx

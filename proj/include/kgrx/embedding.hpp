#pragma once

#include "kgrx/kg_store.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>

namespace kgrx {

inline constexpr std::size_t kEmbeddingDim = 256;

/// Either the zero vector or unit length.
struct Embedding {
    std::array<double, kEmbeddingDim> values{};

    bool is_zero() const noexcept;
    double norm() const noexcept;

    friend bool operator==(const Embedding&, const Embedding&) = default;
};

/// Scales to unit length; the zero vector stays zero.
Embedding normalized(const std::array<double, kEmbeddingDim>& raw) noexcept;

/// Signed feature hashing of the tokenizer output: each token adds +1 or -1
/// (bit 63 of its FNV-1a-64 hash) at component hash % 256.
Embedding embed_text(std::string_view text);

/// 0 when either side is zero; clamped to [-1, 1].
double cosine(const Embedding& a, const Embedding& b) noexcept;

/// Parameter-free GraphSAGE-style encoder: every node starts at
/// embed_text(name + synonyms), then two synchronous rounds of
/// h <- normalize(0.5 h + 0.5 mean(neighbors)). Edges with an endpoint
/// outside the fragment are ignored. Returns the normalized mean state.
Embedding encode_subgraph(std::span<const KGNode* const> nodes, std::span<const KGEdge* const> edges);

class FusionGate {
public:
    static constexpr double kDefaultAlpha = 0.5;

    FusionGate() = default;
    /// Throws ConfigError outside [0, 1].
    explicit FusionGate(double alpha);

    double alpha() const noexcept { return alpha_; }

private:
    double alpha_ = kDefaultAlpha;
};

/// normalize(alpha * text + (1 - alpha) * graph). The endpoints of the gate
/// return the selected input unchanged.
Embedding fuse(const Embedding& text, const Embedding& graph, FusionGate gate) noexcept;

/// The eleven alphas searched by fit_gate: 0.0, 0.1, ..., 1.0.
std::array<double, 11> gate_grid() noexcept;

/// Grid search over gate_grid() maximizing the mean of `recall(case, alpha)`
/// over `case_count` dev cases. Ties go to the alpha closest to 0.5, then to
/// the smaller alpha. Throws EmptyDevSet when case_count is 0.
FusionGate fit_gate(std::size_t case_count, const std::function<double(std::size_t, double)>& recall);

} // namespace kgrx

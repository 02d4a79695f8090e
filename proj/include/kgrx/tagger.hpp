#pragma once

#include "kgrx/kg_store.hpp"
#include "kgrx/record.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace kgrx {

enum class BioTag { O, B_Condition, I_Condition, B_Symptom, I_Symptom };

inline constexpr std::size_t kTagCount = 5;

std::string_view to_string(BioTag t) noexcept;

/// Sparse feature vector of one token: (index, value) pairs.
using SparseFeatures = std::vector<std::pair<std::size_t, double>>;

/// Token sequence of a record (sections in order) with features and, when
/// gold entities were supplied, the gold BIO tags.
struct TaggedSequence {
    std::vector<SparseFeatures> features;
    std::vector<BioTag> tags;
    std::size_t size() const { return features.size(); }
};

/// Linear-softmax BIO tagger. Features per token: signed hash of the token
/// (256 slots), signed hash of the previous token in the section (256 slots),
/// an in-lexicon flag from the graph, and a bias.
class TokenTagger {
public:
    static constexpr std::size_t kFeatureCount = 2 * 256 + 2;
    static constexpr std::size_t kParamCount = kTagCount * kFeatureCount;

    /// All-zero weights: every token gets the uniform tag distribution.
    TokenTagger() : weights_(kParamCount, 0.0) {}

    std::span<const double> weights() const { return weights_; }
    std::span<double> weights() { return weights_; }

    std::array<double, kTagCount> logits(const SparseFeatures& x) const;

    friend bool operator==(const TokenTagger&, const TokenTagger&) = default;

private:
    std::vector<double> weights_;
};

/// Features for every token; tags from `gold` entities (Condition and Symptom
/// nodes only, everything else is O).
TaggedSequence encode_sequence(const ClinicalRecord& record, const KnowledgeGraph& graph,
                               std::span<const EntityMention> gold);

/// Summed negative log-likelihood of the gold tags. When `gradient` is
/// non-null it receives d NLL / d weights (resized to kParamCount).
double sequence_nll(const TokenTagger& tagger, const TaggedSequence& seq, std::vector<double>* gradient = nullptr);

/// Throws MissingGold when the record has no gold annotation.
double tagger_nll(const TokenTagger& tagger, const ClinicalRecord& record, const KnowledgeGraph& graph);

struct TaggerTrainOptions {
    std::size_t epochs = 100;
    double learning_rate = 0.1;
    std::uint64_t seed = 7;
};

struct TaggerTrainResult {
    TokenTagger tagger;
    /// Mean per-record NLL before training (index 0) and after each epoch.
    std::vector<double> epoch_mean_nll;
};

/// Full-batch gradient descent on the mean per-token NLL. The batch gradient
/// is accumulated in a seed-shuffled record order. Throws EmptyCorpus.
TaggerTrainResult train_tagger(std::span<const ClinicalRecord> corpus, const KnowledgeGraph& graph,
                               const TaggerTrainOptions& options = {});

} // namespace kgrx

#pragma once

#include "kgrx/record.hpp"

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>

namespace kgrx {

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MatchCounts {
    std::size_t matched = 0;
    std::size_t predicted = 0;
    std::size_t gold = 0;

    MatchCounts& operator+=(const MatchCounts& o) {
        matched += o.matched;
        predicted += o.predicted;
        gold += o.gold;
        return *this;
    }
};

/// Multiset matches over (node_id, negated, section); spans are ignored.
MatchCounts ner_counts(std::span<const EntityMention> predicted, std::span<const EntityMention> gold);

/// Precision and recall are 0 on an empty denominator.
PrecisionRecall precision_recall(const MatchCounts& counts);

PrecisionRecall ner_f1(std::span<const EntityMention> predicted, std::span<const EntityMention> gold);

/// Corpus BLEU-4 on whitespace tokens, add-one smoothing for n > 1, standard
/// brevity penalty. Result in [0, 100]. Throws LengthMismatch.
double bleu4(std::span<const std::string> candidates, std::span<const std::string> references);

/// Jaccard overlap, 1 when both sets are empty.
double eas(const std::set<std::string>& cited, const std::set<std::string>& gold);

/// Percentile bootstrap interval of the mean. Throws TooFewSamples below two
/// samples.
std::pair<double, double> bootstrap_ci(std::span<const double> samples, std::size_t resamples = 1000,
                                       double level = 0.95, std::uint64_t seed = 0);

} // namespace kgrx

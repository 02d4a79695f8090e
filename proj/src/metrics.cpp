#include "kgrx/metrics.hpp"

#include "kgrx/errors.hpp"
#include "kgrx/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>
#include <vector>

namespace kgrx {

namespace {

using MentionKey = std::tuple<std::string, bool, Section>;

std::map<MentionKey, std::size_t> tally(std::span<const EntityMention> mentions) {
    std::map<MentionKey, std::size_t> out;
    for (const auto& m : mentions) ++out[{m.node_id, m.negated, m.section}];
    return out;
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::map<std::vector<std::string>, std::size_t> ngrams(const std::vector<std::string>& w, std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> out;
    for (std::size_t i = 0; i + n <= w.size(); ++i) ++out[std::vector<std::string>(w.begin() + i, w.begin() + i + n)];
    return out;
}

/// Mean shifted by the first value so that constant inputs come back exactly.
double shifted_mean(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x - xs[0];
    return xs[0] + sum / static_cast<double>(xs.size());
}

double percentile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    if (sorted[lo] == sorted[hi]) return sorted[lo];
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

MatchCounts ner_counts(std::span<const EntityMention> predicted, std::span<const EntityMention> gold) {
    MatchCounts c;
    c.predicted = predicted.size();
    c.gold = gold.size();
    const auto p = tally(predicted);
    const auto g = tally(gold);
    for (const auto& [key, count] : p) {
        if (auto it = g.find(key); it != g.end()) c.matched += std::min(count, it->second);
    }
    return c;
}

PrecisionRecall precision_recall(const MatchCounts& c) {
    PrecisionRecall r;
    if (c.predicted > 0) r.precision = static_cast<double>(c.matched) / static_cast<double>(c.predicted);
    if (c.gold > 0) r.recall = static_cast<double>(c.matched) / static_cast<double>(c.gold);
    if (c.predicted + c.gold > 0) r.f1 = 2.0 * static_cast<double>(c.matched) / static_cast<double>(c.predicted + c.gold);
    return r;
}

PrecisionRecall ner_f1(std::span<const EntityMention> predicted, std::span<const EntityMention> gold) {
    return precision_recall(ner_counts(predicted, gold));
}

double bleu4(std::span<const std::string> candidates, std::span<const std::string> references) {
    if (candidates.size() != references.size()) throw LengthMismatch("bleu4: candidate and reference counts differ");
    std::array<double, 4> matched{};
    std::array<double, 4> total{};
    double cand_len = 0.0;
    double ref_len = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto c = words(candidates[i]);
        const auto r = words(references[i]);
        cand_len += static_cast<double>(c.size());
        ref_len += static_cast<double>(r.size());
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto cg = ngrams(c, n);
            const auto rg = ngrams(r, n);
            for (const auto& [gram, count] : cg) {
                total[n - 1] += static_cast<double>(count);
                if (auto it = rg.find(gram); it != rg.end()) {
                    matched[n - 1] += static_cast<double>(std::min(count, it->second));
                }
            }
        }
    }
    if (cand_len == 0.0 || matched[0] == 0.0) return 0.0;
    double log_sum = std::log(matched[0] / total[0]);
    for (std::size_t n = 1; n < 4; ++n) log_sum += std::log((matched[n] + 1.0) / (total[n] + 1.0));
    const double bp = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
    return std::clamp(100.0 * bp * std::exp(log_sum / 4.0), 0.0, 100.0);
}

double eas(const std::set<std::string>& cited, const std::set<std::string>& gold) {
    if (cited.empty() && gold.empty()) return 1.0;
    std::size_t common = 0;
    for (const auto& id : cited) common += gold.count(id);
    return static_cast<double>(common) / static_cast<double>(cited.size() + gold.size() - common);
}

std::pair<double, double> bootstrap_ci(std::span<const double> samples, std::size_t resamples, double level,
                                       std::uint64_t seed) {
    if (samples.size() < 2) throw TooFewSamples();
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap level must lie in (0, 1)");
    if (resamples == 0) throw ConfigError("bootstrap needs at least one resample");
    Rng rng(seed);
    std::vector<double> means;
    means.reserve(resamples);
    std::vector<double> draw(samples.size());
    for (std::size_t b = 0; b < resamples; ++b) {
        for (auto& x : draw) x = samples[rng.index(samples.size())];
        means.push_back(shifted_mean(draw));
    }
    std::sort(means.begin(), means.end());
    const double alpha = (1.0 - level) / 2.0;
    return {percentile(means, alpha), percentile(means, 1.0 - alpha)};
}

} // namespace kgrx

#include "kgrx/tagger.hpp"

#include "kgrx/errors.hpp"
#include "kgrx/record_parser.hpp"
#include "kgrx/rng.hpp"
#include "kgrx/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kgrx {

namespace {

constexpr std::size_t kHashSlots = 256;
constexpr std::size_t kPrevOffset = kHashSlots;
constexpr std::size_t kLexiconFlag = 2 * kHashSlots;
constexpr std::size_t kBias = 2 * kHashSlots + 1;

std::pair<std::size_t, double> hashed(std::string_view token, std::size_t offset) {
    const std::uint64_t h = fnv1a64(token);
    return {offset + h % kHashSlots, (h >> 63) ? -1.0 : 1.0};
}

BioTag tag_for(NodeKind kind, bool first) {
    if (kind == NodeKind::Condition) return first ? BioTag::B_Condition : BioTag::I_Condition;
    if (kind == NodeKind::Symptom) return first ? BioTag::B_Symptom : BioTag::I_Symptom;
    return BioTag::O;
}

} // namespace

std::string_view to_string(BioTag t) noexcept {
    switch (t) {
    case BioTag::O: return "O";
    case BioTag::B_Condition: return "B-Condition";
    case BioTag::I_Condition: return "I-Condition";
    case BioTag::B_Symptom: return "B-Symptom";
    case BioTag::I_Symptom: return "I-Symptom";
    }
    return "O";
}

std::array<double, kTagCount> TokenTagger::logits(const SparseFeatures& x) const {
    std::array<double, kTagCount> out{};
    for (std::size_t k = 0; k < kTagCount; ++k) {
        const double* row = weights_.data() + k * kFeatureCount;
        double s = 0.0;
        for (const auto& [index, value] : x) s += row[index] * value;
        out[k] = s;
    }
    return out;
}

TaggedSequence encode_sequence(const ClinicalRecord& record, const KnowledgeGraph& graph,
                               std::span<const EntityMention> gold) {
    TaggedSequence seq;
    for (auto section : kSections) {
        const std::string& text = record.text(section);
        const auto tokens = tokenize(text);
        const auto lexicon_hits = scan_section(text, section, graph);
        std::string_view prev = "<s>";
        bool prev_in_entity = false;
        const EntityMention* prev_entity = nullptr;
        for (const auto& tok : tokens) {
            SparseFeatures x;
            x.push_back(hashed(tok.text, 0));
            x.push_back(hashed(prev, kPrevOffset));
            const bool in_lexicon = std::any_of(lexicon_hits.begin(), lexicon_hits.end(), [&](const EntityMention& m) {
                return tok.begin >= m.begin && tok.end <= m.end;
            });
            if (in_lexicon) x.emplace_back(kLexiconFlag, 1.0);
            x.emplace_back(kBias, 1.0);
            seq.features.push_back(std::move(x));

            const EntityMention* entity = nullptr;
            for (const auto& m : gold) {
                if (m.section == section && tok.begin >= m.begin && tok.end <= m.end) {
                    entity = &m;
                    break;
                }
            }
            BioTag tag = BioTag::O;
            if (entity != nullptr) {
                const bool first = !(prev_in_entity && prev_entity == entity);
                tag = tag_for(graph.node(entity->node_id).kind, first);
            }
            seq.tags.push_back(tag);
            prev_in_entity = entity != nullptr;
            prev_entity = entity;
            prev = tok.text;
        }
    }
    return seq;
}

double sequence_nll(const TokenTagger& tagger, const TaggedSequence& seq, std::vector<double>* gradient) {
    if (gradient != nullptr) gradient->assign(TokenTagger::kParamCount, 0.0);
    // Extended-precision accumulation keeps the uniform case at exactly T*ln(5).
    long double total = 0.0L;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const auto z = tagger.logits(seq.features[t]);
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - m);
        const double log_norm = std::log(sum);
        const auto gold = static_cast<std::size_t>(seq.tags[t]);
        total += static_cast<long double>(log_norm - (z[gold] - m));
        if (gradient != nullptr) {
            for (std::size_t k = 0; k < kTagCount; ++k) {
                const double coeff = std::exp(z[k] - m) / sum - (k == gold ? 1.0 : 0.0);
                double* row = gradient->data() + k * TokenTagger::kFeatureCount;
                for (const auto& [index, value] : seq.features[t]) row[index] += coeff * value;
            }
        }
    }
    return static_cast<double>(total);
}

double tagger_nll(const TokenTagger& tagger, const ClinicalRecord& record, const KnowledgeGraph& graph) {
    if (!record.gold) throw MissingGold();
    return sequence_nll(tagger, encode_sequence(record, graph, record.gold->entities));
}

TaggerTrainResult train_tagger(std::span<const ClinicalRecord> corpus, const KnowledgeGraph& graph,
                               const TaggerTrainOptions& options) {
    if (corpus.empty()) throw EmptyCorpus();
    std::vector<TaggedSequence> data;
    std::size_t token_count = 0;
    for (const auto& r : corpus) {
        if (!r.gold) throw MissingGold();
        data.push_back(encode_sequence(r, graph, r.gold->entities));
        token_count += data.back().size();
    }
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(options.seed);
    rng.shuffle(order);

    TaggerTrainResult result;
    const double records = static_cast<double>(data.size());
    const double scale = token_count == 0 ? 0.0 : options.learning_rate / static_cast<double>(token_count);
    std::vector<double> batch(TokenTagger::kParamCount);
    std::vector<double> grad;
    for (std::size_t epoch = 0; epoch <= options.epochs; ++epoch) {
        std::fill(batch.begin(), batch.end(), 0.0);
        double loss = 0.0;
        for (auto idx : order) {
            loss += sequence_nll(result.tagger, data[idx], &grad);
            for (std::size_t p = 0; p < grad.size(); ++p) batch[p] += grad[p];
        }
        result.epoch_mean_nll.push_back(loss / records);
        if (epoch == options.epochs) break;
        auto w = result.tagger.weights();
        for (std::size_t p = 0; p < w.size(); ++p) w[p] -= scale * batch[p];
    }
    return result;
}

} // namespace kgrx

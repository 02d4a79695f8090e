#pragma once

#include "kgrx/kg_store.hpp"
#include "kgrx/record.hpp"
#include "kgrx/rng.hpp"

#include <cstddef>
#include <cstdint>

namespace kgrx {

struct SynthConfig {
    std::uint64_t seed = 1;
    double scale = 1.0; ///< 1.0 gives roughly 1,200 nodes and 5,600 edges
};

/// Valid benchmark-scale graph with the fixture's schema and made-up
/// vocabulary. Deterministic per config.
KnowledgeGraph synthesize_graph(const SynthConfig& config);

/// Small random valid graph (all eight kinds present once nodes >= 16) for
/// property tests.
KnowledgeGraph random_small_graph(Rng& rng, std::size_t nodes);

/// Record whose sections mix node names and synonyms from `graph` with filler
/// words; profile is a plausible random child.
ClinicalRecord random_record(Rng& rng, const KnowledgeGraph& graph);

} // namespace kgrx

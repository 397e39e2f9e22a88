// Batch assembly and instance sampling for the contrastive tasks:
// relation-proportional positive pair draws, disjointness-constrained
// negatives from the full triple pool, and per-document ED draws.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "erpt/corpus.hpp"
#include "erpt/objectives.hpp"

namespace erpt {

struct SamplerError : std::runtime_error {
  explicit SamplerError(const std::string& what) : std::runtime_error(what) {}
};

// Triple with the index of its document within the batch.
struct BatchTriple {
  std::size_t doc_index = 0;
  Triple triple;
  bool operator==(const BatchTriple&) const = default;
};

struct Batch {
  std::vector<std::size_t> doc_indices;      // into the corpus
  std::vector<BatchTriple> all;              // pooled T
  std::vector<BatchTriple> positives;        // pooled T+
};

struct RDSample {
  BatchTriple anchor;
  BatchTriple positive;
  std::vector<BatchTriple> negatives;
};

bool in_scope(const Triple& t, PairScope scope);

// P(r) proportional to its count among relations with >= 2 positives.
// Keys sorted by relation id; empty map when no relation is eligible.
std::map<std::string, double> relation_proportional_weights(
    const std::vector<BatchTriple>& positives, PairScope scope = PairScope::all);

// Draw order: relation, anchor, positive, negatives. Negatives come
// from the full pool (no_relation included) and must not equal A or B
// nor share A's head or A's tail. nullopt when sampling is impossible
// after the retry bound.
std::optional<RDSample> sample_rd(const std::vector<BatchTriple>& all,
                                  const std::vector<BatchTriple>& positives,
                                  int n_neg, std::mt19937_64& rng,
                                  PairScope scope = PairScope::all,
                                  int retry_bound = 8);

// Uniform draw over one document's positive triples.
std::optional<Triple> sample_ed(const DocumentTripleSet& tset,
                                std::mt19937_64& rng);

// Per-epoch document shuffle; deterministic in (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t doc_count, std::uint64_t seed,
                                     std::size_t epoch, bool shuffle = true);

// Batch for a global step index, with the pooled triple sets attached.
Batch batch_for_step(const std::vector<DocumentTripleSet>& tsets,
                     std::size_t batch_size_docs, std::uint64_t seed,
                     std::size_t step, bool shuffle = true);

// Stable derivation of a per-step rng stream from (seed, index).
std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace erpt

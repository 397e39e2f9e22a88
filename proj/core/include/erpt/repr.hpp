// Mention, entity and relation representations pooled from encoder
// hidden states, plus the entity-marker encoding alternative.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "erpt/corpus.hpp"
#include "erpt/tensor.hpp"

namespace erpt {

struct ReprError : std::runtime_error {
  explicit ReprError(const std::string& what) : std::runtime_error(what) {}
};

struct EntityRepr {
  std::string entity_id;
  Tensor vector;  // (hidden_dim)
};

struct RelationRepr {
  std::string head_id;
  std::string tail_id;
  Tensor vector;  // (2 * hidden_dim)
};

// Mean over hidden rows span.start..span.end inclusive.
Tensor mention_repr(const Tensor& hidden, const Span& span);

// Unweighted mean over the per-occurrence mention representations.
EntityRepr entity_repr(const Tensor& hidden, const std::string& entity_id,
                       const std::vector<Span>& mentions);

// [e_head; e_tail] concatenation, head half first.
RelationRepr relation_repr(const EntityRepr& head, const EntityRepr& tail);

// Entity-marker rewrite: every mention wrapped in a per-entity random
// marker pair. marker_spans hold the positions of the [S] tokens (one
// single-token span per occurrence); under marker mode the entity is
// represented by the mean of its start-token hidden states.
struct MarkedDocument {
  std::vector<std::string> tokens;
  std::vector<std::string> entity_ids;            // first-mention order
  std::vector<int> marker_pair;                   // pair index per entity
  std::vector<std::vector<Span>> marker_spans;    // [S] positions per entity
  std::vector<std::pair<std::size_t, std::size_t>> sentence_bounds;
};

template <class Rng>
MarkedDocument apply_entity_markers(const Document& doc, Rng& rng);

struct EmbeddingRow {
  std::string doc_id;
  std::string key;   // entity_id or head_id:tail_id
  std::string kind;  // "entity" | "relation"
  std::string label;
  std::vector<double> vec;
};

std::string embeddings_to_csv(const std::vector<EmbeddingRow>& rows);

// --- implementation ------------------------------------------------

namespace detail_repr {
MarkedDocument apply_entity_markers_impl(const Document& doc,
                                         const std::vector<int>& pair_choice);
}

template <class Rng>
MarkedDocument apply_entity_markers(const Document& doc, Rng& rng) {
  const auto entities = doc.entity_order();
  if (entities.size() > static_cast<std::size_t>(100))
    throw ReprError("apply_entity_markers: more than 100 distinct entities in '" +
                    doc.id + "'");
  // distinct random pairs: partial Fisher-Yates over 0..99
  std::vector<int> pool(100);
  for (int i = 0; i < 100; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<int> choice;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
    choice.push_back(pool[i]);
  }
  return detail_repr::apply_entity_markers_impl(doc, choice);
}

}  // namespace erpt

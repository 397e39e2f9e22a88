// Distantly supervised corpus construction: annotated documents, a
// knowledge base of directed triples, per-document triple sets with
// no_relation fallback, and the document filtering rules.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace erpt {

struct CorpusError : std::runtime_error {
  explicit CorpusError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr const char* kNoRelation = "no_relation";

struct Span {
  std::size_t start = 0;  // inclusive token indices
  std::size_t end = 0;
  auto operator<=>(const Span&) const = default;
};

struct EntityMention {
  std::string entity_id;
  Span span;
  std::size_t occurrence_index = 0;  // k-th occurrence of this entity
};

struct Document {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> sentence_bounds;  // [start,end)
  std::vector<EntityMention> mentions;

  // Distinct entity ids in order of first mention.
  std::vector<std::string> entity_order() const;
  // Mentions of one entity, in document order.
  std::vector<Span> mentions_of(const std::string& entity_id) const;
  // Index of the sentence containing token position, if any.
  std::optional<std::size_t> sentence_of(std::size_t token_pos) const;
};

struct KnowledgeBase {
  std::set<std::tuple<std::string, std::string, std::string>> triples;  // (h, r, t)
  std::map<std::string, std::string> relation_names;

  // Relations for an ordered pair, sorted by relation id.
  std::vector<std::string> relations_for(const std::string& head,
                                         const std::string& tail) const;
};

enum class SpanKind { intra_sentence, inter_sentence };

struct Triple {
  std::string doc_id;
  std::string head_id;
  std::string relation_id;  // possibly no_relation
  std::string tail_id;
  SpanKind span_kind = SpanKind::intra_sentence;

  bool operator==(const Triple&) const = default;
};

struct DocumentTripleSet {
  std::vector<Triple> all;        // T_i
  std::vector<Triple> positives;  // T_i^+
};

struct ParseIssue {
  std::size_t line = 0;
  std::string doc_id;
  std::string message;
};

struct ParsedCorpus {
  std::vector<Document> documents;
  std::vector<ParseIssue> issues;
};

// Line-delimited JSON records: {id, tokens, sentence_bounds, mentions}.
// Malformed lines are reported in issues, not fatal.
ParsedCorpus parse_corpus(const std::string& path);

// Validate one in-memory document against the Document invariants.
// Throws CorpusError naming the document on violation.
void validate_document(const Document& doc);

// KB TSV: head \t relation \t tail. Name table TSV: relation \t name.
KnowledgeBase parse_kb(const std::string& triples_path,
                       const std::string& names_path);

using ExclusionSet = std::set<std::pair<std::string, std::string>>;
ExclusionSet parse_exclusions(const std::string& path);

// Every ordered pair of distinct entities in doc gets one Triple per
// matching KB relation, or a single no_relation Triple. Excluded pairs
// are demoted to no_relation (they stay available as negatives).
DocumentTripleSet build_doc_triples(const Document& doc, const KnowledgeBase& kb,
                                    const ExclusionSet& exclusion = {});

// Keep documents with tokens > min_words, distinct entities >
// min_entities and positives > min_triples (all strict).
struct FilteredCorpus {
  std::vector<Document> documents;
  std::vector<DocumentTripleSet> triple_sets;
};
FilteredCorpus filter_documents(const std::vector<Document>& docs,
                                const std::vector<DocumentTripleSet>& tsets,
                                std::size_t min_words = 128,
                                std::size_t min_entities = 4,
                                std::size_t min_triples = 4);

struct CorpusStats {
  std::size_t doc_count = 0;
  double mean_tokens = 0.0;
  double mean_entities = 0.0;
  double mean_positive_triples = 0.0;
  double mean_occurrences_per_entity = 0.0;
};
CorpusStats corpus_stats(const std::vector<Document>& docs,
                         const std::vector<DocumentTripleSet>& tsets);

std::string stats_to_text(const CorpusStats& s);
std::string stats_to_csv(const CorpusStats& s);

}  // namespace erpt

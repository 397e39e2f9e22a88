// Post-training verification on synthetic corpora with planted
// relation and type structure: frozen-encoder probes and embedding
// cluster diagnostics.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "erpt/corpus.hpp"
#include "erpt/encoder.hpp"
#include "erpt/repr.hpp"

namespace erpt {

struct ProbeError : std::runtime_error {
  explicit ProbeError(const std::string& what) : std::runtime_error(what) {}
};

struct PlantedCorpus {
  std::vector<Document> documents;
  KnowledgeBase kb;
  std::map<std::string, std::string> entity_types;  // entity_id -> type label
  std::vector<std::string> train_doc_ids;
  std::vector<std::string> test_doc_ids;

  bool is_train(const std::string& doc_id) const;
};

// Template documents expressing relation_count relations over a closed
// entity set. Train and test documents draw from disjoint entity pools
// so no test entity pair ever occurs as a train positive. Every
// document passes the default corpus filters.
PlantedCorpus generate_planted_corpus(std::size_t relation_count,
                                      std::size_t entity_count,
                                      std::size_t doc_count, std::uint64_t seed);

struct ProbeOptions {
  int epochs = 60;
  double lr = 5e-3;
  std::uint64_t seed = 1;
  int no_relation_per_doc = 2;  // sampled no_relation training examples
};

struct ProbeResult {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
};

// Bilinear relation classifier score(r|e1,e2) = e1^T W_r e2 + b_r over
// the planted relations plus no_relation, on frozen entity
// representations. Throws if a relation is absent from the train split.
ProbeResult fit_relation_probe(const EncoderConfig& cfg, const EncoderParams& params,
                               const PlantedCorpus& corpus,
                               const ProbeOptions& opts = {});

// Linear softmax entity-typing head over frozen entity representations.
ProbeResult fit_typing_probe(const EncoderConfig& cfg, const EncoderParams& params,
                             const PlantedCorpus& corpus,
                             const ProbeOptions& opts = {});

struct ClusterMetrics {
  double silhouette = 0.0;   // mean silhouette, cosine distance
  double nn_accuracy = 0.0;  // leave-one-out 1-NN label accuracy
};

ClusterMetrics cluster_metrics(const std::vector<std::vector<double>>& points,
                               const std::vector<std::string>& labels);

// One row per entity (label = planted type) and per positive entity
// pair (label = relation), over all documents.
std::vector<EmbeddingRow> export_embeddings(const EncoderConfig& cfg,
                                            const EncoderParams& params,
                                            const PlantedCorpus& corpus);

// Frozen entity representations of one document as plain vectors.
std::map<std::string, std::vector<double>> frozen_entity_reprs(
    const EncoderConfig& cfg, const EncoderParams& params, const Document& doc,
    const Vocabulary& vocab);

// The vocabulary induced by a planted corpus (sorted unique content
// tokens), matching what pre-training on it uses.
Vocabulary planted_vocabulary(const PlantedCorpus& corpus);

}  // namespace erpt

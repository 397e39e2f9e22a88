// Whitespace-token vocabulary with reserved special/marker ids, a
// small post-LN transformer encoder, the MLM projection head, and the
// prefixed-input construction used by the entity discrimination task.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erpt/corpus.hpp"
#include "erpt/tensor.hpp"

namespace erpt {

struct EncoderError : std::runtime_error {
  explicit EncoderError(const std::string& what) : std::runtime_error(what) {}
};

// Reserved ids 0..204: [PAD] [UNK] [CLS] [SEP] [MASK] then the 100
// marker pairs [S1] [E1] ... [S100] [E100]. Content tokens follow.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kNumMarkerPairs = 100;
inline constexpr int kFirstMarkerId = 5;
inline constexpr int kNumReserved = 5 + 2 * kNumMarkerPairs;  // 205

inline int marker_start_id(int pair_index) { return kFirstMarkerId + 2 * pair_index; }
inline int marker_end_id(int pair_index) { return kFirstMarkerId + 2 * pair_index + 1; }

class Vocabulary {
 public:
  // Content tokens are case-folded; duplicates after folding rejected.
  explicit Vocabulary(const std::vector<std::string>& content_tokens);

  static Vocabulary load(const std::string& path);  // one content token per line
  void save(const std::string& path) const;

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int lookup(const std::string& token) const;  // [UNK] for unknown, case-folded
  const std::string& token(int id) const;
  bool is_reserved(int id) const { return id >= 0 && id < kNumReserved; }

  // FNV-1a over the canonical token list.
  std::uint64_t hash() const;

 private:
  std::map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

std::vector<int> tokenize(const std::vector<std::string>& tokens,
                          const Vocabulary& vocab);

struct EncoderConfig {
  std::size_t layers = 4;
  std::size_t hidden_dim = 128;
  std::size_t heads = 4;
  std::size_t ffn_dim = 512;
  std::size_t max_seq_len = 256;
  std::size_t vocab_size = 0;  // set from the vocabulary
  bool tie_mlm = false;

  void validate() const;
};

// All trainable tensors, enumerable in declaration order for the
// optimizer and the checkpoint format.
struct EncoderParams {
  struct Layer {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln1_g, ln1_b;
    Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Tensor ln2_g, ln2_b;
  };
  Tensor tok_emb;  // (vocab, hidden)
  Tensor pos_emb;  // (max_seq, hidden)
  std::vector<Layer> layers;
  Tensor mlm_w;  // (hidden, vocab)
  Tensor mlm_b;  // (vocab)

  static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed);
  std::vector<std::pair<std::string, Tensor>> named() const;
};

// Hidden states (len, hidden_dim). [PAD] positions are masked out of
// attention. Throws if the sequence exceeds max_seq_len.
Tensor encode(const std::vector<int>& ids, const EncoderConfig& cfg,
              const EncoderParams& params);

Tensor mlm_logits(const Tensor& hidden, const EncoderConfig& cfg,
                  const EncoderParams& params);

// The prefixed ED input: relation name ++ head mention ++ [SEP] ++ doc,
// truncated, with every surviving mention span remapped past the prefix.
struct EDInput {
  bool ok = false;  // false: head or tail lost all mentions to truncation
  std::vector<int> ids;
  std::size_t prefix_len = 0;
  std::vector<std::string> entity_ids;          // entities with >=1 surviving mention
  std::vector<std::vector<Span>> mention_spans; // remapped, parallel to entity_ids
  std::size_t head_index = 0;  // into entity_ids
  std::size_t tail_index = 0;
};

EDInput build_ed_input(const Document& doc, const Triple& triple,
                       const KnowledgeBase& kb, const Vocabulary& vocab,
                       std::size_t max_seq_len);

// Same construction over pre-tokenized content with explicit mention
// spans (used for marker mode, where the doc tokens are rewritten).
EDInput build_ed_input_tokens(const std::vector<std::string>& doc_tokens,
                              const std::vector<std::string>& entity_ids,
                              const std::vector<std::vector<Span>>& mention_spans,
                              const std::string& head_id, const std::string& tail_id,
                              const std::string& relation_name,
                              const std::vector<std::string>& head_surface,
                              const Vocabulary& vocab, std::size_t max_seq_len);

}  // namespace erpt

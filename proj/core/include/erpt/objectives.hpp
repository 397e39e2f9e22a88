// The three pre-training losses: entity discrimination, relation
// discrimination and masked language modeling, plus their joint sum.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "erpt/encoder.hpp"
#include "erpt/repr.hpp"
#include "erpt/tensor.hpp"

namespace erpt {

struct ObjectiveError : std::runtime_error {
  explicit ObjectiveError(const std::string& what) : std::runtime_error(what) {}
};

enum class PairScope { all, single_sentence, cross_sentence };
enum class ReprMode { mean_pool, entity_marker };

struct TrainConfig {
  double temperature = 0.05;
  int n_neg = 64;
  double mask_rate = 0.15;
  double base_lr = 3e-5;
  double warmup_frac = 0.2;
  double weight_decay = 1e-5;
  double clip_norm = 1.0;
  int total_steps = 500;
  int batch_size_docs = 8;
  int checkpoint_interval = 100;
  int rd_per_batch_cap = 32;
  int grad_accum = 1;
  std::uint64_t seed = 0;
  bool loss_ed = true;
  bool loss_rd = true;
  bool loss_mlm = true;
  PairScope rd_scope = PairScope::all;
  ReprMode repr_mode = ReprMode::mean_pool;

  void validate() const;
};

struct EDLossResult {
  Tensor loss;
  bool degenerate = false;  // no candidate entities beside head and tail
};

// Contrastive softmax over cosine similarities: the tail entity against
// every other entity in the document. entity_reps come from the encoding
// of the prefixed input; head_index != tail_index required.
EDLossResult ed_loss(const std::vector<EntityRepr>& entity_reps,
                     std::size_t head_index, std::size_t tail_index,
                     double temperature);

// Anchor-positive relation pair against negative relation reps.
Tensor rd_loss(const RelationRepr& anchor, const RelationRepr& positive,
               const std::vector<RelationRepr>& negatives, double temperature);

struct MaskResult {
  std::vector<int> masked_ids;
  std::vector<std::size_t> positions;
  std::vector<int> targets;
};

// Independent per-position selection at mask_rate over the maskable
// positions; 80% [MASK] / 10% random content token / 10% unchanged.
MaskResult mask_tokens(const std::vector<int>& ids,
                       const std::vector<bool>& maskable, double mask_rate,
                       std::mt19937_64& rng, const Vocabulary& vocab);

// Maskable positions of a sequence: at or past prefix_len and not a
// reserved (special or marker) id.
std::vector<bool> maskable_positions(const std::vector<int>& ids,
                                     std::size_t prefix_len,
                                     const Vocabulary& vocab);

// Mean cross-entropy over masked positions; zero when none.
Tensor mlm_loss(const Tensor& logits, const std::vector<std::size_t>& positions,
                const std::vector<int>& targets);

Tensor joint_loss(const Tensor& l_ed, const Tensor& l_rd, const Tensor& l_mlm);

}  // namespace erpt

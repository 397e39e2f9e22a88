#include "erpt/objectives.hpp"

namespace erpt {

void TrainConfig::validate() const {
  if (temperature <= 0) throw ObjectiveError("config: temperature must be > 0");
  if (mask_rate <= 0 || mask_rate >= 1)
    throw ObjectiveError("config: mask_rate must lie in (0,1)");
  if (n_neg < 1) throw ObjectiveError("config: n_neg must be >= 1");
  if (total_steps <= 0) throw ObjectiveError("config: total_steps must be > 0");
  if (batch_size_docs <= 0) throw ObjectiveError("config: batch_size_docs must be > 0");
}

EDLossResult ed_loss(const std::vector<EntityRepr>& entity_reps,
                     std::size_t head_index, std::size_t tail_index,
                     double temperature) {
  if (head_index == tail_index)
    throw ObjectiveError("ed_loss: head and tail entity coincide");
  if (head_index >= entity_reps.size() || tail_index >= entity_reps.size())
    throw ObjectiveError("ed_loss: entity index out of range");
  const double inv_t = 1.0 / temperature;
  std::vector<Tensor> scores;
  scores.push_back(scale(
      cosine_similarity(entity_reps[head_index].vector,
                        entity_reps[tail_index].vector),
      inv_t));
  for (std::size_t l = 0; l < entity_reps.size(); ++l) {
    if (l == head_index || l == tail_index) continue;
    scores.push_back(scale(cosine_similarity(entity_reps[head_index].vector,
                                             entity_reps[l].vector),
                           inv_t));
  }
  if (scores.size() == 1) return {Tensor::scalar(0.0), true};
  return {neg_log_softmax_first(concat(scores)), false};
}

Tensor rd_loss(const RelationRepr& anchor, const RelationRepr& positive,
               const std::vector<RelationRepr>& negatives, double temperature) {
  if (negatives.empty()) throw ObjectiveError("rd_loss: no negative samples");
  const double inv_t = 1.0 / temperature;
  std::vector<Tensor> scores;
  scores.push_back(scale(cosine_similarity(anchor.vector, positive.vector), inv_t));
  for (const auto& neg : negatives)
    scores.push_back(scale(cosine_similarity(anchor.vector, neg.vector), inv_t));
  return neg_log_softmax_first(concat(scores));
}

std::vector<bool> maskable_positions(const std::vector<int>& ids,
                                     std::size_t prefix_len,
                                     const Vocabulary& vocab) {
  std::vector<bool> out(ids.size(), false);
  for (std::size_t i = prefix_len; i < ids.size(); ++i)
    out[i] = !vocab.is_reserved(ids[i]);
  return out;
}

MaskResult mask_tokens(const std::vector<int>& ids,
                       const std::vector<bool>& maskable, double mask_rate,
                       std::mt19937_64& rng, const Vocabulary& vocab) {
  if (maskable.size() != ids.size())
    throw ObjectiveError("mask_tokens: maskable mask length mismatch");
  MaskResult out;
  out.masked_ids = ids;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int content_count = vocab.size() - kNumReserved;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!maskable[i]) continue;
    if (unit(rng) >= mask_rate) continue;
    out.positions.push_back(i);
    out.targets.push_back(ids[i]);
    const double action = unit(rng);
    if (action < 0.8) {
      out.masked_ids[i] = kMaskId;
    } else if (action < 0.9 && content_count > 0) {
      out.masked_ids[i] =
          kNumReserved + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                      content_count));
    }  // else: leave unchanged
  }
  return out;
}

Tensor mlm_loss(const Tensor& logits, const std::vector<std::size_t>& positions,
                const std::vector<int>& targets) {
  if (positions.empty()) return Tensor::scalar(0.0);
  return cross_entropy_rows(logits, positions, targets);
}

Tensor joint_loss(const Tensor& l_ed, const Tensor& l_rd, const Tensor& l_mlm) {
  return add(add(l_ed, l_rd), l_mlm);
}

}  // namespace erpt

#include "erpt/sampler.hpp"

#include <algorithm>
#include <numeric>

namespace erpt {

bool in_scope(const Triple& t, PairScope scope) {
  switch (scope) {
    case PairScope::all: return true;
    case PairScope::single_sentence: return t.span_kind == SpanKind::intra_sentence;
    case PairScope::cross_sentence: return t.span_kind == SpanKind::inter_sentence;
  }
  return false;
}

std::map<std::string, double> relation_proportional_weights(
    const std::vector<BatchTriple>& positives, PairScope scope) {
  std::map<std::string, std::size_t> counts;
  for (const auto& bt : positives)
    if (in_scope(bt.triple, scope)) ++counts[bt.triple.relation_id];
  std::map<std::string, double> weights;
  std::size_t total = 0;
  for (const auto& [r, c] : counts)
    if (c >= 2) total += c;
  if (total == 0) return weights;
  for (const auto& [r, c] : counts)
    if (c >= 2) weights[r] = static_cast<double>(c) / static_cast<double>(total);
  return weights;
}

namespace {

std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

std::string draw_relation(const std::map<std::string, double>& weights,
                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (const auto& [r, w] : weights) {
    acc += w;
    if (u < acc) return r;
  }
  return weights.rbegin()->first;
}

}  // namespace

std::optional<RDSample> sample_rd(const std::vector<BatchTriple>& all,
                                  const std::vector<BatchTriple>& positives,
                                  int n_neg, std::mt19937_64& rng,
                                  PairScope scope, int retry_bound) {
  if (n_neg < 1) throw SamplerError("sample_rd: n_neg must be >= 1");
  const auto weights = relation_proportional_weights(positives, scope);
  if (weights.empty()) return std::nullopt;

  for (int attempt = 0; attempt <= retry_bound; ++attempt) {
    const std::string rel = draw_relation(weights, rng);
    std::vector<const BatchTriple*> pool;
    for (const auto& bt : positives)
      if (bt.triple.relation_id == rel && in_scope(bt.triple, scope))
        pool.push_back(&bt);
    // eligibility guarantees pool.size() >= 2
    const std::size_t ai = draw_index(rng, pool.size());
    std::size_t bi = draw_index(rng, pool.size() - 1);
    if (bi >= ai) ++bi;
    const BatchTriple& a = *pool[ai];
    const BatchTriple& b = *pool[bi];

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < all.size(); ++i) {
      const BatchTriple& c = all[i];
      if (c == a || c == b) continue;
      if (c.triple.head_id == a.triple.head_id) continue;
      if (c.triple.tail_id == a.triple.tail_id) continue;
      eligible.push_back(i);
    }
    if (eligible.empty()) continue;  // resample the relation

    // partial Fisher-Yates draw without replacement
    const std::size_t take =
        std::min(eligible.size(), static_cast<std::size_t>(n_neg));
    RDSample out{a, b, {}};
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + draw_index(rng, eligible.size() - i);
      std::swap(eligible[i], eligible[j]);
      out.negatives.push_back(all[eligible[i]]);
    }
    return out;
  }
  return std::nullopt;
}

std::optional<Triple> sample_ed(const DocumentTripleSet& tset,
                                std::mt19937_64& rng) {
  if (tset.positives.empty()) return std::nullopt;
  return tset.positives[draw_index(rng, tset.positives.size())];
}

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the pair, then seed the stream
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return std::mt19937_64(z);
}

std::vector<std::size_t> epoch_order(std::size_t doc_count, std::uint64_t seed,
                                     std::size_t epoch, bool shuffle) {
  std::vector<std::size_t> order(doc_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    auto rng = derive_rng(seed ^ 0x5eed5eed5eed5eedull, epoch);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

Batch batch_for_step(const std::vector<DocumentTripleSet>& tsets,
                     std::size_t batch_size_docs, std::uint64_t seed,
                     std::size_t step, bool shuffle) {
  if (tsets.empty()) throw SamplerError("batch_for_step: empty corpus");
  if (batch_size_docs == 0) throw SamplerError("batch_for_step: zero batch size");
  const std::size_t per_epoch =
      (tsets.size() + batch_size_docs - 1) / batch_size_docs;
  const std::size_t epoch = step / per_epoch;
  const std::size_t slot = step % per_epoch;
  const auto order = epoch_order(tsets.size(), seed, epoch, shuffle);

  Batch batch;
  const std::size_t begin = slot * batch_size_docs;
  const std::size_t end = std::min(begin + batch_size_docs, order.size());
  for (std::size_t i = begin; i < end; ++i) batch.doc_indices.push_back(order[i]);
  for (std::size_t bi = 0; bi < batch.doc_indices.size(); ++bi) {
    const auto& ts = tsets[batch.doc_indices[bi]];
    for (const auto& t : ts.all) batch.all.push_back({bi, t});
    for (const auto& t : ts.positives) batch.positives.push_back({bi, t});
  }
  return batch;
}

}  // namespace erpt

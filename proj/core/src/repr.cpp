#include "erpt/repr.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace erpt {

Tensor mention_repr(const Tensor& hidden, const Span& span) {
  if (span.start > span.end || span.end >= hidden.rows())
    throw ReprError("mention_repr: span [" + std::to_string(span.start) + "," +
                    std::to_string(span.end) + "] out of range for " +
                    std::to_string(hidden.rows()) + " rows");
  return mean_axis(slice_rows(hidden, span.start, span.end + 1), 0);
}

EntityRepr entity_repr(const Tensor& hidden, const std::string& entity_id,
                       const std::vector<Span>& mentions) {
  if (mentions.empty())
    throw ReprError("entity_repr: entity '" + entity_id + "' has no mentions");
  std::vector<Tensor> reps;
  reps.reserve(mentions.size());
  for (const auto& sp : mentions) reps.push_back(mention_repr(hidden, sp));
  Tensor acc = reps[0];
  for (std::size_t i = 1; i < reps.size(); ++i) acc = add(acc, reps[i]);
  return {entity_id, scale(acc, 1.0 / static_cast<double>(reps.size()))};
}

RelationRepr relation_repr(const EntityRepr& head, const EntityRepr& tail) {
  if (head.vector.shape() != tail.vector.shape())
    throw ReprError("relation_repr: dimension mismatch");
  return {head.entity_id, tail.entity_id, concat({head.vector, tail.vector})};
}

namespace detail_repr {

MarkedDocument apply_entity_markers_impl(const Document& doc,
                                         const std::vector<int>& pair_choice) {
  MarkedDocument out;
  out.entity_ids = doc.entity_order();
  out.marker_pair = pair_choice;

  std::map<std::string, int> pair_of;
  for (std::size_t i = 0; i < out.entity_ids.size(); ++i)
    pair_of[out.entity_ids[i]] = pair_choice[i];
  out.marker_spans.resize(out.entity_ids.size());

  // mentions sorted by start position; spans in a validated document
  // do not overlap (each lies in one sentence, one entity per span)
  std::vector<EntityMention> sorted = doc.mentions;
  std::sort(sorted.begin(), sorted.end(),
            [](const EntityMention& a, const EntityMention& b) {
              return a.span.start < b.span.start;
            });

  std::size_t next_mention = 0;
  for (std::size_t s = 0; s < doc.sentence_bounds.size(); ++s) {
    const auto [sb, se] = doc.sentence_bounds[s];
    const std::size_t out_start = out.tokens.size();
    for (std::size_t pos = sb; pos < se; ++pos) {
      if (next_mention < sorted.size() && sorted[next_mention].span.start == pos) {
        const auto& m = sorted[next_mention];
        const int pair = pair_of.at(m.entity_id);
        const std::size_t eidx = static_cast<std::size_t>(
            std::find(out.entity_ids.begin(), out.entity_ids.end(), m.entity_id) -
            out.entity_ids.begin());
        out.tokens.push_back("[S" + std::to_string(pair + 1) + "]");
        out.marker_spans[eidx].push_back(
            {out.tokens.size() - 1, out.tokens.size() - 1});
        for (std::size_t t = m.span.start; t <= m.span.end; ++t)
          out.tokens.push_back(doc.tokens[t]);
        out.tokens.push_back("[E" + std::to_string(pair + 1) + "]");
        pos = m.span.end;  // resume after the mention
        ++next_mention;
      } else {
        out.tokens.push_back(doc.tokens[pos]);
      }
    }
    out.sentence_bounds.emplace_back(out_start, out.tokens.size());
  }
  return out;
}

}  // namespace detail_repr

std::string embeddings_to_csv(const std::vector<EmbeddingRow>& rows) {
  std::ostringstream os;
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.vec.size());
  os << "doc_id,key,kind,label";
  for (std::size_t i = 0; i < width; ++i) os << ",v_" << i;
  os << "\n";
  char buf[32];
  for (const auto& r : rows) {
    os << r.doc_id << "," << r.key << "," << r.kind << "," << r.label;
    for (double v : r.vec) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << "," << buf;
    }
    for (std::size_t i = r.vec.size(); i < width; ++i) os << ",";
    os << "\n";
  }
  return os.str();
}

}  // namespace erpt

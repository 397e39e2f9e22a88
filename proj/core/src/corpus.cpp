#include "erpt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace erpt {

using nlohmann::json;

std::vector<std::string> Document::entity_order() const {
  std::vector<std::string> order;
  for (const auto& m : mentions)
    if (std::find(order.begin(), order.end(), m.entity_id) == order.end())
      order.push_back(m.entity_id);
  return order;
}

std::vector<Span> Document::mentions_of(const std::string& entity_id) const {
  std::vector<Span> spans;
  for (const auto& m : mentions)
    if (m.entity_id == entity_id) spans.push_back(m.span);
  return spans;
}

std::optional<std::size_t> Document::sentence_of(std::size_t token_pos) const {
  for (std::size_t i = 0; i < sentence_bounds.size(); ++i)
    if (token_pos >= sentence_bounds[i].first && token_pos < sentence_bounds[i].second)
      return i;
  return std::nullopt;
}

std::vector<std::string> KnowledgeBase::relations_for(const std::string& head,
                                                      const std::string& tail) const {
  std::vector<std::string> rels;
  for (const auto& [h, r, t] : triples)
    if (h == head && t == tail) rels.push_back(r);
  std::sort(rels.begin(), rels.end());
  return rels;
}

void validate_document(const Document& doc) {
  auto fail = [&](const std::string& msg) {
    throw CorpusError("document '" + doc.id + "': " + msg);
  };
  if (doc.id.empty()) fail("empty id");
  // sentence bounds partition [0, len) in order
  std::size_t cursor = 0;
  for (const auto& [s, e] : doc.sentence_bounds) {
    if (s != cursor || e <= s) fail("sentence_bounds do not partition the token range");
    cursor = e;
  }
  if (cursor != doc.tokens.size())
    fail("sentence_bounds do not cover all tokens");
  // mention spans in range, non-empty, inside exactly one sentence
  std::map<std::string, std::size_t> occ_count;
  for (const auto& m : doc.mentions) {
    if (m.span.start > m.span.end || m.span.end >= doc.tokens.size())
      fail("mention of '" + m.entity_id + "' has span out of range");
    auto s1 = doc.sentence_of(m.span.start);
    auto s2 = doc.sentence_of(m.span.end);
    if (!s1 || !s2 || *s1 != *s2)
      fail("mention of '" + m.entity_id + "' crosses a sentence boundary");
    if (m.occurrence_index != occ_count[m.entity_id]++)
      fail("occurrence_index values for '" + m.entity_id + "' are not sequential");
  }
}

ParsedCorpus parse_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  ParsedCorpus out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string doc_id;
    try {
      json j = json::parse(line);
      Document doc;
      doc.id = j.at("id").get<std::string>();
      doc_id = doc.id;
      doc.tokens = j.at("tokens").get<std::vector<std::string>>();
      for (const auto& b : j.at("sentence_bounds"))
        doc.sentence_bounds.emplace_back(b.at(0).get<std::size_t>(),
                                         b.at(1).get<std::size_t>());
      std::map<std::string, std::size_t> occ;
      for (const auto& m : j.at("mentions")) {
        EntityMention em;
        em.entity_id = m.at("entity_id").get<std::string>();
        em.span = {m.at("start").get<std::size_t>(), m.at("end").get<std::size_t>()};
        em.occurrence_index = occ[em.entity_id]++;
        doc.mentions.push_back(em);
      }
      validate_document(doc);
      out.documents.push_back(std::move(doc));
    } catch (const std::exception& e) {
      out.issues.push_back({lineno, doc_id, e.what()});
    }
  }
  return out;
}

namespace {
std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, '\t')) fields.push_back(field);
  return fields;
}
}  // namespace

KnowledgeBase parse_kb(const std::string& triples_path, const std::string& names_path) {
  KnowledgeBase kb;
  {
    std::ifstream in(names_path);
    if (!in) throw CorpusError("cannot open relation-name file: " + names_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (f.size() != 2)
        throw CorpusError(names_path + ":" + std::to_string(lineno) +
                          ": expected 'relation_id\\tname'");
      if (f[0] == kNoRelation)
        throw CorpusError(names_path + ":" + std::to_string(lineno) +
                          ": reserved relation id no_relation");
      kb.relation_names[f[0]] = f[1];
    }
  }
  {
    std::ifstream in(triples_path);
    if (!in) throw CorpusError("cannot open KB file: " + triples_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = split_tabs(line);
      if (f.size() != 3)
        throw CorpusError(triples_path + ":" + std::to_string(lineno) +
                          ": expected 'head\\trelation\\ttail'");
      if (f[1] == kNoRelation)
        throw CorpusError(triples_path + ":" + std::to_string(lineno) +
                          ": reserved relation id no_relation in triple");
      if (!kb.relation_names.count(f[1]))
        throw CorpusError(triples_path + ":" + std::to_string(lineno) +
                          ": unknown relation id '" + f[1] + "'");
      kb.triples.insert({f[0], f[1], f[2]});
    }
  }
  return kb;
}

ExclusionSet parse_exclusions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open exclusion file: " + path);
  ExclusionSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 2)
      throw CorpusError(path + ":" + std::to_string(lineno) +
                        ": expected 'head_id\\ttail_id'");
    out.insert({f[0], f[1]});
  }
  return out;
}

namespace {
SpanKind compute_span_kind(const Document& doc, const std::string& head,
                           const std::string& tail) {
  for (std::size_t s = 0; s < doc.sentence_bounds.size(); ++s) {
    bool has_head = false, has_tail = false;
    for (const auto& m : doc.mentions) {
      if (doc.sentence_of(m.span.start) != s) continue;
      if (m.entity_id == head) has_head = true;
      if (m.entity_id == tail) has_tail = true;
    }
    if (has_head && has_tail) return SpanKind::intra_sentence;
  }
  return SpanKind::inter_sentence;
}
}  // namespace

DocumentTripleSet build_doc_triples(const Document& doc, const KnowledgeBase& kb,
                                    const ExclusionSet& exclusion) {
  DocumentTripleSet out;
  const auto entities = doc.entity_order();
  for (const auto& head : entities) {
    for (const auto& tail : entities) {
      if (head == tail) continue;
      const SpanKind kind = compute_span_kind(doc, head, tail);
      std::vector<std::string> rels;
      if (!exclusion.count({head, tail})) rels = kb.relations_for(head, tail);
      if (rels.empty()) {
        out.all.push_back({doc.id, head, kNoRelation, tail, kind});
      } else {
        for (const auto& r : rels) {
          Triple t{doc.id, head, r, tail, kind};
          out.all.push_back(t);
          out.positives.push_back(t);
        }
      }
    }
  }
  return out;
}

FilteredCorpus filter_documents(const std::vector<Document>& docs,
                                const std::vector<DocumentTripleSet>& tsets,
                                std::size_t min_words, std::size_t min_entities,
                                std::size_t min_triples) {
  if (docs.size() != tsets.size())
    throw CorpusError("filter_documents: docs/triple-sets length mismatch");
  FilteredCorpus out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].tokens.size() > min_words &&
        docs[i].entity_order().size() > min_entities &&
        tsets[i].positives.size() > min_triples) {
      out.documents.push_back(docs[i]);
      out.triple_sets.push_back(tsets[i]);
    }
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<Document>& docs,
                         const std::vector<DocumentTripleSet>& tsets) {
  if (docs.empty()) throw CorpusError("corpus_stats: empty corpus");
  if (docs.size() != tsets.size())
    throw CorpusError("corpus_stats: docs/triple-sets length mismatch");
  CorpusStats s;
  s.doc_count = docs.size();
  double tok = 0, ent = 0, pos = 0, occ = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    tok += static_cast<double>(docs[i].tokens.size());
    const auto entities = docs[i].entity_order();
    ent += static_cast<double>(entities.size());
    pos += static_cast<double>(tsets[i].positives.size());
    if (!entities.empty())
      occ += static_cast<double>(docs[i].mentions.size()) /
             static_cast<double>(entities.size());
  }
  const double n = static_cast<double>(docs.size());
  s.mean_tokens = tok / n;
  s.mean_entities = ent / n;
  s.mean_positive_triples = pos / n;
  s.mean_occurrences_per_entity = occ / n;
  return s;
}

std::string stats_to_text(const CorpusStats& s) {
  std::ostringstream os;
  os << "documents: " << s.doc_count << "\n"
     << "mean_tokens_per_doc: " << s.mean_tokens << "\n"
     << "mean_entities_per_doc: " << s.mean_entities << "\n"
     << "mean_positive_triples_per_doc: " << s.mean_positive_triples << "\n"
     << "mean_occurrences_per_entity: " << s.mean_occurrences_per_entity << "\n";
  return os.str();
}

std::string stats_to_csv(const CorpusStats& s) {
  std::ostringstream os;
  os << "doc_count,mean_tokens,mean_entities,mean_positive_triples,"
        "mean_occurrences_per_entity\n"
     << s.doc_count << "," << s.mean_tokens << "," << s.mean_entities << ","
     << s.mean_positive_triples << "," << s.mean_occurrences_per_entity << "\n";
  return os.str();
}

}  // namespace erpt

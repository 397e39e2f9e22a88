#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include <doctest.h>

#include "erpt/corpus.hpp"

using namespace erpt;

namespace {

// A well-formed document with n_ent entities mentioned across two
// sentences; mention layout randomized by the seed.
Document random_document(std::uint64_t seed, std::size_t n_ent,
                         std::size_t n_mentions) {
  std::mt19937_64 rng(seed);
  Document d;
  d.id = "doc" + std::to_string(seed);
  const std::size_t len = 40;
  for (std::size_t i = 0; i < len; ++i) d.tokens.push_back("w" + std::to_string(i));
  d.sentence_bounds = {{0, 20}, {20, 40}};
  std::vector<std::size_t> starts;
  for (std::size_t p = 0; p + 1 < len; p += 2) starts.push_back(p);
  std::shuffle(starts.begin(), starts.end(), rng);
  starts.resize(n_mentions);
  std::sort(starts.begin(), starts.end());
  std::map<std::string, std::size_t> occ;
  for (std::size_t m = 0; m < n_mentions; ++m) {
    EntityMention em;
    em.entity_id = "e" + std::to_string(m < n_ent ? m : rng() % n_ent);
    em.span = {starts[m], starts[m] + rng() % 2};
    em.occurrence_index = occ[em.entity_id]++;
    d.mentions.push_back(em);
  }
  return d;
}

KnowledgeBase random_kb(std::uint64_t seed, std::size_t n_ent,
                        std::size_t n_rel, std::size_t n_triples) {
  std::mt19937_64 rng(seed);
  KnowledgeBase kb;
  for (std::size_t r = 0; r < n_rel; ++r)
    kb.relation_names["r" + std::to_string(r)] = "rel " + std::to_string(r);
  while (kb.triples.size() < n_triples) {
    const std::string h = "e" + std::to_string(rng() % n_ent);
    const std::string t = "e" + std::to_string(rng() % n_ent);
    if (h == t) continue;
    kb.triples.insert({h, "r" + std::to_string(rng() % n_rel), t});
  }
  return kb;
}

}  // namespace

TEST_CASE("entity_order follows first mention, mentions_of is ordered") {
  Document d;
  d.id = "d";
  d.tokens = std::vector<std::string>(10, "x");
  d.sentence_bounds = {{0, 10}};
  d.mentions = {{"b", {1, 1}, 0}, {"a", {3, 3}, 0}, {"b", {5, 6}, 1}};
  CHECK(d.entity_order() == std::vector<std::string>({"b", "a"}));
  CHECK(d.mentions_of("b") == std::vector<Span>({{1, 1}, {5, 6}}));
  CHECK(d.sentence_of(4) == std::size_t{0});
  CHECK_FALSE(d.sentence_of(10).has_value());
}

TEST_CASE("validate_document rejects broken invariants") {
  Document d;
  d.id = "d";
  d.tokens = std::vector<std::string>(10, "x");
  d.sentence_bounds = {{0, 5}, {5, 10}};
  d.mentions = {{"a", {1, 2}, 0}};
  CHECK_NOTHROW(validate_document(d));

  Document cross = d;
  cross.mentions = {{"a", {4, 6}, 0}};  // straddles the sentence boundary
  CHECK_THROWS_AS(validate_document(cross), CorpusError);

  Document gap = d;
  gap.sentence_bounds = {{0, 4}, {5, 10}};  // token 4 uncovered
  CHECK_THROWS_AS(validate_document(gap), CorpusError);

  Document occ = d;
  occ.mentions = {{"a", {1, 1}, 0}, {"a", {3, 3}, 2}};  // skips index 1
  CHECK_THROWS_AS(validate_document(occ), CorpusError);
}

TEST_CASE("build_doc_triples equals brute-force enumeration on 50 fixtures") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Document d = random_document(seed, 3 + seed % 4, 8 + seed % 5);
    KnowledgeBase kb = random_kb(seed + 1000, 7, 3, 10);
    DocumentTripleSet got = build_doc_triples(d, kb);

    std::vector<Triple> want_all, want_pos;
    const auto order = d.entity_order();
    for (const auto& h : order)
      for (const auto& t : order) {
        if (h == t) continue;
        std::vector<std::string> rels;
        for (const auto& [kh, kr, kt] : kb.triples)
          if (kh == h && kt == t) rels.push_back(kr);
        std::sort(rels.begin(), rels.end());
        const auto kind = [&] {
          // intra iff some mention of h and some mention of t share a sentence
          for (const auto& hm : d.mentions_of(h))
            for (const auto& tm : d.mentions_of(t))
              if (d.sentence_of(hm.start) == d.sentence_of(tm.start))
                return SpanKind::intra_sentence;
          return SpanKind::inter_sentence;
        }();
        if (rels.empty()) {
          want_all.push_back({d.id, h, kNoRelation, t, kind});
        } else {
          for (const auto& r : rels) {
            want_all.push_back({d.id, h, r, t, kind});
            want_pos.push_back({d.id, h, r, t, kind});
          }
        }
      }
    CHECK(got.all == want_all);
    CHECK(got.positives == want_pos);
  }
}

TEST_CASE("excluded pairs demote to no_relation but stay in T") {
  Document d = random_document(3, 3, 8);
  KnowledgeBase kb;
  kb.relation_names["r0"] = "r zero";
  kb.triples.insert({"e0", "r0", "e1"});
  ExclusionSet excl = {{"e0", "e1"}};
  DocumentTripleSet ts = build_doc_triples(d, kb, excl);
  for (const auto& t : ts.positives)
    CHECK_FALSE((t.head_id == "e0" && t.tail_id == "e1"));
  bool found = false;
  for (const auto& t : ts.all)
    if (t.head_id == "e0" && t.tail_id == "e1") {
      found = true;
      CHECK(t.relation_id == kNoRelation);
    }
  CHECK(found);
}

TEST_CASE("filter thresholds are strict at 128/4/4") {
  auto make = [](std::size_t words, std::size_t ents, std::size_t pos) {
    Document d;
    d.id = "d";
    d.tokens = std::vector<std::string>(words, "x");
    d.sentence_bounds = {{0, words}};
    for (std::size_t e = 0; e < ents; ++e)
      d.mentions.push_back({"e" + std::to_string(e), {e, e}, 0});
    DocumentTripleSet ts;
    for (std::size_t p = 0; p < pos; ++p)
      ts.positives.push_back({"d", "e0", "r" + std::to_string(p), "e1",
                              SpanKind::intra_sentence});
    return std::pair{d, ts};
  };

  auto keeps = [&](std::size_t w, std::size_t e, std::size_t p) {
    auto [d, ts] = make(w, e, p);
    return filter_documents({d}, {ts}).documents.size() == 1;
  };

  CHECK(keeps(129, 5, 5));
  CHECK_FALSE(keeps(128, 5, 5));  // exactly 128 words fails
  CHECK_FALSE(keeps(129, 4, 5));  // exactly 4 entities fails
  CHECK_FALSE(keeps(129, 5, 4));  // exactly 4 positives fails
}

TEST_CASE("corpus JSONL round trip with per-line issue reporting") {
  const std::string path = "/tmp/erpt_test_corpus.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id":"d1","tokens":["a","b","c","d"],"sentence_bounds":[[0,4]],)"
        << R"("mentions":[{"entity_id":"e1","start":0,"end":1},)"
        << R"({"entity_id":"e2","start":2,"end":2}]})" << "\n";
    out << "this is not json\n";
    out << R"({"id":"d2","tokens":["a"],"sentence_bounds":[[0,1]],"mentions":)"
        << R"([{"entity_id":"e1","start":5,"end":5}]})" << "\n";
  }
  ParsedCorpus pc = parse_corpus(path);
  REQUIRE(pc.documents.size() == 1);
  CHECK(pc.documents[0].id == "d1");
  CHECK(pc.documents[0].mentions[0].occurrence_index == 0);
  REQUIRE(pc.issues.size() == 2);
  CHECK(pc.issues[0].line == 2);
  CHECK(pc.issues[1].line == 3);
  std::remove(path.c_str());
}

TEST_CASE("parse_kb rejects reserved and undeclared relations") {
  const std::string triples = "/tmp/erpt_test_kb.tsv";
  const std::string names = "/tmp/erpt_test_names.tsv";
  {
    std::ofstream n(names);
    n << "r1\tworks for\n";
    std::ofstream t(triples);
    t << "e1\tr1\te2\n";
  }
  KnowledgeBase kb = parse_kb(triples, names);
  CHECK(kb.triples.size() == 1);
  CHECK(kb.relations_for("e1", "e2") == std::vector<std::string>({"r1"}));
  CHECK(kb.relations_for("e2", "e1").empty());

  {
    std::ofstream t(triples);
    t << "e1\tr_undeclared\te2\n";
  }
  CHECK_THROWS_AS((void)parse_kb(triples, names), CorpusError);

  {
    std::ofstream n(names);
    n << "no_relation\tnone\n";
  }
  CHECK_THROWS_AS((void)parse_kb(triples, names), CorpusError);
  std::remove(triples.c_str());
  std::remove(names.c_str());
}

TEST_CASE("corpus_stats and serializations") {
  Document d = random_document(1, 3, 8);
  KnowledgeBase kb = random_kb(2, 5, 2, 6);
  auto ts = build_doc_triples(d, kb);
  CorpusStats s = corpus_stats({d}, {ts});
  CHECK(s.doc_count == 1);
  CHECK(s.mean_tokens == doctest::Approx(40.0));
  CHECK(stats_to_text(s).find("documents: 1") != std::string::npos);
  CHECK(stats_to_csv(s).find("doc_count") != std::string::npos);
}

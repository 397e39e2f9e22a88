#include <random>
#include <set>

#include <doctest.h>

#include "erpt/encoder.hpp"
#include "erpt/repr.hpp"

using namespace erpt;

TEST_CASE("mention_repr is the span mean") {
  Tensor hidden = Tensor::from({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor m = mention_repr(hidden, {1, 2});
  REQUIRE(m.shape() == std::vector<std::size_t>({2}));
  CHECK(m.values()[0] == doctest::Approx(4.0));
  CHECK(m.values()[1] == doctest::Approx(5.0));
}

TEST_CASE("entity_repr averages mention representations") {
  Tensor hidden = Tensor::from({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  EntityRepr e = entity_repr(hidden, "e1", {{0, 0}, {2, 3}});
  // mean of (1,2) and (6,7)
  CHECK(e.entity_id == "e1");
  CHECK(e.vector.values()[0] == doctest::Approx(3.5));
  CHECK(e.vector.values()[1] == doctest::Approx(4.5));
}

TEST_CASE("relation_repr concatenates head then tail") {
  EntityRepr h{"h", Tensor::from({2}, {1, 2})};
  EntityRepr t{"t", Tensor::from({2}, {3, 4})};
  RelationRepr r = relation_repr(h, t);
  CHECK(r.head_id == "h");
  CHECK(r.tail_id == "t");
  CHECK(r.vector.values() == std::vector<double>({1, 2, 3, 4}));
}

TEST_CASE("apply_entity_markers wraps every mention") {
  Document d;
  d.id = "d";
  d.tokens = {"alice", "met", "bob", "then", "alice", "left"};
  d.sentence_bounds = {{0, 4}, {4, 6}};
  d.mentions = {{"A", {0, 0}, 0}, {"B", {2, 2}, 0}, {"A", {4, 4}, 1}};

  std::mt19937_64 rng(5);
  MarkedDocument md = apply_entity_markers(d, rng);

  CHECK(md.tokens.size() == d.tokens.size() + 2 * d.mentions.size());
  REQUIRE(md.entity_ids == std::vector<std::string>({"A", "B"}));
  REQUIRE(md.marker_pair.size() == 2);
  CHECK(md.marker_pair[0] != md.marker_pair[1]);

  // every [S] span points at the start marker of its entity
  for (std::size_t e = 0; e < md.entity_ids.size(); ++e) {
    const std::string start = "[S" + std::to_string(md.marker_pair[e] + 1) + "]";
    for (const auto& sp : md.marker_spans[e]) {
      CHECK(sp.start == sp.end);
      CHECK(md.tokens[sp.start] == start);
    }
  }
  CHECK(md.marker_spans[0].size() == 2);
  CHECK(md.marker_spans[1].size() == 1);

  // stripping the marker tokens restores the original text
  std::vector<std::string> stripped;
  for (const auto& t : md.tokens)
    if (t.size() < 2 || t[0] != '[' || (t[1] != 'S' && t[1] != 'E'))
      stripped.push_back(t);
  CHECK(stripped == d.tokens);

  // sentence bounds cover the rewritten token stream
  CHECK(md.sentence_bounds.back().second == md.tokens.size());
}

TEST_CASE("apply_entity_markers draws distinct pairs deterministically") {
  Document d;
  d.id = "d";
  d.tokens.assign(30, "x");
  d.sentence_bounds = {{0, 30}};
  for (std::size_t e = 0; e < 10; ++e)
    d.mentions.push_back({"e" + std::to_string(e), {e * 3, e * 3}, 0});

  std::mt19937_64 r1(9), r2(9), r3(10);
  MarkedDocument a = apply_entity_markers(d, r1);
  MarkedDocument b = apply_entity_markers(d, r2);
  MarkedDocument c = apply_entity_markers(d, r3);
  CHECK(a.marker_pair == b.marker_pair);
  CHECK(a.marker_pair != c.marker_pair);
  std::set<int> uniq(a.marker_pair.begin(), a.marker_pair.end());
  CHECK(uniq.size() == a.marker_pair.size());
  for (int p : a.marker_pair) {
    CHECK(p >= 0);
    CHECK(p < 100);
  }
}

TEST_CASE("embeddings_to_csv layout") {
  EmbeddingRow row;
  row.doc_id = "d1";
  row.key = "e1";
  row.kind = "entity";
  row.label = "person";
  row.vec = {0.5, -1.25};
  const std::string csv = embeddings_to_csv({row});
  CHECK(csv.find("doc_id,key,kind,label,v_0,v_1") != std::string::npos);
  CHECK(csv.find("d1,e1,entity,person,0.5,-1.25") != std::string::npos);
}

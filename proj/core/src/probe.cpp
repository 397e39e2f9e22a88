#include "erpt/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace erpt {

bool PlantedCorpus::is_train(const std::string& doc_id) const {
  return std::find(train_doc_ids.begin(), train_doc_ids.end(), doc_id) !=
         train_doc_ids.end();
}

namespace {

constexpr std::size_t kNumTypes = 4;

std::string entity_name(std::size_t i) {
  std::ostringstream os;
  os << "ent" << (i < 10 ? "0" : "") << i;
  return os.str();
}
std::string type_label(std::size_t i) { return "kind" + std::to_string(i % kNumTypes); }
std::string relation_id_of(std::size_t r) { return "r" + std::to_string(r); }
std::string verb_of(std::size_t r) { return "verb" + std::to_string(r); }

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "meanwhile", "records",  "archive", "remain",  "quiet",   "season",
      "valley",    "council",  "reports", "gather",  "slowly",  "around",
      "harbor",    "evening",  "market",  "people",  "often",   "discuss",
      "matters",   "without",  "notice",  "during",  "winter",  "travel",
      "becomes",   "harder",   "across",  "region",  "stories", "spread"};
  return words;
}

struct DocBuild {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  std::vector<EntityMention> mentions;
  std::map<std::string, std::size_t> occ;

  void sentence(const std::vector<std::string>& toks,
                const std::vector<std::pair<std::size_t, std::string>>& ents) {
    const std::size_t start = tokens.size();
    for (const auto& t : toks) tokens.push_back(t);
    bounds.emplace_back(start, tokens.size());
    for (const auto& [offset, eid] : ents)
      mentions.push_back({eid, {start + offset, start + offset}, occ[eid]++});
  }
};

}  // namespace

PlantedCorpus generate_planted_corpus(std::size_t relation_count,
                                      std::size_t entity_count,
                                      std::size_t doc_count, std::uint64_t seed) {
  if (relation_count < 4) throw ProbeError("generate_planted_corpus: need >= 4 relations");
  if (entity_count < 20) throw ProbeError("generate_planted_corpus: need >= 20 entities");
  if (doc_count < 8) throw ProbeError("generate_planted_corpus: need >= 8 documents");

  std::mt19937_64 rng(seed);
  PlantedCorpus out;
  for (std::size_t r = 0; r < relation_count; ++r)
    out.kb.relation_names[relation_id_of(r)] = verb_of(r);
  for (std::size_t i = 0; i < entity_count; ++i)
    out.entity_types[entity_name(i)] = type_label(i);

  // disjoint entity pools keep test pairs out of the train positives
  const std::size_t train_entities = (entity_count * 7 + 9) / 10;
  std::vector<std::string> pool_train, pool_test;
  for (std::size_t i = 0; i < entity_count; ++i)
    (i < train_entities ? pool_train : pool_test).push_back(entity_name(i));
  const std::size_t test_docs = std::max<std::size_t>(2, doc_count / 5);
  const std::size_t train_docs = doc_count - test_docs;

  // Relations are planted as entity-class structure. Each split's pool is
  // dealt round-robin into C classes and every relation is mapped to a
  // distinct unordered class pair; a pair of entities can only ever be
  // expressed with the relation of its class pair. Because the assignment
  // is a function of the entities alone, incidental co-occurrences inside
  // a document distant-supervise to the same relation the document
  // actually verbalizes, keeping most documents single-relation.
  using Pair = std::pair<std::string, std::string>;
  std::size_t class_count = 3;
  while (class_count * (class_count - 1) / 2 < relation_count) ++class_count;
  std::vector<std::pair<std::size_t, std::size_t>> rel_classes;
  for (std::size_t u = 0; u < class_count && rel_classes.size() < relation_count; ++u)
    for (std::size_t v = u + 1;
         v < class_count && rel_classes.size() < relation_count; ++v)
      rel_classes.emplace_back(u, v);

  std::map<Pair, std::size_t> pair_rel;
  std::vector<std::vector<Pair>> bucket_train(relation_count),
      bucket_test(relation_count);
  auto deal = [&](const std::vector<std::string>& pool,
                  std::vector<std::vector<Pair>>& buckets) {
    if (pool.size() < 5)
      throw ProbeError("generate_planted_corpus: entity pool too small for a split");
    std::vector<std::vector<std::string>> classes(class_count);
    for (std::size_t i = 0; i < pool.size(); ++i)
      classes[i % class_count].push_back(pool[i]);
    for (std::size_t r = 0; r < relation_count; ++r) {
      const auto& [u, v] = rel_classes[r];
      for (const auto& a : classes[u])
        for (const auto& b : classes[v]) {
          buckets[r].emplace_back(a, b);
          buckets[r].emplace_back(b, a);
          pair_rel[{a, b}] = r;
          pair_rel[{b, a}] = r;
        }
    }
  };
  deal(pool_train, bucket_train);
  deal(pool_test, bucket_test);
  std::size_t rr_train = 0, rr_test = 0;

  for (std::size_t d = 0; d < doc_count; ++d) {
    const bool train = d < train_docs;
    const auto& buckets = train ? bucket_train : bucket_test;
    std::size_t& rr = train ? rr_train : rr_test;

    // round-robin relation assignment; small splits take several relations
    // per document so that every relation still shows up in both splits
    const std::size_t split_docs = train ? train_docs : test_docs;
    const std::size_t q = std::max<std::size_t>(
        1, (relation_count + split_docs - 1) / split_docs);
    std::vector<std::size_t> doc_rels;
    for (std::size_t j = 0; j < q; ++j)
      doc_rels.push_back((rr + j) % relation_count);
    rr += q;

    // draw expressed pairs from the document's relation buckets, keeping
    // the entity set within 5..8 and excluding within-document reverses
    std::vector<Pair> chosen;
    std::set<std::string> used;
    auto try_add = [&](const Pair& p) {
      for (const auto& c : chosen)
        if (c == p || (c.first == p.second && c.second == p.first)) return false;
      const std::size_t grow = (used.count(p.first) ? 0u : 1u) +
                               (used.count(p.second) ? 0u : 1u);
      if (used.size() + grow > 8) return false;
      chosen.push_back(p);
      used.insert(p.first);
      used.insert(p.second);
      return true;
    };
    const std::size_t want = std::max<std::size_t>(2 * q, 5 + rng() % 3);
    for (int attempt = 0; attempt < 400 && chosen.size() < want; ++attempt) {
      const auto& bucket = buckets[doc_rels[chosen.size() % q]];
      if (!bucket.empty()) (void)try_add(bucket[rng() % bucket.size()]);
    }
    // top up the entity count so the document clears the >4-entity filter;
    // if the document's own classes run out of entities, borrow a pair
    // from another relation (its class-pair label still holds)
    for (int attempt = 0; attempt < 400 && used.size() < 5; ++attempt) {
      const auto& bucket = buckets[doc_rels[rng() % q]];
      if (!bucket.empty()) (void)try_add(bucket[rng() % bucket.size()]);
    }
    for (int attempt = 0; attempt < 400 && used.size() < 5; ++attempt) {
      const auto& bucket = buckets[rng() % relation_count];
      if (!bucket.empty()) (void)try_add(bucket[rng() % bucket.size()]);
    }
    if (chosen.size() < 4 || used.size() < 5)
      throw ProbeError(
          "generate_planted_corpus: parameters infeasible, could not draw "
          "enough distinct pairs for a document");

    DocBuild b;
    for (const auto& p : chosen) {
      const std::size_t r = pair_rel.at(p);
      out.kb.triples.insert({p.first, relation_id_of(r), p.second});
      const auto& [h, t] = p;
      const std::string kh = out.entity_types.at(h), kt = out.entity_types.at(t);
      if (rng() % 4 == 0) {
        // cross-sentence expression
        b.sentence({"the", kh, h, verb_of(r), "another", "party", "."},
                   {{2, h}});
        b.sentence({"that", "party", "is", "the", kt, t, "."}, {{5, t}});
      } else {
        b.sentence({"the", kh, h, verb_of(r), "the", kt, t, "."},
                   {{2, h}, {6, t}});
      }
    }
    // filler sentences until the word filter is comfortably exceeded
    const auto& fw = filler_words();
    while (b.tokens.size() < 132) {
      std::vector<std::string> s;
      const std::size_t len = 7 + rng() % 4;
      for (std::size_t i = 0; i < len; ++i) s.push_back(fw[rng() % fw.size()]);
      s.push_back(".");
      b.sentence(s, {});
    }

    Document doc;
    doc.id = (train ? "train" : "test") + std::to_string(d);
    doc.tokens = std::move(b.tokens);
    doc.sentence_bounds = std::move(b.bounds);
    doc.mentions = std::move(b.mentions);
    validate_document(doc);
    (train ? out.train_doc_ids : out.test_doc_ids).push_back(doc.id);
    out.documents.push_back(std::move(doc));
  }

  // every relation needs two distinct expressed pairs in each split
  std::map<std::string, std::size_t> cnt_train, cnt_test;
  for (const auto& [h, r, t] : out.kb.triples) {
    const bool tr =
        std::find(pool_train.begin(), pool_train.end(), h) != pool_train.end();
    ++(tr ? cnt_train : cnt_test)[r];
  }
  for (std::size_t r = 0; r < relation_count; ++r)
    if (cnt_train[relation_id_of(r)] < 2 || cnt_test[relation_id_of(r)] < 2)
      throw ProbeError("generate_planted_corpus: parameters infeasible, relation " +
                       relation_id_of(r) + " has fewer than two pairs in a split");
  return out;
}

Vocabulary planted_vocabulary(const PlantedCorpus& corpus) {
  std::set<std::string> tokens;
  for (const auto& doc : corpus.documents)
    for (const auto& t : doc.tokens) tokens.insert(t);
  return Vocabulary(std::vector<std::string>(tokens.begin(), tokens.end()));
}

std::map<std::string, std::vector<double>> frozen_entity_reprs(
    const EncoderConfig& cfg, const EncoderParams& params, const Document& doc,
    const Vocabulary& vocab) {
  std::vector<int> ids = tokenize(doc.tokens, vocab);
  const std::size_t keep = std::min(ids.size(), cfg.max_seq_len);
  ids.resize(keep);
  Tensor hidden = encode(ids, cfg, params);
  std::map<std::string, std::vector<double>> out;
  for (const auto& eid : doc.entity_order()) {
    std::vector<Span> spans;
    for (const auto& sp : doc.mentions_of(eid))
      if (sp.end < keep) spans.push_back(sp);
    if (spans.empty()) continue;
    out[eid] = entity_repr(hidden, eid, spans).vector.values();
  }
  return out;
}

namespace {

// minimal Adam over a flat parameter vector for the probe heads
struct FlatAdam {
  std::vector<double> m, v;
  std::uint64_t t = 0;
  void step(std::vector<double>& p, const std::vector<double>& g, double lr) {
    if (m.empty()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    ++t;
    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8);
    }
  }
};

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    s += v;
  }
  for (auto& v : z) v /= s;
}

ProbeResult scores_to_result(const std::vector<int>& gold,
                             const std::vector<int>& pred, std::size_t classes) {
  ProbeResult res;
  std::size_t correct = 0;
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == pred[i]) {
      ++correct;
      ++tp[static_cast<std::size_t>(gold[i])];
    } else {
      ++fp[static_cast<std::size_t>(pred[i])];
      ++fn[static_cast<std::size_t>(gold[i])];
    }
  }
  res.accuracy = gold.empty() ? 0.0
                              : static_cast<double>(correct) /
                                    static_cast<double>(gold.size());
  std::size_t tp_all = correct, fp_all = gold.size() - correct,
              fn_all = gold.size() - correct;
  res.micro_f1 = (2.0 * tp_all) /
                 static_cast<double>(2 * tp_all + fp_all + fn_all);
  double macro = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (tp[c] + fn[c] == 0) continue;  // class absent from the test set
    ++present;
    const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    macro += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / denom;
  }
  res.macro_f1 = present ? macro / static_cast<double>(present) : 0.0;
  return res;
}

struct PairExample {
  std::vector<double> e1, e2;
  int label;
};

}  // namespace

ProbeResult fit_relation_probe(const EncoderConfig& cfg, const EncoderParams& params,
                               const PlantedCorpus& corpus,
                               const ProbeOptions& opts) {
  const Vocabulary vocab = planted_vocabulary(corpus);

  std::vector<std::string> classes;
  for (const auto& [rid, name] : corpus.kb.relation_names) classes.push_back(rid);
  classes.push_back(kNoRelation);
  auto class_index = [&](const std::string& r) {
    return static_cast<int>(std::find(classes.begin(), classes.end(), r) -
                            classes.begin());
  };

  std::vector<PairExample> train_ex, test_ex;
  for (const auto& doc : corpus.documents) {
    const auto reps = frozen_entity_reprs(cfg, params, doc, vocab);
    const auto tset = build_doc_triples(doc, corpus.kb);
    auto& dest = corpus.is_train(doc.id) ? train_ex : test_ex;
    int no_rel_left = opts.no_relation_per_doc;
    for (const auto& t : tset.all) {
      const bool positive = t.relation_id != kNoRelation;
      if (!positive && no_rel_left <= 0) continue;
      auto h = reps.find(t.head_id);
      auto tl = reps.find(t.tail_id);
      if (h == reps.end() || tl == reps.end()) continue;
      if (!positive) --no_rel_left;
      dest.push_back({h->second, tl->second, class_index(t.relation_id)});
    }
  }
  {
    std::set<int> seen;
    for (const auto& ex : train_ex) seen.insert(ex.label);
    for (const auto& [rid, name] : corpus.kb.relation_names)
      if (!seen.count(class_index(rid)))
        throw ProbeError("fit_relation_probe: relation '" + rid +
                         "' absent from the train split");
  }

  const std::size_t d = cfg.hidden_dim;
  const std::size_t c = classes.size();
  // parameters: per-class bilinear W_r (d*d) then per-class bias
  std::vector<double> theta(c * d * d + c, 0.0);
  {
    std::mt19937_64 init_rng(opts.seed);
    std::normal_distribution<double> dist(0.0, 0.01);
    for (std::size_t i = 0; i < c * d * d; ++i) theta[i] = dist(init_rng);
  }
  auto score = [&](const PairExample& ex, std::vector<double>& out) {
    out.assign(c, 0.0);
    for (std::size_t r = 0; r < c; ++r) {
      const double* w = theta.data() + r * d * d;
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double e1 = ex.e1[i];
        if (e1 == 0.0) continue;
        const double* wi = w + i * d;
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += wi[j] * ex.e2[j];
        s += e1 * acc;
      }
      out[r] = s + theta[c * d * d + r];
    }
  };

  FlatAdam adam;
  std::mt19937_64 rng(opts.seed ^ 0xabcdefull);
  std::vector<std::size_t> order(train_ex.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = 32;
  std::vector<double> grad(theta.size());
  std::vector<double> probs;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const std::size_t b1 = std::min(order.size(), b0 + batch);
      for (std::size_t oi = b0; oi < b1; ++oi) {
        const auto& ex = train_ex[order[oi]];
        score(ex, probs);
        softmax_inplace(probs);
        probs[static_cast<std::size_t>(ex.label)] -= 1.0;
        const double invn = 1.0 / static_cast<double>(b1 - b0);
        for (std::size_t r = 0; r < c; ++r) {
          const double gout = probs[r] * invn;
          if (gout == 0.0) continue;
          double* gw = grad.data() + r * d * d;
          for (std::size_t i = 0; i < d; ++i) {
            const double e1 = ex.e1[i] * gout;
            if (e1 == 0.0) continue;
            double* gwi = gw + i * d;
            for (std::size_t j = 0; j < d; ++j) gwi[j] += e1 * ex.e2[j];
          }
          grad[c * d * d + r] += gout;
        }
      }
      adam.step(theta, grad, opts.lr);
    }
  }

  std::vector<int> gold, pred;
  std::vector<double> s;
  for (const auto& ex : test_ex) {
    score(ex, s);
    gold.push_back(ex.label);
    pred.push_back(static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin()));
  }
  return scores_to_result(gold, pred, c);
}

ProbeResult fit_typing_probe(const EncoderConfig& cfg, const EncoderParams& params,
                             const PlantedCorpus& corpus,
                             const ProbeOptions& opts) {
  const Vocabulary vocab = planted_vocabulary(corpus);
  std::vector<std::string> classes;
  {
    std::set<std::string> types;
    for (const auto& [eid, t] : corpus.entity_types) types.insert(t);
    classes.assign(types.begin(), types.end());
  }
  auto class_index = [&](const std::string& t) {
    return static_cast<int>(std::find(classes.begin(), classes.end(), t) -
                            classes.begin());
  };

  struct Example {
    std::vector<double> x;
    int label;
  };
  std::vector<Example> train_ex, test_ex;
  for (const auto& doc : corpus.documents) {
    const auto reps = frozen_entity_reprs(cfg, params, doc, vocab);
    auto& dest = corpus.is_train(doc.id) ? train_ex : test_ex;
    for (const auto& [eid, rep] : reps)
      dest.push_back({rep, class_index(corpus.entity_types.at(eid))});
  }
  {
    std::set<int> seen;
    for (const auto& ex : train_ex) seen.insert(ex.label);
    for (std::size_t t = 0; t < classes.size(); ++t)
      if (!seen.count(static_cast<int>(t)))
        throw ProbeError("fit_typing_probe: type '" + classes[t] +
                         "' absent from the train split");
  }

  const std::size_t d = cfg.hidden_dim;
  const std::size_t c = classes.size();
  std::vector<double> theta(c * d + c, 0.0);
  FlatAdam adam;
  std::mt19937_64 rng(opts.seed ^ 0x7717ull);
  std::vector<std::size_t> order(train_ex.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(theta.size());
  std::vector<double> probs;
  auto score = [&](const std::vector<double>& x, std::vector<double>& out) {
    out.assign(c, 0.0);
    for (std::size_t r = 0; r < c; ++r) {
      double s = theta[c * d + r];
      const double* w = theta.data() + r * d;
      for (std::size_t i = 0; i < d; ++i) s += w[i] * x[i];
      out[r] = s;
    }
  };
  const std::size_t batch = 32;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const std::size_t b1 = std::min(order.size(), b0 + batch);
      for (std::size_t oi = b0; oi < b1; ++oi) {
        const auto& ex = train_ex[order[oi]];
        score(ex.x, probs);
        softmax_inplace(probs);
        probs[static_cast<std::size_t>(ex.label)] -= 1.0;
        const double invn = 1.0 / static_cast<double>(b1 - b0);
        for (std::size_t r = 0; r < c; ++r) {
          const double gout = probs[r] * invn;
          double* gw = grad.data() + r * d;
          for (std::size_t i = 0; i < d; ++i) gw[i] += gout * ex.x[i];
          grad[c * d + r] += gout;
        }
      }
      adam.step(theta, grad, opts.lr);
    }
  }

  std::vector<int> gold, pred;
  std::vector<double> s;
  for (const auto& ex : test_ex) {
    score(ex.x, s);
    gold.push_back(ex.label);
    pred.push_back(static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin()));
  }
  return scores_to_result(gold, pred, c);
}

ClusterMetrics cluster_metrics(const std::vector<std::vector<double>>& points,
                               const std::vector<std::string>& labels) {
  if (points.size() != labels.size())
    throw ProbeError("cluster_metrics: points/labels length mismatch");
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  if (counts.size() < 2)
    throw ProbeError("cluster_metrics: need at least two labels");
  for (const auto& [l, n] : counts)
    if (n < 2)
      throw ProbeError("cluster_metrics: label '" + l + "' has fewer than two points");

  const std::size_t n = points.size();
  auto cos_dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    const double denom = std::max(std::sqrt(na) * std::sqrt(nb), 1e-300);
    return 1.0 - dot / denom;
  };

  ClusterMetrics out;
  double sil_sum = 0.0;
  std::size_t nn_correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::string, std::pair<double, std::size_t>> per_label;  // sum, count
    double best_dist = 1e300;
    std::size_t best_j = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dij = cos_dist(points[i], points[j]);
      auto& [sum, cnt] = per_label[labels[j]];
      sum += dij;
      ++cnt;
      if (dij < best_dist) {
        best_dist = dij;
        best_j = j;
      }
    }
    if (labels[best_j] == labels[i]) ++nn_correct;
    const auto& own = per_label.at(labels[i]);
    const double a = own.first / static_cast<double>(own.second);
    double b = 1e300;
    for (const auto& [l, sc] : per_label) {
      if (l == labels[i]) continue;
      b = std::min(b, sc.first / static_cast<double>(sc.second));
    }
    const double m = std::max(a, b);
    sil_sum += m == 0.0 ? 0.0 : (b - a) / m;  // 0 for coincident points
  }
  out.silhouette = sil_sum / static_cast<double>(n);
  out.nn_accuracy = static_cast<double>(nn_correct) / static_cast<double>(n);
  return out;
}

std::vector<EmbeddingRow> export_embeddings(const EncoderConfig& cfg,
                                            const EncoderParams& params,
                                            const PlantedCorpus& corpus) {
  const Vocabulary vocab = planted_vocabulary(corpus);
  std::vector<EmbeddingRow> rows;
  for (const auto& doc : corpus.documents) {
    const auto reps = frozen_entity_reprs(cfg, params, doc, vocab);
    for (const auto& eid : doc.entity_order()) {
      auto it = reps.find(eid);
      if (it == reps.end()) continue;
      rows.push_back({doc.id, eid, "entity", corpus.entity_types.at(eid), it->second});
    }
    const auto tset = build_doc_triples(doc, corpus.kb);
    for (const auto& t : tset.positives) {
      auto h = reps.find(t.head_id);
      auto tl = reps.find(t.tail_id);
      if (h == reps.end() || tl == reps.end()) continue;
      std::vector<double> vec = h->second;
      vec.insert(vec.end(), tl->second.begin(), tl->second.end());
      rows.push_back({doc.id, t.head_id + ":" + t.tail_id, "relation",
                      t.relation_id, std::move(vec)});
    }
  }
  return rows;
}

}  // namespace erpt

#include "erpt/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace erpt {

namespace {

std::string fold(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> reserved_tokens() {
  std::vector<std::string> out = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  for (int i = 1; i <= kNumMarkerPairs; ++i) {
    out.push_back("[S" + std::to_string(i) + "]");
    out.push_back("[E" + std::to_string(i) + "]");
  }
  return out;
}

}  // namespace

Vocabulary::Vocabulary(const std::vector<std::string>& content_tokens) {
  for (const auto& t : reserved_tokens()) {
    token_to_id_[fold(t)] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(t);
  }
  for (const auto& t : content_tokens) {
    const std::string key = fold(t);
    if (token_to_id_.count(key))
      throw EncoderError("vocabulary: duplicate token after case folding: '" + t + "'");
    token_to_id_[key] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(key);
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EncoderError("cannot open vocabulary file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) tokens.push_back(line);
  return Vocabulary(tokens);
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw EncoderError("cannot write vocabulary file: " + path);
  for (int i = kNumReserved; i < size(); ++i) out << id_to_token_[i] << "\n";
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = token_to_id_.find(fold(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size())
    throw EncoderError("vocabulary: id out of range: " + std::to_string(id));
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& t : id_to_token_) {
    for (char c : t) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    h ^= '\n';
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<int> tokenize(const std::vector<std::string>& tokens,
                          const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.lookup(t));
  return ids;
}

void EncoderConfig::validate() const {
  if (hidden_dim == 0 || heads == 0 || hidden_dim % heads != 0)
    throw EncoderError("encoder config: hidden_dim must be divisible by heads");
  if (max_seq_len < 16) throw EncoderError("encoder config: max_seq_len < 16");
  if (vocab_size < static_cast<std::size_t>(kNumReserved))
    throw EncoderError("encoder config: vocab_size below the reserved range");
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.02);
  auto weight = [&](std::size_t r, std::size_t c) {
    Tensor t = Tensor::zeros({r, c}, true);
    for (auto& v : t.values()) v = dist(rng);
    return t;
  };
  auto vec = [&](std::size_t n, double fill) {
    Tensor t = Tensor::zeros({n}, true);
    std::fill(t.values().begin(), t.values().end(), fill);
    return t;
  };
  const std::size_t d = cfg.hidden_dim;
  EncoderParams p;
  p.tok_emb = weight(cfg.vocab_size, d);
  p.pos_emb = weight(cfg.max_seq_len, d);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    Layer lay;
    lay.wq = weight(d, d); lay.bq = vec(d, 0.0);
    lay.wk = weight(d, d); lay.bk = vec(d, 0.0);
    lay.wv = weight(d, d); lay.bv = vec(d, 0.0);
    lay.wo = weight(d, d); lay.bo = vec(d, 0.0);
    lay.ln1_g = vec(d, 1.0); lay.ln1_b = vec(d, 0.0);
    lay.ffn_w1 = weight(d, cfg.ffn_dim); lay.ffn_b1 = vec(cfg.ffn_dim, 0.0);
    lay.ffn_w2 = weight(cfg.ffn_dim, d); lay.ffn_b2 = vec(d, 0.0);
    lay.ln2_g = vec(d, 1.0); lay.ln2_b = vec(d, 0.0);
    p.layers.push_back(std::move(lay));
  }
  p.mlm_w = weight(d, cfg.vocab_size);
  p.mlm_b = vec(cfg.vocab_size, 0.0);
  return p;
}

std::vector<std::pair<std::string, Tensor>> EncoderParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("tok_emb", tok_emb);
  out.emplace_back("pos_emb", pos_emb);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& ly = layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    out.emplace_back(p + "wq", ly.wq); out.emplace_back(p + "bq", ly.bq);
    out.emplace_back(p + "wk", ly.wk); out.emplace_back(p + "bk", ly.bk);
    out.emplace_back(p + "wv", ly.wv); out.emplace_back(p + "bv", ly.bv);
    out.emplace_back(p + "wo", ly.wo); out.emplace_back(p + "bo", ly.bo);
    out.emplace_back(p + "ln1_g", ly.ln1_g); out.emplace_back(p + "ln1_b", ly.ln1_b);
    out.emplace_back(p + "ffn_w1", ly.ffn_w1); out.emplace_back(p + "ffn_b1", ly.ffn_b1);
    out.emplace_back(p + "ffn_w2", ly.ffn_w2); out.emplace_back(p + "ffn_b2", ly.ffn_b2);
    out.emplace_back(p + "ln2_g", ly.ln2_g); out.emplace_back(p + "ln2_b", ly.ln2_b);
  }
  out.emplace_back("mlm_w", mlm_w);
  out.emplace_back("mlm_b", mlm_b);
  return out;
}

Tensor encode(const std::vector<int>& ids, const EncoderConfig& cfg,
              const EncoderParams& params) {
  cfg.validate();
  const std::size_t len = ids.size();
  if (len == 0) throw EncoderError("encode: empty sequence");
  if (len > cfg.max_seq_len)
    throw EncoderError("encode: sequence length " + std::to_string(len) +
                       " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
  const std::size_t d = cfg.hidden_dim;
  const std::size_t hd = d / cfg.heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Tensor x = add(embedding_lookup(params.tok_emb, ids),
                 slice_rows(params.pos_emb, 0, len));

  // additive attention mask: -1e9 on [PAD] key columns
  Tensor mask;
  if (std::find(ids.begin(), ids.end(), kPadId) != ids.end()) {
    std::vector<double> mv(len * len, 0.0);
    for (std::size_t j = 0; j < len; ++j)
      if (ids[j] == kPadId)
        for (std::size_t i = 0; i < len; ++i) mv[i * len + j] = -1e9;
    mask = Tensor::from({len, len}, std::move(mv));
  }

  for (const auto& lay : params.layers) {
    Tensor q = add_bias(matmul(x, lay.wq), lay.bq);
    Tensor k = add_bias(matmul(x, lay.wk), lay.bk);
    Tensor v = add_bias(matmul(x, lay.wv), lay.bv);
    std::vector<Tensor> heads;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      Tensor qh = slice_cols(q, h * hd, (h + 1) * hd);
      Tensor kh = slice_cols(k, h * hd, (h + 1) * hd);
      Tensor vh = slice_cols(v, h * hd, (h + 1) * hd);
      Tensor scores = scale(matmul(qh, transpose(kh)), att_scale);
      if (mask.defined()) scores = add(scores, mask);
      heads.push_back(matmul(softmax_rows(scores), vh));
    }
    Tensor att = add_bias(matmul(concat(heads), lay.wo), lay.bo);
    x = layer_norm(add(x, att), lay.ln1_g, lay.ln1_b);
    Tensor ffn = add_bias(
        matmul(gelu(add_bias(matmul(x, lay.ffn_w1), lay.ffn_b1)), lay.ffn_w2),
        lay.ffn_b2);
    x = layer_norm(add(x, ffn), lay.ln2_g, lay.ln2_b);
  }
  return x;
}

Tensor mlm_logits(const Tensor& hidden, const EncoderConfig& cfg,
                  const EncoderParams& params) {
  if (cfg.tie_mlm)
    return add_bias(matmul(hidden, transpose(params.tok_emb)), params.mlm_b);
  return add_bias(matmul(hidden, params.mlm_w), params.mlm_b);
}

EDInput build_ed_input_tokens(const std::vector<std::string>& doc_tokens,
                              const std::vector<std::string>& entity_ids,
                              const std::vector<std::vector<Span>>& mention_spans,
                              const std::string& head_id, const std::string& tail_id,
                              const std::string& relation_name,
                              const std::vector<std::string>& head_surface,
                              const Vocabulary& vocab, std::size_t max_seq_len) {
  // prefix: relation name tokens, head mention tokens, [SEP]
  std::vector<std::string> rel_tokens;
  {
    std::istringstream is(relation_name);
    std::string t;
    while (is >> t) rel_tokens.push_back(t);
  }
  EDInput out;
  out.ids = tokenize(rel_tokens, vocab);
  const auto head_ids = tokenize(head_surface, vocab);
  out.ids.insert(out.ids.end(), head_ids.begin(), head_ids.end());
  out.ids.push_back(kSepId);
  out.prefix_len = out.ids.size();

  const auto body_ids = tokenize(doc_tokens, vocab);
  const std::size_t body_keep =
      std::min(body_ids.size(), max_seq_len > out.prefix_len
                                    ? max_seq_len - out.prefix_len
                                    : std::size_t{0});
  out.ids.insert(out.ids.end(), body_ids.begin(),
                 body_ids.begin() + static_cast<std::ptrdiff_t>(body_keep));

  bool head_alive = false, tail_alive = false;
  for (std::size_t e = 0; e < entity_ids.size(); ++e) {
    std::vector<Span> kept;
    for (const auto& sp : mention_spans[e]) {
      if (sp.end < body_keep)
        kept.push_back({sp.start + out.prefix_len, sp.end + out.prefix_len});
    }
    if (kept.empty()) continue;
    if (entity_ids[e] == head_id) head_alive = true;
    if (entity_ids[e] == tail_id) tail_alive = true;
    if (entity_ids[e] == head_id) out.head_index = out.entity_ids.size();
    if (entity_ids[e] == tail_id) out.tail_index = out.entity_ids.size();
    out.entity_ids.push_back(entity_ids[e]);
    out.mention_spans.push_back(std::move(kept));
  }
  out.ok = head_alive && tail_alive;
  return out;
}

EDInput build_ed_input(const Document& doc, const Triple& triple,
                       const KnowledgeBase& kb, const Vocabulary& vocab,
                       std::size_t max_seq_len) {
  if (triple.relation_id == kNoRelation)
    throw EncoderError("build_ed_input: triple has no_relation");
  auto name_it = kb.relation_names.find(triple.relation_id);
  if (name_it == kb.relation_names.end())
    throw EncoderError("build_ed_input: unknown relation " + triple.relation_id);
  const auto head_mentions = doc.mentions_of(triple.head_id);
  if (head_mentions.empty())
    throw EncoderError("build_ed_input: head entity '" + triple.head_id +
                       "' has no mention in document '" + doc.id + "'");
  // surface form of the head entity's first occurrence
  std::vector<std::string> head_surface(
      doc.tokens.begin() + static_cast<std::ptrdiff_t>(head_mentions[0].start),
      doc.tokens.begin() + static_cast<std::ptrdiff_t>(head_mentions[0].end + 1));

  std::vector<std::string> entity_ids = doc.entity_order();
  std::vector<std::vector<Span>> spans;
  for (const auto& e : entity_ids) spans.push_back(doc.mentions_of(e));
  return build_ed_input_tokens(doc.tokens, entity_ids, spans, triple.head_id,
                               triple.tail_id, name_it->second, head_surface,
                               vocab, max_seq_len);
}

}  // namespace erpt

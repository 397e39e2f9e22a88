#include "erpt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "erpt/repr.hpp"

namespace erpt {

using nlohmann::json;

double lr_schedule(std::size_t step, std::size_t total_steps, double base_lr,
                   double warmup_frac) {
  if (total_steps == 0) throw TrainerError("lr_schedule: total_steps is zero");
  if (step > total_steps) throw TrainerError("lr_schedule: step past total_steps");
  const double t = static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  const double w = warmup_frac * t;
  if (s < w) return base_lr * s / w;
  return base_lr * (t - s) / (t - w);
}

AdamState AdamState::init_like(const EncoderParams& params) {
  AdamState st;
  for (const auto& [name, p] : params.named()) {
    (void)name;
    st.m.emplace_back(p.size(), 0.0);
    st.v.emplace_back(p.size(), 0.0);
  }
  return st;
}

void adam_step(const EncoderParams& params, AdamState& state, double lr,
               const AdamConfig& cfg) {
  const auto named = params.named();
  if (named.size() != state.m.size())
    throw TrainerError("adam_step: optimizer state does not match parameters");
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t pi = 0; pi < named.size(); ++pi) {
    const auto& [name, param] = named[pi];
    auto& p = const_cast<Tensor&>(param);
    auto& val = p.values();
    auto& g = p.grad();
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (std::size_t i = 0; i < val.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw TrainerError("adam_step: non-finite gradient in parameter '" + name + "'");
      val[i] -= lr * cfg.weight_decay * val[i];  // decoupled weight decay
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      val[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

double clip_gradients(const EncoderParams& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, param] : params.named()) {
    (void)name;
    auto& p = const_cast<Tensor&>(param);
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (const auto& [name, param] : params.named()) {
      (void)name;
      auto& p = const_cast<Tensor&>(param);
      for (double& g : p.grad()) g *= f;
    }
  }
  return norm;
}

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string metrics_header() {
  return "step,l_ed,l_rd,l_mlm,l_total,lr,ed_instances,rd_instances,masked_tokens";
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << metrics_header() << "\n";
  for (const auto& r : rows)
    os << r.step << "," << fmt(r.l_ed) << "," << fmt(r.l_rd) << "," << fmt(r.l_mlm)
       << "," << fmt(r.l_total) << "," << fmt(r.lr) << "," << r.ed_instances << ","
       << r.rd_instances << "," << r.masked_tokens << "\n";
  return os.str();
}

// --- config serialization -------------------------------------------

namespace {
const char* scope_name(PairScope s) {
  switch (s) {
    case PairScope::all: return "all";
    case PairScope::single_sentence: return "single";
    case PairScope::cross_sentence: return "cross";
  }
  return "all";
}
PairScope scope_from(const std::string& s) {
  if (s == "all") return PairScope::all;
  if (s == "single") return PairScope::single_sentence;
  if (s == "cross") return PairScope::cross_sentence;
  throw TrainerError("unknown rd_scope: " + s);
}
}  // namespace

std::string configs_to_json(const EncoderConfig& enc, const TrainConfig& train) {
  json j;
  j["encoder"] = {{"layers", enc.layers},       {"hidden_dim", enc.hidden_dim},
                  {"heads", enc.heads},         {"ffn_dim", enc.ffn_dim},
                  {"max_seq_len", enc.max_seq_len}, {"vocab_size", enc.vocab_size},
                  {"tie_mlm", enc.tie_mlm}};
  j["train"] = {{"temperature", train.temperature},
                {"n_neg", train.n_neg},
                {"mask_rate", train.mask_rate},
                {"base_lr", train.base_lr},
                {"warmup_frac", train.warmup_frac},
                {"weight_decay", train.weight_decay},
                {"clip_norm", train.clip_norm},
                {"total_steps", train.total_steps},
                {"batch_size_docs", train.batch_size_docs},
                {"checkpoint_interval", train.checkpoint_interval},
                {"rd_per_batch_cap", train.rd_per_batch_cap},
                {"grad_accum", train.grad_accum},
                {"seed", train.seed},
                {"loss_ed", train.loss_ed},
                {"loss_rd", train.loss_rd},
                {"loss_mlm", train.loss_mlm},
                {"rd_scope", scope_name(train.rd_scope)},
                {"repr_mode", train.repr_mode == ReprMode::mean_pool ? "mean" : "marker"}};
  return j.dump();
}

void configs_from_json(const std::string& text, EncoderConfig& enc,
                       TrainConfig& train) {
  json j = json::parse(text);
  const auto& e = j.at("encoder");
  enc.layers = e.at("layers");
  enc.hidden_dim = e.at("hidden_dim");
  enc.heads = e.at("heads");
  enc.ffn_dim = e.at("ffn_dim");
  enc.max_seq_len = e.at("max_seq_len");
  enc.vocab_size = e.at("vocab_size");
  enc.tie_mlm = e.at("tie_mlm");
  const auto& t = j.at("train");
  train.temperature = t.at("temperature");
  train.n_neg = t.at("n_neg");
  train.mask_rate = t.at("mask_rate");
  train.base_lr = t.at("base_lr");
  train.warmup_frac = t.at("warmup_frac");
  train.weight_decay = t.at("weight_decay");
  train.clip_norm = t.at("clip_norm");
  train.total_steps = t.at("total_steps");
  train.batch_size_docs = t.at("batch_size_docs");
  train.checkpoint_interval = t.at("checkpoint_interval");
  train.rd_per_batch_cap = t.at("rd_per_batch_cap");
  train.grad_accum = t.at("grad_accum");
  train.seed = t.at("seed");
  train.loss_ed = t.at("loss_ed");
  train.loss_rd = t.at("loss_rd");
  train.loss_mlm = t.at("loss_mlm");
  train.rd_scope = scope_from(t.at("rd_scope"));
  train.repr_mode =
      t.at("repr_mode") == "mean" ? ReprMode::mean_pool : ReprMode::entity_marker;
}

// --- checkpoint io ---------------------------------------------------

namespace {

constexpr char kMagic[4] = {'E', 'R', 'C', 'A'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <class T>
void write_pod(std::ofstream& out, T v) {
  write_bytes(out, &v, sizeof(v));
}
void write_string(std::ofstream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  write_bytes(out, s.data(), s.size());
}
void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  write_pod<std::uint64_t>(out, v.size());
  write_bytes(out, v.data(), v.size() * sizeof(double));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw TrainerError("checkpoint: truncated or corrupt file");
}
template <class T>
T read_pod(std::ifstream& in) {
  T v;
  read_bytes(in, &v, sizeof(v));
  return v;
}
std::string read_string(std::ifstream& in) {
  const auto n = read_pod<std::uint64_t>(in);
  if (n > (1ull << 32)) throw TrainerError("checkpoint: corrupt string length");
  std::string s(n, '\0');
  read_bytes(in, s.data(), n);
  return s;
}
std::vector<double> read_doubles(std::ifstream& in) {
  const auto n = read_pod<std::uint64_t>(in);
  if (n > (1ull << 34)) throw TrainerError("checkpoint: corrupt block length");
  std::vector<double> v(n);
  read_bytes(in, v.data(), n * sizeof(double));
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw TrainerError("cannot write checkpoint: " + tmp);
    write_bytes(out, kMagic, 4);
    write_pod(out, kVersion);
    write_string(out, configs_to_json(ckpt.enc_cfg, ckpt.train_cfg));
    write_pod(out, ckpt.vocab_hash);
    write_pod(out, ckpt.step);
    const auto named = ckpt.params.named();
    write_pod<std::uint64_t>(out, named.size());
    for (const auto& [name, p] : named) {
      write_string(out, name);
      write_pod<std::uint64_t>(out, p.shape().size());
      for (auto d : p.shape()) write_pod<std::uint64_t>(out, d);
      write_doubles(out, p.values());
    }
    write_pod<std::uint64_t>(out, ckpt.opt.t);
    write_pod<std::uint64_t>(out, ckpt.opt.m.size());
    for (const auto& m : ckpt.opt.m) write_doubles(out, m);
    for (const auto& v : ckpt.opt.v) write_doubles(out, v);
    if (!out) throw TrainerError("checkpoint write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TrainerError("cannot open checkpoint: " + path);
  char magic[4];
  read_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw TrainerError("checkpoint: bad magic bytes");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion)
    throw TrainerError("checkpoint: unsupported format version " +
                       std::to_string(version));
  Checkpoint ckpt;
  configs_from_json(read_string(in), ckpt.enc_cfg, ckpt.train_cfg);
  ckpt.vocab_hash = read_pod<std::uint64_t>(in);
  ckpt.step = read_pod<std::uint64_t>(in);
  ckpt.params = EncoderParams::init(ckpt.enc_cfg, 0);
  const auto named = ckpt.params.named();
  const auto n_params = read_pod<std::uint64_t>(in);
  if (n_params != named.size())
    throw TrainerError("checkpoint: parameter count does not match config");
  for (const auto& [name, p] : named) {
    const std::string got = read_string(in);
    if (got != name)
      throw TrainerError("checkpoint: parameter order mismatch at '" + got + "'");
    const auto ndim = read_pod<std::uint64_t>(in);
    std::vector<std::size_t> shape;
    for (std::uint64_t d = 0; d < ndim; ++d)
      shape.push_back(read_pod<std::uint64_t>(in));
    if (shape != p.shape())
      throw TrainerError("checkpoint: shape mismatch for '" + name + "'");
    auto vals = read_doubles(in);
    if (vals.size() != p.size())
      throw TrainerError("checkpoint: value count mismatch for '" + name + "'");
    const_cast<Tensor&>(p).values() = std::move(vals);
  }
  ckpt.opt.t = read_pod<std::uint64_t>(in);
  const auto n_m = read_pod<std::uint64_t>(in);
  if (n_m != named.size()) throw TrainerError("checkpoint: moment count mismatch");
  for (std::uint64_t i = 0; i < n_m; ++i) ckpt.opt.m.push_back(read_doubles(in));
  for (std::uint64_t i = 0; i < n_m; ++i) ckpt.opt.v.push_back(read_doubles(in));
  return ckpt;
}

// --- training loop ---------------------------------------------------

namespace {

// Per-document view of the effective token sequence (plain or marked).
struct DocView {
  std::vector<std::string> tokens;
  std::vector<std::string> entity_ids;
  std::vector<std::vector<Span>> rep_spans;  // mention spans or [S] positions
  std::vector<std::vector<std::string>> surfaces;  // head-prefix surface forms
};

DocView make_view(const Document& doc, ReprMode mode, std::mt19937_64& rng) {
  DocView v;
  if (mode == ReprMode::mean_pool) {
    v.tokens = doc.tokens;
    v.entity_ids = doc.entity_order();
    for (const auto& e : v.entity_ids) v.rep_spans.push_back(doc.mentions_of(e));
  } else {
    MarkedDocument marked = apply_entity_markers(doc, rng);
    v.tokens = std::move(marked.tokens);
    v.entity_ids = std::move(marked.entity_ids);
    v.rep_spans = std::move(marked.marker_spans);
  }
  for (const auto& e : v.entity_ids) {
    const auto spans = doc.mentions_of(e);
    v.surfaces.emplace_back(
        doc.tokens.begin() + static_cast<std::ptrdiff_t>(spans[0].start),
        doc.tokens.begin() + static_cast<std::ptrdiff_t>(spans[0].end + 1));
  }
  return v;
}

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v))
    throw TrainerError(std::string("train: non-finite ") + what);
  return v;
}

}  // namespace

TrainResult train(const FilteredCorpus& corpus, const KnowledgeBase& kb,
                  const Vocabulary& vocab, const EncoderConfig& enc_cfg,
                  const TrainConfig& train_cfg,
                  const std::optional<Checkpoint>& resume,
                  const std::optional<std::string>& checkpoint_dir) {
  train_cfg.validate();
  enc_cfg.validate();
  if (corpus.documents.empty()) throw TrainerError("train: empty corpus");

  TrainResult result;
  if (resume) {
    if (resume->vocab_hash != vocab.hash())
      throw TrainerError("train: vocabulary hash does not match checkpoint");
    result.checkpoint = *resume;
  } else {
    result.checkpoint.enc_cfg = enc_cfg;
    result.checkpoint.train_cfg = train_cfg;
    result.checkpoint.vocab_hash = vocab.hash();
    result.checkpoint.step = 0;
    result.checkpoint.params = EncoderParams::init(enc_cfg, train_cfg.seed);
    result.checkpoint.opt = AdamState::init_like(result.checkpoint.params);
  }
  EncoderParams& params = result.checkpoint.params;
  AdamConfig adam_cfg;
  adam_cfg.weight_decay = train_cfg.weight_decay;

  auto save_at = [&](std::uint64_t step) {
    if (!checkpoint_dir) return;
    std::filesystem::create_directories(*checkpoint_dir);
    save_checkpoint(result.checkpoint,
                    *checkpoint_dir + "/ckpt_" + std::to_string(step) + ".bin");
  };

  const auto total = static_cast<std::uint64_t>(train_cfg.total_steps);
  for (std::uint64_t step = result.checkpoint.step; step < total; ++step) {
    MetricsRow row;
    row.step = step;
    double acc_ed = 0, acc_rd = 0, acc_mlm = 0, acc_total = 0;

    for (int micro = 0; micro < train_cfg.grad_accum; ++micro) {
      const std::uint64_t micro_index =
          step * static_cast<std::uint64_t>(train_cfg.grad_accum) +
          static_cast<std::uint64_t>(micro);
      auto rng = derive_rng(train_cfg.seed, micro_index);
      Batch batch =
          batch_for_step(corpus.triple_sets, static_cast<std::size_t>(
                                                 train_cfg.batch_size_docs),
                         train_cfg.seed, micro_index);

      std::vector<DocView> views;
      views.reserve(batch.doc_indices.size());
      for (auto di : batch.doc_indices)
        views.push_back(make_view(corpus.documents[di], train_cfg.repr_mode, rng));

      // --- entity discrimination -----------------------------------
      std::vector<Tensor> ed_terms;
      std::vector<std::optional<EDInput>> ed_inputs(views.size());
      if (train_cfg.loss_ed) {
        for (std::size_t bi = 0; bi < views.size(); ++bi) {
          const auto& tset = corpus.triple_sets[batch.doc_indices[bi]];
          // rejected instances (mentions truncated away) are resampled
          for (int attempt = 0; attempt < 4; ++attempt) {
            auto trip = sample_ed(tset, rng);
            if (!trip) break;
            const auto& view = views[bi];
            const auto hit = std::find(view.entity_ids.begin(),
                                       view.entity_ids.end(), trip->head_id);
            if (hit == view.entity_ids.end()) break;
            const auto hidx =
                static_cast<std::size_t>(hit - view.entity_ids.begin());
            EDInput in = build_ed_input_tokens(
                view.tokens, view.entity_ids, view.rep_spans, trip->head_id,
                trip->tail_id, kb.relation_names.at(trip->relation_id),
                view.surfaces[hidx], vocab, enc_cfg.max_seq_len);
            if (!in.ok) continue;
            Tensor hidden = encode(in.ids, enc_cfg, params);
            std::vector<EntityRepr> reps;
            for (std::size_t e = 0; e < in.entity_ids.size(); ++e)
              reps.push_back(
                  entity_repr(hidden, in.entity_ids[e], in.mention_spans[e]));
            auto res = ed_loss(reps, in.head_index, in.tail_index,
                               train_cfg.temperature);
            ed_terms.push_back(res.loss);
            ed_inputs[bi] = std::move(in);
            break;
          }
        }
        row.ed_instances += ed_terms.size();
      }

      // --- relation discrimination ----------------------------------
      std::vector<Tensor> rd_terms;
      if (train_cfg.loss_rd) {
        std::vector<Tensor> raw_hidden(views.size());
        std::vector<std::vector<std::vector<Span>>> raw_spans(views.size());
        auto hidden_of = [&](std::size_t bi) -> Tensor& {
          if (!raw_hidden[bi].defined()) {
            const auto& view = views[bi];
            std::vector<int> ids = tokenize(view.tokens, vocab);
            const std::size_t keep = std::min(ids.size(), enc_cfg.max_seq_len);
            ids.resize(keep);
            raw_spans[bi].resize(view.entity_ids.size());
            for (std::size_t e = 0; e < view.entity_ids.size(); ++e)
              for (const auto& sp : view.rep_spans[e])
                if (sp.end < keep) raw_spans[bi][e].push_back(sp);
            raw_hidden[bi] = encode(ids, enc_cfg, params);
          }
          return raw_hidden[bi];
        };
        // per (doc, entity) representation cache shared across samples
        std::map<std::pair<std::size_t, std::string>, Tensor> rep_cache;
        auto entity_of = [&](std::size_t bi, const std::string& eid) -> Tensor {
          auto key = std::make_pair(bi, eid);
          auto it = rep_cache.find(key);
          if (it != rep_cache.end()) return it->second;
          Tensor& hidden = hidden_of(bi);
          const auto& view = views[bi];
          const auto eit =
              std::find(view.entity_ids.begin(), view.entity_ids.end(), eid);
          if (eit == view.entity_ids.end() ||
              raw_spans[bi][static_cast<std::size_t>(
                               eit - view.entity_ids.begin())].empty())
            return Tensor{};
          const auto e = static_cast<std::size_t>(eit - view.entity_ids.begin());
          Tensor rep = entity_repr(hidden, eid, raw_spans[bi][e]).vector;
          rep_cache.emplace(key, rep);
          return rep;
        };
        auto relation_of = [&](const BatchTriple& bt) -> Tensor {
          Tensor h = entity_of(bt.doc_index, bt.triple.head_id);
          Tensor t = entity_of(bt.doc_index, bt.triple.tail_id);
          if (!h.defined() || !t.defined()) return Tensor{};
          return concat({h, t});
        };

        for (int s = 0; s < train_cfg.rd_per_batch_cap; ++s) {
          auto sample = sample_rd(batch.all, batch.positives, train_cfg.n_neg,
                                  rng, train_cfg.rd_scope);
          if (!sample) break;
          Tensor ar = relation_of(sample->anchor);
          Tensor pr = relation_of(sample->positive);
          if (!ar.defined() || !pr.defined()) continue;
          std::vector<RelationRepr> negs;
          for (const auto& c : sample->negatives) {
            Tensor nr = relation_of(c);
            if (nr.defined())
              negs.push_back({c.triple.head_id, c.triple.tail_id, nr});
          }
          if (negs.empty()) continue;
          RelationRepr anchor{sample->anchor.triple.head_id,
                              sample->anchor.triple.tail_id, ar};
          RelationRepr positive{sample->positive.triple.head_id,
                                sample->positive.triple.tail_id, pr};
          rd_terms.push_back(rd_loss(anchor, positive, negs, train_cfg.temperature));
        }
        row.rd_instances += rd_terms.size();
      }

      // --- masked language modeling ---------------------------------
      std::vector<Tensor> mlm_terms;
      if (train_cfg.loss_mlm) {
        for (std::size_t bi = 0; bi < views.size(); ++bi) {
          std::vector<int> ids;
          std::size_t prefix = 0;
          if (ed_inputs[bi]) {
            ids = ed_inputs[bi]->ids;
            prefix = ed_inputs[bi]->prefix_len;
          } else {
            ids = tokenize(views[bi].tokens, vocab);
            ids.resize(std::min(ids.size(), enc_cfg.max_seq_len));
          }
          const auto maskable = maskable_positions(ids, prefix, vocab);
          const auto masked =
              mask_tokens(ids, maskable, train_cfg.mask_rate, rng, vocab);
          if (masked.positions.empty()) continue;
          Tensor hidden = encode(masked.masked_ids, enc_cfg, params);
          Tensor logits = mlm_logits(hidden, enc_cfg, params);
          mlm_terms.push_back(mlm_loss(logits, masked.positions, masked.targets));
          row.masked_tokens += masked.positions.size();
        }
      }

      Tensor l_ed = mean_scalars(ed_terms);
      Tensor l_rd = mean_scalars(rd_terms);
      Tensor l_mlm = mean_scalars(mlm_terms);
      Tensor total_loss = joint_loss(l_ed, l_rd, l_mlm);
      acc_ed += finite_or_throw(l_ed.item(), "ED loss");
      acc_rd += finite_or_throw(l_rd.item(), "RD loss");
      acc_mlm += finite_or_throw(l_mlm.item(), "MLM loss");
      acc_total += total_loss.item();
      if (train_cfg.grad_accum > 1)
        total_loss = scale(total_loss, 1.0 / train_cfg.grad_accum);
      backward(total_loss);
    }

    clip_gradients(params, train_cfg.clip_norm);
    const double lr =
        lr_schedule(step, total, train_cfg.base_lr, train_cfg.warmup_frac);
    adam_step(params, result.checkpoint.opt, lr, adam_cfg);
    for (const auto& [name, p] : params.named()) {
      (void)name;
      const_cast<Tensor&>(p).zero_grad();
    }

    const double inv_accum = 1.0 / train_cfg.grad_accum;
    row.l_ed = acc_ed * inv_accum;
    row.l_rd = acc_rd * inv_accum;
    row.l_mlm = acc_mlm * inv_accum;
    row.l_total = acc_total * inv_accum;
    row.lr = lr;
    result.metrics.push_back(row);

    result.checkpoint.step = step + 1;
    if (train_cfg.checkpoint_interval > 0 &&
        (step + 1) % static_cast<std::uint64_t>(train_cfg.checkpoint_interval) == 0 &&
        step + 1 != total)
      save_at(step + 1);
  }
  save_at(total);
  return result;
}

}  // namespace erpt

#include "erpt/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "erpt/objectives.hpp"
#include "erpt/repr.hpp"

namespace erpt {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << "gradcheck over " << instances << " instances, max relative errors: "
     << "ed=" << max_rel_err_ed << " rd=" << max_rel_err_rd
     << " mlm=" << max_rel_err_mlm << " joint=" << max_rel_err_joint;
  return os.str();
}

namespace {

struct Instance {
  std::vector<int> ids;
  std::vector<std::vector<Span>> entity_spans;  // >= 4 entities
  std::vector<std::size_t> mask_positions;
  std::vector<int> mask_targets;
};

Instance make_instance(const EncoderConfig& cfg, std::mt19937_64& rng) {
  Instance in;
  const std::size_t len = 14 + rng() % 6;
  const int content = static_cast<int>(cfg.vocab_size) - kNumReserved;
  for (std::size_t i = 0; i < len; ++i)
    in.ids.push_back(kNumReserved + static_cast<int>(rng() % content));
  // four disjoint single/double-token entity spans
  std::vector<std::size_t> starts = {1, 4, 7, 10};
  for (auto s : starts) {
    const std::size_t w = rng() % 2;
    in.entity_spans.push_back({{s, s + w}});
  }
  for (std::size_t p : {std::size_t{2}, std::size_t{6}, len - 2}) {
    in.mask_positions.push_back(p);
    in.mask_targets.push_back(in.ids[p]);
  }
  return in;
}

// losses rebuilt from scratch so finite differences can re-evaluate
double eval_loss(const char* which, const Instance& in, const EncoderConfig& cfg,
                 const EncoderParams& params, double temperature) {
  Tensor hidden = encode(in.ids, cfg, params);
  std::vector<EntityRepr> reps;
  for (std::size_t e = 0; e < in.entity_spans.size(); ++e)
    reps.push_back(entity_repr(hidden, "e" + std::to_string(e), in.entity_spans[e]));

  Tensor ed, rd, mlm;
  if (which[0] == 'e' || which[0] == 'j')
    ed = ed_loss(reps, 0, 1, temperature).loss;
  if (which[0] == 'r' || which[0] == 'j') {
    RelationRepr anchor = relation_repr(reps[0], reps[1]);
    RelationRepr positive = relation_repr(reps[2], reps[3]);
    std::vector<RelationRepr> negs = {relation_repr(reps[1], reps[3]),
                                      relation_repr(reps[3], reps[0])};
    rd = rd_loss(anchor, positive, negs, temperature);
  }
  if (which[0] == 'm' || which[0] == 'j') {
    Tensor logits = mlm_logits(hidden, cfg, params);
    mlm = mlm_loss(logits, in.mask_positions, in.mask_targets);
  }
  switch (which[0]) {
    case 'e': return ed.item();
    case 'r': return rd.item();
    case 'm': return mlm.item();
    default: return joint_loss(ed, rd, mlm).item();
  }
}

Tensor build_loss(const char* which, const Instance& in, const EncoderConfig& cfg,
                  const EncoderParams& params, double temperature) {
  Tensor hidden = encode(in.ids, cfg, params);
  std::vector<EntityRepr> reps;
  for (std::size_t e = 0; e < in.entity_spans.size(); ++e)
    reps.push_back(entity_repr(hidden, "e" + std::to_string(e), in.entity_spans[e]));
  if (which[0] == 'e') return ed_loss(reps, 0, 1, temperature).loss;
  if (which[0] == 'r') {
    RelationRepr anchor = relation_repr(reps[0], reps[1]);
    RelationRepr positive = relation_repr(reps[2], reps[3]);
    std::vector<RelationRepr> negs = {relation_repr(reps[1], reps[3]),
                                      relation_repr(reps[3], reps[0])};
    return rd_loss(anchor, positive, negs, temperature);
  }
  if (which[0] == 'm') {
    Tensor logits = mlm_logits(hidden, cfg, params);
    return mlm_loss(logits, in.mask_positions, in.mask_targets);
  }
  Tensor ed = ed_loss(reps, 0, 1, temperature).loss;
  RelationRepr anchor = relation_repr(reps[0], reps[1]);
  RelationRepr positive = relation_repr(reps[2], reps[3]);
  std::vector<RelationRepr> negs = {relation_repr(reps[1], reps[3]),
                                    relation_repr(reps[3], reps[0])};
  Tensor rd = rd_loss(anchor, positive, negs, temperature);
  Tensor logits = mlm_logits(hidden, cfg, params);
  Tensor mlm = mlm_loss(logits, in.mask_positions, in.mask_targets);
  return joint_loss(ed, rd, mlm);
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& opts) {
  EncoderConfig cfg;
  cfg.layers = 2;
  cfg.hidden_dim = 16;
  cfg.heads = 2;
  cfg.ffn_dim = 32;
  cfg.max_seq_len = 32;
  cfg.vocab_size = kNumReserved + 24;
  const double temperature = 0.5;  // mild, keeps the FD step well-conditioned

  GradCheckReport report;
  report.instances = opts.instances;
  const char* losses[] = {"ed", "rd", "mlm", "joint"};
  double* errs[] = {&report.max_rel_err_ed, &report.max_rel_err_rd,
                    &report.max_rel_err_mlm, &report.max_rel_err_joint};

  for (int inst = 0; inst < opts.instances; ++inst) {
    std::mt19937_64 rng(opts.seed * 1000003 + static_cast<std::uint64_t>(inst));
    EncoderParams params = EncoderParams::init(cfg, rng());
    // larger weights than init so activations are not vanishingly small
    for (const auto& [name, p] : params.named()) {
      (void)name;
      for (auto& v : const_cast<Tensor&>(p).values()) v *= 5.0;
    }
    Instance in = make_instance(cfg, rng);

    for (int li = 0; li < 4; ++li) {
      for (const auto& [name, p] : params.named()) {
        (void)name;
        const_cast<Tensor&>(p).zero_grad();
      }
      Tensor loss = build_loss(losses[li], in, cfg, params, temperature);
      backward(loss);
      for (const auto& [name, p] : params.named()) {
        (void)name;
        auto& param = const_cast<Tensor&>(p);
        auto& vals = param.values();
        const auto& grads = param.grad();
        for (int c = 0; c < opts.coords_per_param; ++c) {
          const std::size_t i = rng() % vals.size();
          const double keep = vals[i];
          vals[i] = keep + opts.fd_step;
          const double up = eval_loss(losses[li], in, cfg, params, temperature);
          vals[i] = keep - opts.fd_step;
          const double down = eval_loss(losses[li], in, cfg, params, temperature);
          vals[i] = keep;
          const double fd = (up - down) / (2.0 * opts.fd_step);
          const double denom = std::max({std::abs(fd), std::abs(grads[i]), 1e-4});
          const double rel = std::abs(fd - grads[i]) / denom;
          *errs[li] = std::max(*errs[li], rel);
        }
      }
    }
  }
  return report;
}

}  // namespace erpt

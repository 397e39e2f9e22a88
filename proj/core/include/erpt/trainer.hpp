// Joint optimization: Adam with warmup-then-linear-decay, gradient
// clipping, deterministic per-step sampling streams, checkpointing and
// per-step metrics.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "erpt/corpus.hpp"
#include "erpt/encoder.hpp"
#include "erpt/objectives.hpp"
#include "erpt/sampler.hpp"

namespace erpt {

struct TrainerError : std::runtime_error {
  explicit TrainerError(const std::string& what) : std::runtime_error(what) {}
};

// Linear warmup to base_lr over the first warmup_frac of total_steps,
// then linear decay to zero.
double lr_schedule(std::size_t step, std::size_t total_steps, double base_lr,
                   double warmup_frac = 0.2);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;

  static AdamState init_like(const EncoderParams& params);
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

// One update over every named parameter; decoupled weight decay is
// applied before the moment update. Throws on non-finite gradients,
// naming the parameter.
void adam_step(const EncoderParams& params, AdamState& state, double lr,
               const AdamConfig& cfg);

// Scale all parameter gradients so their global norm is at most
// max_norm; returns the pre-clip norm.
double clip_gradients(const EncoderParams& params, double max_norm);

struct MetricsRow {
  std::uint64_t step = 0;
  double l_ed = 0, l_rd = 0, l_mlm = 0, l_total = 0, lr = 0;
  std::size_t ed_instances = 0, rd_instances = 0, masked_tokens = 0;
};
std::string metrics_header();
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

struct Checkpoint {
  EncoderConfig enc_cfg;
  TrainConfig train_cfg;
  std::uint64_t vocab_hash = 0;
  std::uint64_t step = 0;
  EncoderParams params;
  AdamState opt;
};

// Versioned binary: magic "ERCA", u32 format version, length-prefixed
// config text, vocabulary hash, then little-endian f64 parameter
// blocks in declaration order, followed by the optimizer moments.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string configs_to_json(const EncoderConfig& enc, const TrainConfig& train);
void configs_from_json(const std::string& text, EncoderConfig& enc,
                       TrainConfig& train);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> metrics;  // rows produced by this call only
};

// Runs steps [resume.step, total_steps). When checkpoint_dir is set,
// writes ckpt_<step>.bin every checkpoint_interval steps and at the
// end (atomic write-then-rename).
TrainResult train(const FilteredCorpus& corpus, const KnowledgeBase& kb,
                  const Vocabulary& vocab, const EncoderConfig& enc_cfg,
                  const TrainConfig& train_cfg,
                  const std::optional<Checkpoint>& resume = std::nullopt,
                  const std::optional<std::string>& checkpoint_dir = std::nullopt);

}  // namespace erpt

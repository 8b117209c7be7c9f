/* Copyright 2026 The latentstory Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

// Training loops for warm-start, fine-tuning and the prior, plus the
// held-out probes used to judge a trained model.

#include "latentstory/autograd.hpp"
#include "latentstory/config.hpp"
#include "latentstory/corpus.hpp"
#include "latentstory/errors.hpp"
#include "latentstory/generator.hpp"
#include "latentstory/latent_codec.hpp"
#include "latentstory/optimizer.hpp"
#include "latentstory/prior.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace latentstory {

/// lr0 * (1 - step / total).
double lr_schedule(long step, long total, double lr0 = 1e-4);

struct TrainLogRow {
  long step = 0;
  double lr = 0.0;
  double tau = 0.0;
  double loss = 0.0;
  double recon = 0.0;
  double entr = 0.0;
  double disc = 0.0;       // mean over examples with at least two EDUs
  double grad_norm = 0.0;  // before clipping
};

struct TrainHooks {
  std::function<void(const TrainLogRow&)> on_log;
  std::function<void(long step)> on_checkpoint;  // called every checkpoint_every steps
};

/// Appends log rows as CSV; writes the header when the file is new.
class CsvLog {
 public:
  explicit CsvLog(const std::filesystem::path& path);
  void write(const TrainLogRow& row);

 private:
  std::ofstream out_;
};

/// Example indices for each optimizer step: shuffled epochs, or the first
/// batch repeated in overfit mode.
class BatchPlan {
 public:
  BatchPlan(std::size_t n_examples, int per_step, bool overfit, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  std::size_t n_;
  int per_step_;
  bool overfit_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

inline TauSchedule tau_schedule_for(const TrainConfig& cfg) {
  return TauSchedule{cfg.tau_max, cfg.tau_min, cfg.tau_decay, cfg.tau_horizon};
}

/// Warm-start (empty prompts, fixed tau, no discourse loss) or fine-tune,
/// depending on cfg.stage. Returns the logged rows.
template <typename Scalar>
std::vector<TrainLogRow> train_stage1(Generator<Scalar>& gen, const std::vector<PromptStoryPair>& data,
                                      const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  validate(cfg);
  const Stage stage = cfg.parsed_stage();
  if (stage == Stage::Prior) throw ConfigError("stage: train_stage1 needs warmstart or finetune");
  if (data.empty()) throw DataError("training corpus is empty");
  const bool warm = stage == Stage::WarmStart;
  const LossWeights weights{cfg.lambda1, warm ? 0.0 : cfg.lambda2};
  const TauSchedule tau = tau_schedule_for(cfg);
  const int per_step = cfg.overfit_one_batch ? cfg.batch_size : cfg.batch_size * cfg.grad_accum;

  ParameterList<Scalar> params = gen.parameters();
  AdamW<Scalar> opt(params, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
  BatchPlan plan(data.size(), per_step, cfg.overfit_one_batch, cfg.seed);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0xd409u);
  const ForwardContext ctx{true, gen.config.dropout, &dropout_rng};

  std::vector<TrainLogRow> rows;
  for (long step = 0; step < cfg.steps; ++step) {
    TrainLogRow row;
    row.step = step;
    row.lr = cfg.lr_decay ? lr_schedule(step, cfg.steps, cfg.lr) : cfg.lr;
    row.tau = warm ? cfg.tau_max : tau(step);
    opt.zero_grad();
    const auto batch = plan.next();
    int disc_count = 0;
    for (std::size_t idx : batch) {
      const PromptStoryPair& ex = data[idx];
      const Eigen::Index codes_len = static_cast<Eigen::Index>(ex.story_ids.size()) / gen.block();
      const Matrix<Scalar> noise =
          gumbel_noise<Scalar>(codes_len, gen.config.codes, cfg.seed, static_cast<std::uint64_t>(step), idx);
      Graph<Scalar> g;
      auto terms = gen.stage1_loss(g, ex, static_cast<Scalar>(row.tau), &noise, weights, ctx, warm);
      g.backward(terms.total, Scalar(1) / static_cast<Scalar>(batch.size()));
      row.loss += static_cast<double>(terms.total.scalar());
      row.recon += static_cast<double>(terms.recon.scalar());
      row.entr += static_cast<double>(terms.entropy.scalar());
      if (terms.disc) {
        row.disc += static_cast<double>(terms.disc->scalar());
        ++disc_count;
      }
    }
    const double n = static_cast<double>(batch.size());
    row.loss /= n;
    row.recon /= n;
    row.entr /= n;
    row.disc = disc_count > 0 ? row.disc / disc_count : 0.0;
    row.grad_norm = clip_grad_norm(params, cfg.max_grad_norm);
    opt.step(row.lr);
    rows.push_back(row);
    if (hooks.on_log && (step % cfg.log_every == 0 || step + 1 == cfg.steps)) hooks.on_log(row);
    if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
      hooks.on_checkpoint(step + 1);
    }
  }
  return rows;
}

/// Posterior argmax targets (codes + eos) for every example, computed once.
template <typename Scalar>
std::vector<std::vector<int>> cache_targets(Generator<Scalar>& gen, const std::vector<PromptStoryPair>& data) {
  std::vector<std::vector<int>> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(make_targets(gen, ex));
  return out;
}

template <typename Scalar>
std::vector<TrainLogRow> train_prior(Prior<Scalar>& prior, const std::vector<PromptStoryPair>& data,
                                     const std::vector<std::vector<int>>& targets, const TrainConfig& cfg,
                                     const TrainHooks& hooks = {}) {
  validate(cfg);
  if (data.empty()) throw DataError("training corpus is empty");
  if (targets.size() != data.size()) throw DataError("prior: one target sequence per example is required");
  const int per_step = cfg.overfit_one_batch ? cfg.batch_size : cfg.batch_size * cfg.grad_accum;
  ParameterList<Scalar> params = prior.parameters();
  AdamW<Scalar> opt(params, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
  BatchPlan plan(data.size(), per_step, cfg.overfit_one_batch, cfg.seed);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9d10u);
  const ForwardContext ctx{true, prior.config.dropout, &dropout_rng};

  std::vector<TrainLogRow> rows;
  for (long step = 0; step < cfg.steps; ++step) {
    TrainLogRow row;
    row.step = step;
    row.lr = cfg.lr_decay ? lr_schedule(step, cfg.steps, cfg.lr) : cfg.lr;
    opt.zero_grad();
    const auto batch = plan.next();
    for (std::size_t idx : batch) {
      Graph<Scalar> g;
      Var<Scalar> loss = prior.prior_loss(g, data[idx].prompt_ids, targets[idx], ctx);
      g.backward(loss, Scalar(1) / static_cast<Scalar>(batch.size()));
      row.loss += static_cast<double>(loss.scalar());
    }
    row.loss /= static_cast<double>(batch.size());
    row.recon = row.loss;
    row.grad_norm = clip_grad_norm(params, cfg.max_grad_norm);
    opt.step(row.lr);
    rows.push_back(row);
    if (hooks.on_log && (step % cfg.log_every == 0 || step + 1 == cfg.steps)) hooks.on_log(row);
    if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
      hooks.on_checkpoint(step + 1);
    }
  }
  return rows;
}

template <typename Scalar>
double teacher_forced_accuracy(Prior<Scalar>& prior, const std::vector<PromptStoryPair>& data,
                               const std::vector<std::vector<int>>& targets) {
  long hits = 0;
  long total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto [h, t] = prior.teacher_forced_hits(data[i].prompt_ids, targets[i]);
    hits += h;
    total += t;
  }
  if (total == 0) throw DataError("no prior targets to score");
  return static_cast<double>(hits) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Held-out probes.

/// Posterior argmax codes covering the non-pad part of the story.
template <typename Scalar>
std::vector<int> posterior_codes(Generator<Scalar>& gen, const PromptStoryPair& ex) {
  std::vector<int> t = make_targets(gen, ex);
  t.pop_back();
  return t;
}

/// Per-token reconstruction NLL (nats) with hard embeddings of the given
/// codes, which must cover the whole padded story.
template <typename Scalar>
double reconstruction_nll(Generator<Scalar>& gen, const PromptStoryPair& ex, const std::vector<int>& codes) {
  Graph<Scalar> g(false);
  const ForwardContext ctx{};
  Var<Scalar> emb = gather_rows(g.parameter(gen.codebook.embedding), codes);
  Var<Scalar> hz = gen.guidance(g, emb);
  Var<Scalar> memory = gen.encode_prompt(g, ex.prompt_ids, ctx);
  const ReconstructionTargets t = reconstruction_targets(ex.story_ids, ex.story_mask);
  return static_cast<double>(gen.reconstruction_loss(gen.decode_with_codes(g, hz, t.inputs, memory, ctx), t).scalar());
}

struct CodeSwapResult {
  double true_nll = 0.0;
  double permuted_nll = 0.0;
};

/// Mean NLL with the posterior codes versus the same codes in shuffled order.
template <typename Scalar>
CodeSwapResult code_swap_probe(Generator<Scalar>& gen, const std::vector<PromptStoryPair>& data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CodeSwapResult r;
  for (const auto& ex : data) {
    Graph<Scalar> g(false);
    std::vector<int> codes =
        argmax_rows(gen.posterior_logits(g, ex.story_ids, ex.story_mask, ForwardContext{}).value());
    r.true_nll += reconstruction_nll(gen, ex, codes);
    std::vector<int> shuffled = codes;
    for (int attempt = 0; attempt < 8 && shuffled == codes; ++attempt) std::shuffle(shuffled.begin(), shuffled.end(), rng);
    r.permuted_nll += reconstruction_nll(gen, ex, shuffled);
  }
  r.true_nll /= static_cast<double>(data.size());
  r.permuted_nll /= static_cast<double>(data.size());
  return r;
}

/// Mean per-example fraction of distinct posterior codes.
template <typename Scalar>
double mean_code_utilization(Generator<Scalar>& gen, const std::vector<PromptStoryPair>& data) {
  double sum = 0.0;
  for (const auto& ex : data) {
    const auto codes = posterior_codes(gen, ex);
    std::vector<int> sorted = codes;
    std::sort(sorted.begin(), sorted.end());
    sum += static_cast<double>(std::unique(sorted.begin(), sorted.end()) - sorted.begin()) / static_cast<double>(codes.size());
  }
  return sum / static_cast<double>(data.size());
}

struct DiscourseProbe {
  double accuracy = 0.0;
  double majority_accuracy = 0.0;
  std::string majority_label;
  long pairs = 0;
};

/// Relation accuracy of the discourse head from hard posterior codes,
/// against always predicting the most frequent label of train_labels.
template <typename Scalar>
DiscourseProbe discourse_probe(Generator<Scalar>& gen, const std::vector<PromptStoryPair>& heldout,
                               const std::vector<PromptStoryPair>& train) {
  std::map<std::string, long> freq;
  for (const auto& ex : train) {
    if (!ex.annotation) continue;
    for (const auto& l : ex.annotation->labels) ++freq[l];
  }
  DiscourseProbe probe;
  long best = -1;
  for (const auto& [label, n] : freq) {
    if (n > best) {
      best = n;
      probe.majority_label = label;
    }
  }
  long hits = 0;
  long majority_hits = 0;
  for (const auto& ex : heldout) {
    if (!ex.annotation || ex.annotation->edus.size() < 2) continue;
    Graph<Scalar> g(false);
    std::vector<int> codes =
        argmax_rows(gen.posterior_logits(g, ex.story_ids, ex.story_mask, ForwardContext{}).value());
    Var<Scalar> hz = gen.guidance(g, gather_rows(g.parameter(gen.codebook.embedding), codes));
    const auto predicted = argmax_rows(gen.discourse_logits(g, hz, *ex.annotation).value());
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const int gold = relation_label_id(ex.annotation->labels[i]);
      hits += predicted[i] == gold ? 1 : 0;
      majority_hits += ex.annotation->labels[i] == probe.majority_label ? 1 : 0;
      ++probe.pairs;
    }
  }
  if (probe.pairs == 0) throw DataError("held-out set has no annotated EDU pairs");
  probe.accuracy = static_cast<double>(hits) / static_cast<double>(probe.pairs);
  probe.majority_accuracy = static_cast<double>(majority_hits) / static_cast<double>(probe.pairs);
  return probe;
}

}  // namespace latentstory

#include "fewner/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "fewner/errors.hpp"
#include "fewner/rng.hpp"

namespace fewner {

namespace {

// Seed-stream ordinals so the shuffle, negative sampling, and any future
// stochastic piece never share a stream.
constexpr std::uint64_t kShuffleStream = 0x5BA7;
constexpr std::uint64_t kNegativesStream = 0x4E47;

std::vector<std::vector<const Sentence*>> shuffled_batches(
    const std::vector<Sentence>& sentences, int batch_size, Rng& rng) {
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<std::vector<const Sentence*>> batches;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    std::vector<const Sentence*>& batch = batches.emplace_back();
    const std::size_t end =
        std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    for (std::size_t j = i; j < end; ++j) batch.push_back(&sentences[order[j]]);
  }
  return batches;
}

// The full label space a few-shot batch is scored against: every few-shot
// label plus O, independent of what the batch contains.
BatchLabelSpace full_label_space(const TypeInventory& inventory) {
  BatchLabelSpace space;
  for (const std::string& id : inventory.ids()) space.local_labels.push_back(id);
  for (std::size_t i = 0; i < space.local_labels.size(); ++i)
    space.global_to_local[space.local_labels[i]] = static_cast<int>(i);
  return space;
}

struct LoopSpec {
  const std::vector<Sentence>* sentences;
  const TypeInventory* inventory;
  int n_epochs;
  int total_steps;       // schedule horizon
  bool full_space;       // full inventory space instead of batch-present
  bool early_stop;       // patience on training loss
  const char* phase_name;
};

TrainLog run_training(BiEncoder& model, const LoopSpec& spec,
                      const TrainConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  TrainLog log;
  log.config_snapshot = config.to_json();

  AdamW optimizer(model.parameters(), config);
  EarlyStopTracker tracker(config.early_stop_patience);
  int global_step = 0;
  bool stop = false;
  for (int epoch = 1; epoch <= spec.n_epochs && !stop; ++epoch) {
    Rng shuffle_rng(mix_seed(config.seed, kShuffleStream,
                             static_cast<std::uint64_t>(epoch)));
    const auto batches =
        shuffled_batches(*spec.sentences, config.batch_size, shuffle_rng);
    double epoch_loss = 0.0;
    int epoch_steps = 0;
    for (std::size_t b = 0; b < batches.size() && !stop; ++b) {
      ++global_step;
      BatchLabelSpace space;
      if (spec.full_space) {
        space = full_label_space(*spec.inventory);
      } else {
        Rng neg_rng(mix_seed(config.seed, kNegativesStream,
                             static_cast<std::uint64_t>(global_step)));
        space = build_batch_label_space(batches[b], *spec.inventory,
                                        config.negatives_m, neg_rng);
      }

      model.zero_grad();
      const BatchLossResult result = model.batch_loss(
          batches[b], space, *spec.inventory, config.mask_o_in_loss, true);
      if (!std::isfinite(result.loss))
        throw RuntimeError(std::string("non-finite loss in ") + spec.phase_name +
                           " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1) + " (global step " +
                           std::to_string(global_step) + ")");
      clip_global_norm(model.gradients(), config.clip_norm);
      const double lr = lr_at(global_step, spec.total_steps, config.learning_rate);
      optimizer.step(model.gradients(), lr);

      log.steps.push_back({epoch, global_step, result.loss, lr, result.scored_tokens});
      epoch_loss += result.loss;
      ++epoch_steps;

      if (spec.early_stop && config.step_level_early_stop &&
          tracker.observe(result.loss)) {
        log.stopped_epoch = epoch;
        stop = true;
      }
    }
    if (epoch_steps > 0) log.epoch_mean_loss.push_back(epoch_loss / epoch_steps);

    if (spec.early_stop && !config.step_level_early_stop && epoch_steps > 0 &&
        tracker.observe(log.epoch_mean_loss.back())) {
      log.stopped_epoch = epoch;
      stop = true;
    }
  }
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return log;
}

}  // namespace

double preset_learning_rate(TrainPhase phase, bool derived_lit_corpus) {
  if (!derived_lit_corpus) return 1e-5;
  return phase == TrainPhase::kLabelInterpretation ? 1e-6 : 5e-6;
}

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw ValidationError("learning_rate must be > 0");
  if (early_stop_patience < 1) throw ValidationError("patience must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (epochs < 1 || max_epochs < 1) throw ValidationError("epoch counts must be >= 1");
  if (weight_decay < 0 || clip_norm <= 0)
    throw ValidationError("weight_decay must be >= 0 and clip_norm > 0");
  if (negatives_m < 0) throw ValidationError("negatives_m must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"epochs", epochs},
          {"max_epochs", max_epochs},
          {"batch_size", batch_size},
          {"early_stop_patience", early_stop_patience},
          {"weight_decay", weight_decay},
          {"clip_norm", clip_norm},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_eps", adam_eps},
          {"negatives_m", negatives_m},
          {"fs_full_label_space", fs_full_label_space},
          {"mask_o_in_loss", mask_o_in_loss},
          {"step_level_early_stop", step_level_early_stop},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig config;
  config.learning_rate = j.value("learning_rate", config.learning_rate);
  config.epochs = j.value("epochs", config.epochs);
  config.max_epochs = j.value("max_epochs", config.max_epochs);
  config.batch_size = j.value("batch_size", config.batch_size);
  config.early_stop_patience = j.value("early_stop_patience", config.early_stop_patience);
  config.weight_decay = j.value("weight_decay", config.weight_decay);
  config.clip_norm = j.value("clip_norm", config.clip_norm);
  config.beta1 = j.value("beta1", config.beta1);
  config.beta2 = j.value("beta2", config.beta2);
  config.adam_eps = j.value("adam_eps", config.adam_eps);
  config.negatives_m = j.value("negatives_m", config.negatives_m);
  config.fs_full_label_space = j.value("fs_full_label_space", config.fs_full_label_space);
  config.mask_o_in_loss = j.value("mask_o_in_loss", config.mask_o_in_loss);
  config.step_level_early_stop =
      j.value("step_level_early_stop", config.step_level_early_stop);
  config.seed = j.value("seed", config.seed);
  config.validate();
  return config;
}

double lr_at(int step, int total_steps, double peak) {
  if (step < 1 || total_steps < 1 || step > total_steps)
    throw ValidationError("schedule step outside [1, total]");
  const int warmup = static_cast<int>(
      std::ceil(0.1 * static_cast<double>(total_steps)));
  if (step <= warmup) return peak * step / warmup;
  return peak * (total_steps - step) / (total_steps - warmup);
}

void TrainLog::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  for (const StepRecord& s : steps) {
    const nlohmann::json j = {{"epoch", s.epoch},
                              {"step", s.step},
                              {"loss", s.loss},
                              {"lr", s.lr},
                              {"scored_tokens", s.scored_tokens}};
    out << j.dump() << "\n";
  }
  if (!out) throw RuntimeError("failed while writing '" + path.string() + "'");
}

void TrainLog::save_summary(const std::filesystem::path& path) const {
  const nlohmann::json j = {
      {"steps", steps.size()},
      {"epochs_run", epoch_mean_loss.size()},
      {"epoch_mean_loss", epoch_mean_loss},
      {"stopped_epoch", stopped_epoch},
      {"final_loss", steps.empty() ? nlohmann::json() : nlohmann::json(steps.back().loss)},
      {"wall_seconds", wall_seconds},
      {"config", config_snapshot}};
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw RuntimeError("failed while writing '" + path.string() + "'");
}

AdamW::AdamW(std::vector<Eigen::MatrixXd*> params, const TrainConfig& config)
    : params_(std::move(params)),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.adam_eps),
      weight_decay_(config.weight_decay) {
  for (const Eigen::MatrixXd* p : params_) {
    m_.emplace_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    v_.emplace_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
}

void AdamW::step(const std::vector<Eigen::MatrixXd*>& grads, double lr) {
  if (grads.size() != params_.size())
    throw ValidationError("gradient list does not match the parameter list");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Eigen::MatrixXd& p = *params_[i];
    const Eigen::MatrixXd& g = *grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    const Eigen::ArrayXXd m_hat = m_[i].array() / bc1;
    const Eigen::ArrayXXd v_hat = v_[i].array() / bc2;
    // Decoupled weight decay: shrink directly, not through the moments.
    p.array() -= lr * (m_hat / (v_hat.sqrt() + eps_) + weight_decay_ * p.array());
  }
}

double clip_global_norm(const std::vector<Eigen::MatrixXd*>& grads, double max_norm) {
  double sq = 0.0;
  for (const Eigen::MatrixXd* g : grads) sq += g->squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Eigen::MatrixXd* g : grads) *g *= scale;
  }
  return norm;
}

TrainLog train_label_interpretation(BiEncoder& model, const Corpus& d_lit,
                                    const TrainConfig& config) {
  config.validate();
  if (d_lit.sentences.empty())
    throw ValidationError("the interpretation corpus is empty");
  if (is_eval_only(d_lit))
    throw ValidationError("refusing to train on a corpus marked eval-only");

  const int steps_per_epoch = static_cast<int>(
      (d_lit.sentences.size() + static_cast<std::size_t>(config.batch_size) - 1) /
      static_cast<std::size_t>(config.batch_size));
  LoopSpec spec;
  spec.sentences = &d_lit.sentences;
  spec.inventory = &d_lit.inventory;
  spec.n_epochs = config.epochs;
  spec.total_steps = config.epochs * steps_per_epoch;
  spec.full_space = false;
  spec.early_stop = false;
  spec.phase_name = "label interpretation";
  return run_training(model, spec, config);
}

TrainLog finetune_fewshot(BiEncoder& model, const SupportSet& support,
                          const TrainConfig& config) {
  config.validate();
  if (support.k == 0) {
    // Zero-shot: nothing to tune, the interpretation model is used as-is.
    TrainLog log;
    log.config_snapshot = config.to_json();
    return log;
  }
  if (support.sentences.empty())
    throw ValidationError("the support set has no sentences");

  const int steps_per_epoch = static_cast<int>(
      (support.sentences.size() + static_cast<std::size_t>(config.batch_size) - 1) /
      static_cast<std::size_t>(config.batch_size));
  LoopSpec spec;
  spec.sentences = &support.sentences;
  spec.inventory = &support.inventory;
  spec.n_epochs = config.max_epochs;
  spec.total_steps = config.max_epochs * steps_per_epoch;
  spec.full_space = config.fs_full_label_space;
  spec.early_stop = true;
  spec.phase_name = "few-shot fine-tuning";
  return run_training(model, spec, config);
}

}  // namespace fewner

#ifndef FEWNER_TRAINER_HPP
#define FEWNER_TRAINER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "fewner/biencoder.hpp"
#include "fewner/corpus.hpp"
#include "fewner/support.hpp"

namespace fewner {

enum class TrainPhase { kLabelInterpretation, kFewShot };

// The published learning rates per phase and corpus flavor: 1e-5 for both
// phases on conventional corpora, 1e-6 (interpretation) and 5e-6 (few-shot)
// when the interpretation corpus is a derived entity-linking one.
double preset_learning_rate(TrainPhase phase, bool derived_lit_corpus);

struct TrainConfig {
  double learning_rate = 1e-5;
  int epochs = 3;               // label interpretation phase
  int max_epochs = 100;         // few-shot cap
  int batch_size = 16;
  int early_stop_patience = 5;  // few-shot, on epoch-mean training loss
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int negatives_m = 0;
  // Few-shot batches score the whole few-shot label set by default; switch
  // off to keep the batch-present restriction there too.
  bool fs_full_label_space = true;
  bool mask_o_in_loss = false;
  // "No improvement for 5" is judged per epoch; per step behind this flag.
  bool step_level_early_stop = false;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Piecewise-linear schedule over 1-based steps: up to the peak at
// ceil(0.1 * total), then down to 0 at the final step.
double lr_at(int step, int total_steps, double peak);

struct StepRecord {
  int epoch = 0;  // 1-based
  int step = 0;   // 1-based, global
  double loss = 0.0;
  double lr = 0.0;
  int scored_tokens = 0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_mean_loss;
  int stopped_epoch = -1;  // epoch after which patience ran out, -1 = none
  double wall_seconds = 0.0;
  nlohmann::json config_snapshot;

  void save_jsonl(const std::filesystem::path& path) const;
  void save_summary(const std::filesystem::path& path) const;
};

// Decoupled-weight-decay Adam over a fixed tensor list.
class AdamW {
 public:
  AdamW(std::vector<Eigen::MatrixXd*> params, const TrainConfig& config);
  void step(const std::vector<Eigen::MatrixXd*>& grads, double lr);

 private:
  std::vector<Eigen::MatrixXd*> params_;
  std::vector<Eigen::MatrixXd> m_, v_;
  double beta1_, beta2_, eps_, weight_decay_;
  int t_ = 0;
};

// Scales all gradients so their global norm is at most max_norm; returns the
// norm before clipping.
double clip_global_norm(const std::vector<Eigen::MatrixXd*>& grads, double max_norm);

// Patience on a loss sequence: stop once the loss has failed to improve on the
// best seen (strictly, no margin) for `patience` observations in a row.
class EarlyStopTracker {
 public:
  explicit EarlyStopTracker(int patience) : patience_(patience) {}

  bool observe(double loss) {
    if (loss < best_) {
      best_ = loss;
      stale_ = 0;
      return false;
    }
    return ++stale_ >= patience_;
  }

 private:
  double best_ = std::numeric_limits<double>::infinity();
  int patience_;
  int stale_ = 0;
};

// Phase one: epochs of seeded-shuffled batches over the interpretation
// corpus, per-batch label spaces, both encoders updated. Corpora marked
// eval-only are refused.
TrainLog train_label_interpretation(BiEncoder& model, const Corpus& d_lit,
                                    const TrainConfig& config);

// Phase two: up to max_epochs over the support set, early stop when the
// epoch-mean training loss stops improving (strictly) for patience epochs in
// a row, final state kept. k = 0 returns an empty log without touching the
// model. No data beyond the support set is consulted.
TrainLog finetune_fewshot(BiEncoder& model, const SupportSet& support,
                          const TrainConfig& config);

}  // namespace fewner

#endif  // FEWNER_TRAINER_HPP

#ifndef FEWNER_BIENCODER_HPP
#define FEWNER_BIENCODER_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fewner/corpus.hpp"
#include "fewner/encoder.hpp"
#include "fewner/rng.hpp"

namespace fewner {

enum class SubwordPooling { kFirst };

struct EncoderConfig {
  std::string token_encoder_id = "tiny-2x64";
  std::string label_encoder_id = "tiny-2x64";
  int hidden = 64;
  int max_sequence_length = 128;  // subword positions per sequence, start mark included
  SubwordPooling subword_pooling = SubwordPooling::kFirst;
  // O is scored like any label through this verbalization, so its column lives
  // in the same dot-product space. learned_o_embedding swaps in a free trained
  // vector instead.
  std::string o_verbalization = "none, not an entity";
  bool learned_o_embedding = false;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

// The label set a batch is scored against: O at local index 0, then the types
// present in the batch gold, then any sampled negative labels.
struct BatchLabelSpace {
  std::vector<std::string> local_labels;
  std::unordered_map<std::string, int> global_to_local;
  Eigen::MatrixXd label_embeddings;  // filled by encode_label_space, eval paths only

  int size() const { return static_cast<int>(local_labels.size()); }
};

struct TokenEncoding {
  Eigen::MatrixXd vectors;                  // one row per surviving token
  std::vector<std::vector<int>> alignment;  // per sentence: token index -> row, -1 if truncated
  int truncated_tokens = 0;
};

struct TokenScores {
  Eigen::MatrixXd logits;  // N x |local labels|
};

struct BatchLossResult {
  double loss = 0.0;
  int scored_tokens = 0;
  int truncated_tokens = 0;
};

// logits = e_t . e_l^T; throws on hidden-size mismatch.
TokenScores score(const Eigen::MatrixXd& e_t, const Eigen::MatrixXd& e_l);

// Row-wise argmax; ties break toward the lowest local index, so exact ties
// with O go to O. Softmax is omitted: argmax is unchanged by it.
std::vector<int> predict(const TokenScores& scores);

// Mean token-level cross-entropy. Gold ids are local indices; -1 marks a
// position excluded from the mean (O masking). Fills d_logits with the
// gradient of the mean loss when given.
double in_batch_cross_entropy(const TokenScores& scores, const std::vector<int>& gold,
                              Eigen::MatrixXd* d_logits = nullptr);

// O plus the types in the batch gold; when negatives_m exceeds the number of
// gold types, uniformly sampled extra labels (without replacement) top the
// space up to negatives_m + 1 entries or until the inventory runs out.
BatchLabelSpace build_batch_label_space(const std::vector<const Sentence*>& batch,
                                        const TypeInventory& inventory,
                                        int negatives_m, Rng& rng);

// Maximal runs of identical non-O tags become spans. Adjacent same-type gold
// entities would merge under this scheme; the eval harness counts them.
std::vector<EntitySpan> decode_spans(const std::vector<std::string>& tags);

class BiEncoder {
 public:
  BiEncoder(const EncoderConfig& config, std::uint64_t seed);

  // Deep copies, so a fine-tuning run can start from a shared base model.
  BiEncoder(const BiEncoder& other);
  BiEncoder& operator=(const BiEncoder& other);
  BiEncoder(BiEncoder&&) = default;
  BiEncoder& operator=(BiEncoder&&) = default;

  const EncoderConfig& config() const { return config_; }

  // Evaluation-mode forward passes (no gradients).
  TokenEncoding encode_tokens(const std::vector<const Sentence*>& batch) const;
  Eigen::MatrixXd encode_labels(const std::vector<std::string>& verbalizations,
                                bool use_cache = false) const;

  // Fills space.label_embeddings from the inventory's verbalizations; row 0 is
  // O (the configured verbalization, or the learned vector when enabled).
  void encode_label_space(BatchLabelSpace& space, const TypeInventory& inventory,
                          bool use_cache) const;

  // Per-sentence predicted tags ("O" for non-entities and truncated tokens)
  // against the space, which must carry label embeddings.
  std::vector<std::vector<std::string>> predict_tags(
      const std::vector<const Sentence*>& batch, const BatchLabelSpace& space) const;

  // Training forward plus, when accumulate_gradients, backward into both
  // encoders. Label embeddings are recomputed fresh; the eval cache is not
  // consulted. mask_o_tokens drops gold-O positions from the loss mean.
  BatchLossResult batch_loss(const std::vector<const Sentence*>& batch,
                             const BatchLabelSpace& space,
                             const TypeInventory& inventory, bool mask_o_tokens,
                             bool accumulate_gradients);

  // All trainable tensors: token encoder, label encoder, then the free O
  // vector when enabled. Order is stable for the optimizer.
  std::vector<Eigen::MatrixXd*> parameters();
  std::vector<Eigen::MatrixXd*> gradients();
  void zero_grad();
  std::uint64_t params_hash() const;

  const nlohmann::json& provenance() const { return provenance_; }
  void set_provenance(nlohmann::json p) { provenance_ = std::move(p); }

  // Checkpoint directory: both encoder states, the learned O vector, and a
  // versioned JSON manifest (config, inventory hash, O verbalization,
  // training provenance).
  void save(const std::filesystem::path& dir, const TypeInventory& inventory) const;
  static BiEncoder load(const std::filesystem::path& dir);
  std::uint64_t saved_inventory_hash() const { return saved_inventory_hash_; }

  // Disk persistence for the evaluation-time label cache. A cache file is
  // advisory: loading returns false (and changes nothing) when the file is
  // missing, unreadable, or stamped by different label-encoder parameters.
  void save_label_cache(const std::filesystem::path& path) const;
  bool load_label_cache(const std::filesystem::path& path) const;

 private:
  struct Prepared;  // one sequence readied for the encoder

  Prepared prepare(const TextEncoder& enc, const std::vector<std::string>& tokens) const;
  Eigen::VectorXd label_vector(const std::string& verbalization, bool use_cache) const;

  EncoderConfig config_;
  std::unique_ptr<TextEncoder> token_encoder_;
  std::unique_ptr<TextEncoder> label_encoder_;
  Eigen::MatrixXd o_embedding_;    // hidden x 1, used when learned_o_embedding
  Eigen::MatrixXd g_o_embedding_;
  nlohmann::json provenance_;
  std::uint64_t saved_inventory_hash_ = 0;

  // Serves evaluation only; any parameter change invalidates it wholesale.
  mutable std::unordered_map<std::string, Eigen::VectorXd> label_cache_;
  mutable std::uint64_t label_cache_stamp_ = 0;
};

}  // namespace fewner

#endif  // FEWNER_BIENCODER_HPP

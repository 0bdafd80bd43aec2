#include "fewner/biencoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fewner/errors.hpp"

namespace fewner {

namespace {

constexpr int kManifestVersion = 1;

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

// Per-token gold type ids ("O" for uncovered positions).
std::vector<std::string> gold_tags(const Sentence& sentence) {
  std::vector<std::string> tags(sentence.tokens.size(), "O");
  for (const EntitySpan& sp : sentence.spans)
    for (int t = sp.start; t < sp.end; ++t) tags[static_cast<std::size_t>(t)] = sp.type;
  return tags;
}

}  // namespace

void EncoderConfig::validate() const {
  const EncoderSpec token_spec = EncoderSpec::parse(token_encoder_id);
  const EncoderSpec label_spec = EncoderSpec::parse(label_encoder_id);
  if (token_spec.hidden != hidden || label_spec.hidden != hidden)
    throw ValidationError("encoder hidden sizes (" + std::to_string(token_spec.hidden) +
                          ", " + std::to_string(label_spec.hidden) +
                          ") must both equal the configured hidden size " +
                          std::to_string(hidden));
  if (max_sequence_length <= 1)
    throw ValidationError("max_sequence_length must leave room past the start mark");
  if (o_verbalization.empty())
    throw ValidationError("the O verbalization must not be empty");
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"token_encoder_id", token_encoder_id},
          {"label_encoder_id", label_encoder_id},
          {"hidden", hidden},
          {"max_sequence_length", max_sequence_length},
          {"subword_pooling", "first"},
          {"o_verbalization", o_verbalization},
          {"learned_o_embedding", learned_o_embedding}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig config;
  config.token_encoder_id = j.at("token_encoder_id").get<std::string>();
  config.label_encoder_id = j.at("label_encoder_id").get<std::string>();
  config.hidden = j.at("hidden").get<int>();
  config.max_sequence_length = j.at("max_sequence_length").get<int>();
  if (j.at("subword_pooling").get<std::string>() != "first")
    throw ValidationError("unknown subword pooling mode");
  config.o_verbalization = j.at("o_verbalization").get<std::string>();
  config.learned_o_embedding = j.value("learned_o_embedding", false);
  config.validate();
  return config;
}

TokenScores score(const Eigen::MatrixXd& e_t, const Eigen::MatrixXd& e_l) {
  if (e_t.cols() != e_l.cols())
    throw ValidationError("token vectors are " + std::to_string(e_t.cols()) +
                          "-dimensional but label vectors are " +
                          std::to_string(e_l.cols()) + "-dimensional");
  return TokenScores{e_t * e_l.transpose()};
}

std::vector<int> predict(const TokenScores& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.logits.rows()));
  for (Eigen::Index i = 0; i < scores.logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < scores.logits.cols(); ++j)
      if (scores.logits(i, j) > scores.logits(i, best)) best = static_cast<int>(j);
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double in_batch_cross_entropy(const TokenScores& scores, const std::vector<int>& gold,
                              Eigen::MatrixXd* d_logits) {
  const Eigen::Index n = scores.logits.rows();
  const Eigen::Index classes = scores.logits.cols();
  if (static_cast<Eigen::Index>(gold.size()) != n)
    throw ValidationError("one gold id per scored token required");
  if (d_logits) d_logits->setZero(n, classes);

  double total = 0.0;
  int scored = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int g = gold[static_cast<std::size_t>(i)];
    if (g == -1) continue;  // masked position
    if (g < 0 || g >= classes)
      throw ValidationError("gold label id " + std::to_string(g) +
                            " outside the local label space");
    const auto row = scores.logits.row(i);
    const double peak = row.maxCoeff();
    const double lse = peak + std::log((row.array() - peak).exp().sum());
    total += lse - row(g);
    ++scored;
    if (d_logits) {
      d_logits->row(i) = (row.array() - lse).exp();
      (*d_logits)(i, g) -= 1.0;
    }
  }
  if (scored == 0) return 0.0;
  if (d_logits) *d_logits /= static_cast<double>(scored);
  return total / scored;
}

BatchLabelSpace build_batch_label_space(const std::vector<const Sentence*>& batch,
                                        const TypeInventory& inventory,
                                        int negatives_m, Rng& rng) {
  if (negatives_m < 0) throw ValidationError("negatives_m must be >= 0");
  std::set<std::string> present;
  for (const Sentence* s : batch)
    for (const EntitySpan& sp : s->spans) present.insert(sp.type);

  BatchLabelSpace space;
  space.local_labels.push_back("O");
  // Batch-present types in inventory order so the space is input-order free.
  for (const std::string& id : inventory.ids())
    if (id != "O" && present.count(id)) space.local_labels.push_back(id);

  const int want = negatives_m + 1;
  if (space.size() < want) {
    std::vector<std::string> pool;
    for (const std::string& id : inventory.ids())
      if (id != "O" && !present.count(id)) pool.push_back(id);
    const std::size_t need = std::min(static_cast<std::size_t>(want - space.size()),
                                      pool.size());
    for (std::size_t idx : rng.sample_indices(pool.size(), need))
      space.local_labels.push_back(pool[idx]);
  }

  for (std::size_t i = 0; i < space.local_labels.size(); ++i)
    space.global_to_local[space.local_labels[i]] = static_cast<int>(i);
  return space;
}

std::vector<EntitySpan> decode_spans(const std::vector<std::string>& tags) {
  std::vector<EntitySpan> spans;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i] == "O") {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tags.size() && tags[j] == tags[i]) ++j;
    spans.push_back({static_cast<int>(i), static_cast<int>(j), tags[i]});
    i = j;
  }
  return spans;
}

struct BiEncoder::Prepared {
  std::vector<std::uint64_t> ids;  // [start mark, subwords...], length capped
  std::vector<int> first_row;      // per token: position in ids, -1 if truncated
  int truncated = 0;
};

BiEncoder::BiEncoder(const EncoderConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  token_encoder_ = make_encoder(config_.token_encoder_id, mix_seed(seed, 1));
  label_encoder_ = make_encoder(config_.label_encoder_id, mix_seed(seed, 2));
  Rng rng(mix_seed(seed, 3));
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.hidden));
  o_embedding_.setZero(config_.hidden, 1);
  for (int i = 0; i < config_.hidden; ++i) o_embedding_(i, 0) = scale * rng.next_normal();
  g_o_embedding_.setZero(config_.hidden, 1);
}

BiEncoder::BiEncoder(const BiEncoder& other)
    : config_(other.config_),
      token_encoder_(std::make_unique<TextEncoder>(*other.token_encoder_)),
      label_encoder_(std::make_unique<TextEncoder>(*other.label_encoder_)),
      o_embedding_(other.o_embedding_),
      g_o_embedding_(other.g_o_embedding_),
      provenance_(other.provenance_),
      saved_inventory_hash_(other.saved_inventory_hash_) {}

BiEncoder& BiEncoder::operator=(const BiEncoder& other) {
  if (this != &other) {
    config_ = other.config_;
    token_encoder_ = std::make_unique<TextEncoder>(*other.token_encoder_);
    label_encoder_ = std::make_unique<TextEncoder>(*other.label_encoder_);
    o_embedding_ = other.o_embedding_;
    g_o_embedding_ = other.g_o_embedding_;
    provenance_ = other.provenance_;
    saved_inventory_hash_ = other.saved_inventory_hash_;
    label_cache_.clear();
    label_cache_stamp_ = 0;
  }
  return *this;
}

BiEncoder::Prepared BiEncoder::prepare(const TextEncoder& enc,
                                       const std::vector<std::string>& tokens) const {
  Prepared prep;
  prep.ids.push_back(0);
  const std::size_t limit = static_cast<std::size_t>(config_.max_sequence_length);
  for (const std::string& tok : tokens) {
    // A token survives truncation iff its first subword fits.
    if (prep.ids.size() >= limit) {
      prep.first_row.push_back(-1);
      ++prep.truncated;
      continue;
    }
    prep.first_row.push_back(static_cast<int>(prep.ids.size()));
    for (std::uint64_t id : enc.subword_ids(tok)) {
      if (prep.ids.size() >= limit) break;
      prep.ids.push_back(id);
    }
  }
  return prep;
}

TokenEncoding BiEncoder::encode_tokens(const std::vector<const Sentence*>& batch) const {
  if (batch.empty()) throw ValidationError("cannot encode an empty batch");
  TokenEncoding enc;
  std::vector<Eigen::RowVectorXd> rows;
  for (const Sentence* sentence : batch) {
    const Prepared prep = prepare(*token_encoder_, sentence->tokens);
    const Eigen::MatrixXd h = token_encoder_->forward(prep.ids);
    std::vector<int>& align = enc.alignment.emplace_back();
    for (int pos : prep.first_row) {
      if (pos < 0) {
        align.push_back(-1);
      } else {
        align.push_back(static_cast<int>(rows.size()));
        rows.emplace_back(h.row(pos));
      }
    }
    enc.truncated_tokens += prep.truncated;
  }
  enc.vectors.resize(static_cast<Eigen::Index>(rows.size()), config_.hidden);
  for (std::size_t i = 0; i < rows.size(); ++i)
    enc.vectors.row(static_cast<Eigen::Index>(i)) = rows[i];
  return enc;
}

Eigen::VectorXd BiEncoder::label_vector(const std::string& verbalization,
                                        bool use_cache) const {
  if (verbalization.empty())
    throw ValidationError("label verbalizations must not be empty");
  if (use_cache) {
    const std::uint64_t stamp = label_encoder_->params_hash();
    if (stamp != label_cache_stamp_) {
      label_cache_.clear();
      label_cache_stamp_ = stamp;
    }
    const auto hit = label_cache_.find(verbalization);
    if (hit != label_cache_.end()) return hit->second;
  }
  const Prepared prep = prepare(*label_encoder_, whitespace_tokens(verbalization));
  const Eigen::MatrixXd h = label_encoder_->forward(prep.ids);
  Eigen::VectorXd vec = h.row(0).transpose();  // sequence summary lives at the start mark
  if (use_cache) label_cache_.emplace(verbalization, vec);
  return vec;
}

Eigen::MatrixXd BiEncoder::encode_labels(const std::vector<std::string>& verbalizations,
                                         bool use_cache) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(verbalizations.size()), config_.hidden);
  for (std::size_t i = 0; i < verbalizations.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) =
        label_vector(verbalizations[i], use_cache).transpose();
  return out;
}

void BiEncoder::encode_label_space(BatchLabelSpace& space,
                                   const TypeInventory& inventory,
                                   bool use_cache) const {
  space.label_embeddings.resize(space.size(), config_.hidden);
  for (int i = 0; i < space.size(); ++i) {
    const std::string& label = space.local_labels[static_cast<std::size_t>(i)];
    if (label == "O" && config_.learned_o_embedding) {
      space.label_embeddings.row(i) = o_embedding_.col(0).transpose();
      continue;
    }
    const int idx = inventory.index_of(label);
    if (idx < 0)
      throw ValidationError("label '" + label + "' is not in the type inventory");
    space.label_embeddings.row(i) =
        label_vector(inventory.verbalization_at(idx), use_cache).transpose();
  }
}

std::vector<std::vector<std::string>> BiEncoder::predict_tags(
    const std::vector<const Sentence*>& batch, const BatchLabelSpace& space) const {
  if (space.label_embeddings.rows() != space.size())
    throw ValidationError("label space carries no embeddings; encode it first");
  const TokenEncoding enc = encode_tokens(batch);
  const std::vector<int> local = predict(score(enc.vectors, space.label_embeddings));
  std::vector<std::vector<std::string>> tags;
  for (const std::vector<int>& align : enc.alignment) {
    std::vector<std::string>& sent = tags.emplace_back();
    for (int row : align)
      sent.push_back(row < 0 ? "O"
                             : space.local_labels[static_cast<std::size_t>(local[row])]);
  }
  return tags;
}

BatchLossResult BiEncoder::batch_loss(const std::vector<const Sentence*>& batch,
                                      const BatchLabelSpace& space,
                                      const TypeInventory& inventory,
                                      bool mask_o_tokens, bool accumulate_gradients) {
  if (batch.empty()) throw ValidationError("cannot score an empty batch");

  // Token side: keep traces for backward.
  std::vector<Prepared> preps;
  std::vector<TextEncoder::Trace> token_traces;
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<int> gold;  // local ids per scored row, -1 = masked
  BatchLossResult result;
  for (const Sentence* sentence : batch) {
    preps.push_back(prepare(*token_encoder_, sentence->tokens));
    const Prepared& prep = preps.back();
    TextEncoder::Trace& trace = token_traces.emplace_back();
    const Eigen::MatrixXd h = token_encoder_->forward(prep.ids, &trace);
    const std::vector<std::string> tags = gold_tags(*sentence);
    for (std::size_t t = 0; t < tags.size(); ++t) {
      const int pos = prep.first_row[t];
      if (pos < 0) continue;  // truncated away
      rows.emplace_back(h.row(pos));
      if (mask_o_tokens && tags[t] == "O") {
        gold.push_back(-1);
        continue;
      }
      const auto local = space.global_to_local.find(tags[t]);
      if (local == space.global_to_local.end())
        throw ValidationError("gold type '" + tags[t] +
                              "' is missing from the batch label space");
      gold.push_back(local->second);
    }
    result.truncated_tokens += prep.truncated;
  }
  Eigen::MatrixXd e_t(static_cast<Eigen::Index>(rows.size()), config_.hidden);
  for (std::size_t i = 0; i < rows.size(); ++i)
    e_t.row(static_cast<Eigen::Index>(i)) = rows[i];

  // Label side: fresh encodings every call, traces kept for backward.
  std::vector<Prepared> label_preps(static_cast<std::size_t>(space.size()));
  std::vector<TextEncoder::Trace> label_traces(static_cast<std::size_t>(space.size()));
  Eigen::MatrixXd e_l(space.size(), config_.hidden);
  for (int i = 0; i < space.size(); ++i) {
    const std::string& label = space.local_labels[static_cast<std::size_t>(i)];
    if (label == "O" && config_.learned_o_embedding) {
      e_l.row(i) = o_embedding_.col(0).transpose();
      continue;
    }
    const int idx = inventory.index_of(label);
    if (idx < 0)
      throw ValidationError("label '" + label + "' is not in the type inventory");
    label_preps[static_cast<std::size_t>(i)] =
        prepare(*label_encoder_, whitespace_tokens(inventory.verbalization_at(idx)));
    const Prepared& prep = label_preps[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd h =
        label_encoder_->forward(prep.ids, &label_traces[static_cast<std::size_t>(i)]);
    e_l.row(i) = h.row(0);
  }

  Eigen::MatrixXd d_logits;
  const TokenScores scores = score(e_t, e_l);
  result.loss =
      in_batch_cross_entropy(scores, gold, accumulate_gradients ? &d_logits : nullptr);
  result.scored_tokens =
      static_cast<int>(std::count_if(gold.begin(), gold.end(), [](int g) { return g >= 0; }));
  if (!accumulate_gradients || result.scored_tokens == 0) return result;

  const Eigen::MatrixXd d_e_t = d_logits * e_l;
  const Eigen::MatrixXd d_e_l = d_logits.transpose() * e_t;

  int row = 0;
  for (std::size_t s = 0; s < preps.size(); ++s) {
    const Prepared& prep = preps[s];
    Eigen::MatrixXd d_out =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(prep.ids.size()), config_.hidden);
    for (int pos : prep.first_row)
      if (pos >= 0) d_out.row(pos) += d_e_t.row(row++);
    token_encoder_->backward(prep.ids, token_traces[s], d_out);
  }

  for (int i = 0; i < space.size(); ++i) {
    const std::string& label = space.local_labels[static_cast<std::size_t>(i)];
    if (label == "O" && config_.learned_o_embedding) {
      g_o_embedding_.col(0) += d_e_l.row(i).transpose();
      continue;
    }
    const Prepared& prep = label_preps[static_cast<std::size_t>(i)];
    Eigen::MatrixXd d_out =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(prep.ids.size()), config_.hidden);
    d_out.row(0) = d_e_l.row(i);
    label_encoder_->backward(prep.ids, label_traces[static_cast<std::size_t>(i)], d_out);
  }
  return result;
}

std::vector<Eigen::MatrixXd*> BiEncoder::parameters() {
  std::vector<Eigen::MatrixXd*> params = token_encoder_->parameters();
  for (Eigen::MatrixXd* p : label_encoder_->parameters()) params.push_back(p);
  if (config_.learned_o_embedding) params.push_back(&o_embedding_);
  return params;
}

std::vector<Eigen::MatrixXd*> BiEncoder::gradients() {
  std::vector<Eigen::MatrixXd*> grads = token_encoder_->gradients();
  for (Eigen::MatrixXd* g : label_encoder_->gradients()) grads.push_back(g);
  if (config_.learned_o_embedding) grads.push_back(&g_o_embedding_);
  return grads;
}

void BiEncoder::zero_grad() {
  token_encoder_->zero_grad();
  label_encoder_->zero_grad();
  g_o_embedding_.setZero();
}

std::uint64_t BiEncoder::params_hash() const {
  std::uint64_t h = token_encoder_->params_hash();
  h = mix_seed(h, label_encoder_->params_hash());
  for (int i = 0; i < config_.hidden; ++i)
    h = mix_seed(h, std::bit_cast<std::uint64_t>(o_embedding_(i, 0)));
  return h;
}

void BiEncoder::save(const std::filesystem::path& dir,
                     const TypeInventory& inventory) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "token_encoder.bin", std::ios::binary);
    token_encoder_->save(out);
  }
  {
    std::ofstream out(dir / "label_encoder.bin", std::ios::binary);
    label_encoder_->save(out);
  }
  {
    std::ofstream out(dir / "o_embedding.bin", std::ios::binary);
    const std::uint64_t n = static_cast<std::uint64_t>(o_embedding_.rows());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(o_embedding_.data()),
              static_cast<std::streamsize>(sizeof(double) * o_embedding_.size()));
    if (!out) throw RuntimeError("failed to write the O embedding");
  }
  nlohmann::json manifest = {
      {"format_version", kManifestVersion},
      {"config", config_.to_json()},
      {"inventory_hash", inventory.content_hash()},
      {"o_verbalization", inventory.verbalization_at(0)},
      {"provenance", provenance_.is_null() ? nlohmann::json::object() : provenance_}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw RuntimeError("failed to write the checkpoint manifest");
}

BiEncoder BiEncoder::load(const std::filesystem::path& dir) {
  std::ifstream manifest_in(dir / "manifest.json");
  if (!manifest_in)
    throw RuntimeError("no checkpoint manifest at " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_in);
  } catch (const nlohmann::json::parse_error& e) {
    throw RuntimeError("unreadable checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format_version", 0) != kManifestVersion)
    throw RuntimeError("unsupported checkpoint format version");

  BiEncoder model(EncoderConfig::from_json(manifest.at("config")), 0);
  {
    std::ifstream in(dir / "token_encoder.bin", std::ios::binary);
    if (!in) throw RuntimeError("checkpoint is missing token_encoder.bin");
    *model.token_encoder_ = TextEncoder::load(in);
  }
  {
    std::ifstream in(dir / "label_encoder.bin", std::ios::binary);
    if (!in) throw RuntimeError("checkpoint is missing label_encoder.bin");
    *model.label_encoder_ = TextEncoder::load(in);
  }
  {
    std::ifstream in(dir / "o_embedding.bin", std::ios::binary);
    if (!in) throw RuntimeError("checkpoint is missing o_embedding.bin");
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || n != static_cast<std::uint64_t>(model.config_.hidden))
      throw RuntimeError("O embedding size does not match the config");
    in.read(reinterpret_cast<char*>(model.o_embedding_.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
    if (!in) throw RuntimeError("O embedding file is truncated");
  }
  if (model.token_encoder_->spec().id() != model.config_.token_encoder_id ||
      model.label_encoder_->spec().id() != model.config_.label_encoder_id)
    throw RuntimeError("checkpoint encoder states do not match the manifest config");
  model.saved_inventory_hash_ = manifest.value("inventory_hash", std::uint64_t{0});
  model.provenance_ = manifest.value("provenance", nlohmann::json::object());
  return model;
}

namespace {
constexpr char kCacheMagic[8] = {'F', 'N', 'L', 'C', 'a', '0', '0', '1'};
}

void BiEncoder::save_label_cache(const std::filesystem::path& path) const {
  if (label_cache_.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw RuntimeError("cannot open '" + path.string() + "' for writing");
  out.write(kCacheMagic, sizeof kCacheMagic);
  out.write(reinterpret_cast<const char*>(&label_cache_stamp_),
            sizeof label_cache_stamp_);
  const std::uint64_t count = label_cache_.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  // Sorted keys keep the file byte-stable across runs.
  std::vector<std::string> keys;
  for (const auto& [key, vec] : label_cache_) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  for (const std::string& key : keys) {
    const Eigen::VectorXd& vec = label_cache_.at(key);
    const std::uint64_t len = key.size(), rows = vec.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(key.data(), static_cast<std::streamsize>(len));
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(vec.data()),
              static_cast<std::streamsize>(rows * sizeof(double)));
  }
  if (!out) throw RuntimeError("failed while writing '" + path.string() + "'");
}

bool BiEncoder::load_label_cache(const std::filesystem::path& path) const {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[sizeof kCacheMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) return false;
  std::uint64_t stamp = 0, count = 0;
  in.read(reinterpret_cast<char*>(&stamp), sizeof stamp);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || stamp != label_encoder_->params_hash()) return false;

  std::unordered_map<std::string, Eigen::VectorXd> loaded;
  const Eigen::Index hidden = config_.hidden;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t len = 0, rows = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || len > (1u << 20)) return false;
    std::string key(len, '\0');
    in.read(key.data(), static_cast<std::streamsize>(len));
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    if (!in || rows != static_cast<std::uint64_t>(hidden)) return false;
    Eigen::VectorXd vec(hidden);
    in.read(reinterpret_cast<char*>(vec.data()),
            static_cast<std::streamsize>(rows * sizeof(double)));
    if (!in) return false;
    loaded.emplace(std::move(key), std::move(vec));
  }
  label_cache_ = std::move(loaded);
  label_cache_stamp_ = stamp;
  return true;
}

}  // namespace fewner

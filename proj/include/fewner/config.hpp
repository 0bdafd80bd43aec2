#ifndef FEWNER_CONFIG_HPP
#define FEWNER_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fewner/biencoder.hpp"
#include "fewner/eval.hpp"
#include "fewner/sampling.hpp"
#include "fewner/splits.hpp"
#include "fewner/trainer.hpp"
#include "fewner/verbalization.hpp"

namespace fewner {

// Input and output locations. Empty fields are simply unused; validation
// only checks the ones that are filled in.
struct PathsConfig {
  std::string kb_records;
  std::string mentions;
  std::string sentences;
  std::string train_corpus;
  std::string test_corpus;
  std::string output_dir = "out";
};

// Settings for the label-count x verbalization-scheme sweep, in a form that
// serializes cleanly (schemes by name, replacement tables by file path).
struct GridSettings {
  std::vector<int> n_labels_list{3, 10, 30};
  std::vector<std::string> schemes{"cryptic", "long"};
  std::size_t annotation_budget = 3000;
  int n_fs_labels = 16;
  std::uint64_t grid_seed = 0;
  std::map<std::string, std::string> scheme_table_files;  // scheme name -> path
};

// The one config object every command reads: file paths plus the settings of
// each pipeline stage. Round-trips through JSON losslessly; unknown keys are
// rejected so typos in files or --set overrides fail loudly.
struct ExperimentConfig {
  PathsConfig paths;
  SplitSpec split;
  SamplingConfig sampling;
  EncoderConfig encoder;
  TrainConfig lit_train;
  TrainConfig fs_train;
  std::vector<std::uint64_t> split_seeds{1, 2, 3};
  std::vector<std::uint64_t> support_seeds{1, 2, 3};
  std::vector<int> k_list{0, 1, 5, 10};
  std::uint64_t model_seed = 0;
  int eval_batch_size = 32;
  GridSettings grid;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;

  // Internal consistency plus existence of every filled-in input path
  // (output_dir is created on demand and not checked).
  void validate() const;

  std::string hash() const;  // hex digest of the serialized form

  // The protocol view of this config (seeds, k list, training settings).
  ProtocolConfig protocol() const;
  // The grid view; loads replacement tables for the schemes that need them.
  GridConfig grid_config() const;
};

// Applies one dotted-key override ("lit_train.learning_rate=1e-4") to a
// serialized config. Values parse as JSON when possible, else as strings;
// a string-typed target keeps the raw text either way.
void apply_override(nlohmann::json& root, const std::string& assignment);

}  // namespace fewner

#endif  // FEWNER_CONFIG_HPP

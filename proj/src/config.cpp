#include "fewner/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>

#include "fewner/errors.hpp"
#include "fewner/rng.hpp"

namespace fewner {

namespace {

void require_keys(const nlohmann::json& j, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end())
      throw ValidationError("unknown config key '" + where + "." + key + "'");
  }
}

// For sections whose serializer lives elsewhere: anything their to_json does
// not emit is not a real key.
void require_known_keys(const nlohmann::json& j, const nlohmann::json& reference,
                        const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!reference.contains(key))
      throw ValidationError("unknown config key '" + where + "." + key + "'");
  }
}

nlohmann::json paths_to_json(const PathsConfig& p) {
  return {{"kb_records", p.kb_records},   {"mentions", p.mentions},
          {"sentences", p.sentences},     {"train_corpus", p.train_corpus},
          {"test_corpus", p.test_corpus}, {"output_dir", p.output_dir}};
}

PathsConfig paths_from_json(const nlohmann::json& j) {
  require_keys(j, "paths",
               {"kb_records", "mentions", "sentences", "train_corpus",
                "test_corpus", "output_dir"});
  PathsConfig p;
  p.kb_records = j.value("kb_records", "");
  p.mentions = j.value("mentions", "");
  p.sentences = j.value("sentences", "");
  p.train_corpus = j.value("train_corpus", "");
  p.test_corpus = j.value("test_corpus", "");
  p.output_dir = j.value("output_dir", "out");
  return p;
}

nlohmann::json split_to_json(const SplitSpec& s) {
  return {{"mode", to_string(s.mode)},
          {"seed", s.seed},
          {"n_lit", s.n_lit},
          {"n_fs", s.n_fs},
          {"coarse_map", s.coarse_map}};
}

SplitSpec split_from_json(const nlohmann::json& j) {
  require_keys(j, "split", {"mode", "seed", "n_lit", "n_fs", "coarse_map"});
  SplitSpec s;
  s.mode = parse_split_mode(j.value("mode", to_string(s.mode)));
  s.seed = j.value("seed", s.seed);
  s.n_lit = j.value("n_lit", s.n_lit);
  s.n_fs = j.value("n_fs", s.n_fs);
  if (j.contains("coarse_map"))
    s.coarse_map = j.at("coarse_map").get<std::map<std::string, std::string>>();
  return s;
}

nlohmann::json sampling_to_json(const SamplingConfig& s) {
  return {{"mode", to_string(s.mode)},
          {"p_geometric", s.p_geometric},
          {"seed", s.seed},
          {"tag_separator", s.tag_separator},
          {"per_entity", s.per_entity}};
}

SamplingConfig sampling_from_json(const nlohmann::json& j) {
  require_keys(j, "sampling",
               {"mode", "p_geometric", "seed", "tag_separator", "per_entity"});
  SamplingConfig s;
  s.mode = parse_sampling_mode(j.value("mode", to_string(s.mode)));
  s.p_geometric = j.value("p_geometric", s.p_geometric);
  s.seed = j.value("seed", s.seed);
  s.tag_separator = j.value("tag_separator", s.tag_separator);
  s.per_entity = j.value("per_entity", s.per_entity);
  return s;
}

nlohmann::json grid_to_json(const GridSettings& g) {
  return {{"n_labels_list", g.n_labels_list},
          {"schemes", g.schemes},
          {"annotation_budget", g.annotation_budget},
          {"n_fs_labels", g.n_fs_labels},
          {"grid_seed", g.grid_seed},
          {"scheme_table_files", g.scheme_table_files}};
}

GridSettings grid_from_json(const nlohmann::json& j) {
  require_keys(j, "grid",
               {"n_labels_list", "schemes", "annotation_budget", "n_fs_labels",
                "grid_seed", "scheme_table_files"});
  GridSettings g;
  if (j.contains("n_labels_list"))
    g.n_labels_list = j.at("n_labels_list").get<std::vector<int>>();
  if (j.contains("schemes"))
    g.schemes = j.at("schemes").get<std::vector<std::string>>();
  g.annotation_budget = j.value("annotation_budget", g.annotation_budget);
  g.n_fs_labels = j.value("n_fs_labels", g.n_fs_labels);
  g.grid_seed = j.value("grid_seed", g.grid_seed);
  if (j.contains("scheme_table_files"))
    g.scheme_table_files =
        j.at("scheme_table_files").get<std::map<std::string, std::string>>();
  return g;
}

void check_path_exists(const std::string& path, const std::string& field) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path))
    throw ValidationError("paths." + field + " points to '" + path +
                          "', which does not exist");
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
  return {{"paths", paths_to_json(paths)},
          {"split", split_to_json(split)},
          {"sampling", sampling_to_json(sampling)},
          {"encoder", encoder.to_json()},
          {"lit_train", lit_train.to_json()},
          {"fs_train", fs_train.to_json()},
          {"split_seeds", split_seeds},
          {"support_seeds", support_seeds},
          {"k_list", k_list},
          {"model_seed", model_seed},
          {"eval_batch_size", eval_batch_size},
          {"grid", grid_to_json(grid)}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("the config must be a JSON object");
  require_keys(j, "config",
               {"paths", "split", "sampling", "encoder", "lit_train", "fs_train",
                "split_seeds", "support_seeds", "k_list", "model_seed",
                "eval_batch_size", "grid"});
  ExperimentConfig c;
  if (j.contains("paths")) c.paths = paths_from_json(j.at("paths"));
  if (j.contains("split")) c.split = split_from_json(j.at("split"));
  if (j.contains("sampling")) c.sampling = sampling_from_json(j.at("sampling"));
  if (j.contains("encoder")) {
    require_known_keys(j.at("encoder"), EncoderConfig{}.to_json(), "encoder");
    c.encoder = EncoderConfig::from_json(j.at("encoder"));
  }
  if (j.contains("lit_train")) {
    require_known_keys(j.at("lit_train"), TrainConfig{}.to_json(), "lit_train");
    c.lit_train = TrainConfig::from_json(j.at("lit_train"));
  }
  if (j.contains("fs_train")) {
    require_known_keys(j.at("fs_train"), TrainConfig{}.to_json(), "fs_train");
    c.fs_train = TrainConfig::from_json(j.at("fs_train"));
  }
  if (j.contains("split_seeds"))
    c.split_seeds = j.at("split_seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("support_seeds"))
    c.support_seeds = j.at("support_seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("k_list")) c.k_list = j.at("k_list").get<std::vector<int>>();
  c.model_seed = j.value("model_seed", c.model_seed);
  c.eval_batch_size = j.value("eval_batch_size", c.eval_batch_size);
  if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config file '" + path + "': " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  out << to_json().dump(2) << "\n";
  if (!out) throw RuntimeError("failed while writing '" + path + "'");
}

void ExperimentConfig::validate() const {
  sampling.validate();
  encoder.validate();
  lit_train.validate();
  fs_train.validate();
  if (eval_batch_size < 1) throw ValidationError("eval_batch_size must be >= 1");
  for (int k : k_list)
    if (k < 0) throw ValidationError("k values must be >= 0");
  for (const std::string& name : grid.schemes) parse_scheme_kind(name);
  check_path_exists(paths.kb_records, "kb_records");
  check_path_exists(paths.mentions, "mentions");
  check_path_exists(paths.sentences, "sentences");
  check_path_exists(paths.train_corpus, "train_corpus");
  check_path_exists(paths.test_corpus, "test_corpus");
  for (const auto& [name, path] : grid.scheme_table_files) {
    parse_scheme_kind(name);
    check_path_exists(path, "grid.scheme_table_files." + name);
  }
}

std::string ExperimentConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

ProtocolConfig ExperimentConfig::protocol() const {
  ProtocolConfig p;
  p.split = split;
  p.split_seeds = split_seeds;
  p.support_seeds = support_seeds;
  p.k_list = k_list;
  p.encoder = encoder;
  p.lit_train = lit_train;
  p.fs_train = fs_train;
  p.model_seed = model_seed;
  p.eval_batch_size = eval_batch_size;
  return p;
}

GridConfig ExperimentConfig::grid_config() const {
  GridConfig g;
  g.n_labels_list = grid.n_labels_list;
  for (const std::string& name : grid.schemes)
    g.schemes.push_back(parse_scheme_kind(name));
  g.annotation_budget = grid.annotation_budget;
  g.n_fs_labels = grid.n_fs_labels;
  g.protocol = protocol();
  g.grid_seed = grid.grid_seed;
  for (const auto& [name, path] : grid.scheme_table_files)
    g.scheme_tables[parse_scheme_kind(name)] = load_scheme(path);
  return g;
}

void apply_override(nlohmann::json& root, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("override '" + assignment +
                          "' must look like key.subkey=value");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  nlohmann::json* node = &root;
  std::size_t start = 0;
  std::string last;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty())
      throw ValidationError("override key '" + key + "' has an empty segment");
    if (dot == std::string::npos) {
      last = part;
      break;
    }
    node = &(*node)[part];
    if (!node->is_object())
      throw ValidationError("override key '" + key +
                            "' descends into a non-object value");
    start = dot + 1;
  }

  nlohmann::json parsed;
  bool is_json = true;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    is_json = false;
  }
  // A string-typed target takes the raw text, so identifiers that happen to
  // parse (like a bare number used as a label id) stay strings.
  if (!is_json || (node->contains(last) && (*node)[last].is_string()))
    (*node)[last] = value;
  else
    (*node)[last] = parsed;
}

}  // namespace fewner

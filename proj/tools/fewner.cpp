#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "fewner/annotate.hpp"
#include "fewner/column_io.hpp"
#include "fewner/config.hpp"
#include "fewner/errors.hpp"
#include "fewner/eval.hpp"
#include "fewner/jsonl_io.hpp"
#include "fewner/kb.hpp"
#include "fewner/rng.hpp"
#include "fewner/support.hpp"

namespace fs = std::filesystem;
using namespace fewner;

namespace {

// Model initialization draws from its own stream of the training seed, so
// init and shuffling never consume the same random numbers.
constexpr std::uint64_t kModelInitStream = 0x3D1;

std::string g_argv0 = "fewner";

fs::path self_executable() {
  std::error_code ec;
  const fs::path p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::path(g_argv0) : p;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s)
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  return out + "'";
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::string output;
};

void add_common(CLI::App* cmd, Common& common, const std::string& out_help) {
  cmd->add_option("--config", common.config_path, "JSON experiment config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", common.sets,
                  "dotted-key config override, e.g. lit_train.learning_rate=1e-4")
      ->type_name("KEY=VALUE");
  if (!out_help.empty()) cmd->add_option("-o,--out", common.output, out_help);
}

ExperimentConfig resolve_config(const Common& common) {
  const ExperimentConfig base = common.config_path.empty()
                                    ? ExperimentConfig{}
                                    : ExperimentConfig::load(common.config_path);
  nlohmann::json j = base.to_json();
  for (const std::string& s : common.sets) apply_override(j, s);
  return ExperimentConfig::from_json(j);
}

fs::path make_output_dir(const Common& common, const ExperimentConfig& config) {
  const fs::path dir =
      common.output.empty() ? fs::path(config.paths.output_dir) : fs::path(common.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw RuntimeError("cannot create output directory '" + dir.string() +
                       "': " + ec.message());
  return dir;
}

// Every run leaves enough beside its outputs to be reproduced exactly.
void write_snapshot(const fs::path& file, const std::string& command,
                    const ExperimentConfig& config, const nlohmann::json& flags) {
  const nlohmann::json snap = {{"command", command},
                               {"config_hash", config.hash()},
                               {"flags", flags},
                               {"config", config.to_json()}};
  std::ofstream out(file);
  if (!out) throw RuntimeError("cannot open '" + file.string() + "' for writing");
  out << snap.dump(2) << "\n";
  if (!out) throw RuntimeError("failed while writing '" + file.string() + "'");
}

Corpus read_corpus_any(const std::string& path, const std::string& format) {
  std::string kind = format;
  if (kind == "auto")
    kind = path.size() >= 6 && path.rfind(".jsonl") == path.size() - 6 ? "jsonl"
                                                                       : "column";
  if (kind == "jsonl") return read_corpus_jsonl(path);
  if (kind == "column") return read_column_corpus(path);
  throw ValidationError("unknown corpus format '" + format +
                        "' (expected auto, jsonl or column)");
}

std::string pick_path(const std::string& flag_value, const std::string& config_value,
                      const std::string& what) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  throw ValidationError("no " + what + " given (flag or config path)");
}

nlohmann::json stats_to_json(const CorpusStats& s) {
  return {{"distinct_types", s.distinct_types},
          {"mention_count", s.mention_count},
          {"sentence_count", s.sentence_count},
          {"mean_label_length", s.mean_label_length},
          {"stddev_label_length", s.stddev_label_length}};
}

void write_json_file(const fs::path& file, const nlohmann::json& j) {
  std::ofstream out(file);
  if (!out) throw RuntimeError("cannot open '" + file.string() + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw RuntimeError("failed while writing '" + file.string() + "'");
}

// ---------------------------------------------------------------- build-litset

struct BuildLitsetOptions {
  Common common;
  std::string kb, mentions, sentences, mode;
  std::uint64_t seed = 0;
  bool keep_meta_types = false;
};

void run_build_litset(const BuildLitsetOptions& opt) {
  ExperimentConfig config = resolve_config(opt.common);
  if (!opt.kb.empty()) config.paths.kb_records = opt.kb;
  if (!opt.mentions.empty()) config.paths.mentions = opt.mentions;
  if (!opt.sentences.empty()) config.paths.sentences = opt.sentences;
  if (!opt.mode.empty()) config.sampling.mode = parse_sampling_mode(opt.mode);
  config.sampling.seed = opt.seed;
  if (config.paths.kb_records.empty() || config.paths.mentions.empty() ||
      config.paths.sentences.empty())
    throw ValidationError(
        "build-litset needs --kb, --mentions and --sentences (or the matching "
        "config paths)");
  config.validate();
  const fs::path out = make_output_dir(opt.common, config);

  std::vector<std::string> warnings;
  auto kb = load_kb_records(config.paths.kb_records, &warnings);
  std::size_t meta_removed = 0;
  if (!opt.keep_meta_types) meta_removed = apply_meta_filter(kb, MetaFilter{}, &warnings);
  const auto mentions = load_linked_mentions(config.paths.mentions);
  const auto sentences = read_sentences_jsonl(config.paths.sentences);

  AnnotateReport report;
  const Corpus corpus = annotate_corpus(sentences, mentions, kb, config.sampling, &report);
  write_corpus_jsonl(corpus, (out / "corpus.jsonl").string());

  nlohmann::json stats = stats_to_json(compute_stats(corpus));
  stats["mentions_total"] = report.mentions_total;
  stats["mentions_annotated"] = report.mentions_annotated;
  stats["dropped_unresolvable"] = report.dropped_unresolvable;
  stats["dropped_collisions"] = report.dropped_collisions;
  stats["meta_types_removed"] = meta_removed;
  stats["warnings"] = warnings.size();
  write_json_file(out / "stats.json", stats);
  write_snapshot(out / "config.json", "build-litset", config,
                 {{"keep_meta_types", opt.keep_meta_types}});

  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << corpus.sentences.size() << " sentences with "
            << report.mentions_annotated << "/" << report.mentions_total
            << " mentions annotated to " << (out / "corpus.jsonl").string() << "\n";
}

// ----------------------------------------------------------------------- stats

struct StatsOptions {
  Common common;
  std::string corpus, format = "auto";
};

void run_stats(const StatsOptions& opt) {
  const ExperimentConfig config = resolve_config(opt.common);
  const std::string path =
      pick_path(opt.corpus, config.paths.train_corpus, "corpus (--corpus)");
  const Corpus corpus = read_corpus_any(path, opt.format);
  const nlohmann::json stats = stats_to_json(compute_stats(corpus));
  std::cout << stats.dump(2) << "\n";
  if (!opt.common.output.empty()) {
    const fs::path out = make_output_dir(opt.common, config);
    write_json_file(out / "stats.json", stats);
    write_snapshot(out / "config.json", "stats", config, {{"corpus", path}});
  }
}

// ----------------------------------------------------------------------- split

struct SplitOptions {
  Common common;
  std::string corpus, mode, coarse_map_file, format = "auto";
  std::uint64_t seed = 0;
};

void run_split(const SplitOptions& opt) {
  ExperimentConfig config = resolve_config(opt.common);
  if (!opt.mode.empty()) config.split.mode = parse_split_mode(opt.mode);
  config.split.seed = opt.seed;
  if (!opt.coarse_map_file.empty()) {
    std::ifstream in(opt.coarse_map_file);
    if (!in)
      throw ValidationError("cannot open coarse map file '" + opt.coarse_map_file + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("coarse map file '" + opt.coarse_map_file + "': " + e.what());
    }
    config.split.coarse_map = j.get<std::map<std::string, std::string>>();
  }

  const std::string path =
      pick_path(opt.corpus, config.paths.train_corpus, "corpus (--corpus)");
  const Corpus corpus = read_corpus_any(path, opt.format);
  config.validate();
  config.split.validate(corpus.inventory);

  const SplitResult sr = split_labels(corpus, config.split);
  const fs::path out = make_output_dir(opt.common, config);
  write_corpus_jsonl(sr.d_lit, (out / "d_lit.jsonl").string());
  write_corpus_jsonl(sr.d_fs, (out / "d_fs.jsonl").string());
  write_json_file(out / "labels.json",
                  {{"mode", to_string(config.split.mode)},
                   {"seed", config.split.seed},
                   {"l_lit", sr.l_lit},
                   {"l_fs", sr.l_fs}});
  write_snapshot(out / "config.json", "split", config, {{"corpus", path}});
  std::cout << "split " << corpus.inventory.non_o_ids().size() << " labels into "
            << sr.l_lit.size() << " interpretation + " << sr.l_fs.size()
            << " few-shot; corpora in " << out.string() << "\n";
}

// ------------------------------------------------------------------- train-lit

struct TrainLitOptions {
  Common common;
  std::string corpus, format = "auto";
  std::uint64_t seed = 0;
};

void run_train_lit(const TrainLitOptions& opt) {
  ExperimentConfig config = resolve_config(opt.common);
  const std::string path =
      pick_path(opt.corpus, config.paths.train_corpus, "corpus (--corpus)");
  const Corpus corpus = read_corpus_any(path, opt.format);
  config.lit_train.seed = opt.seed;
  config.validate();

  BiEncoder model(config.encoder, mix_seed(opt.seed, kModelInitStream));
  const TrainLog log = train_label_interpretation(model, corpus, config.lit_train);
  model.set_provenance({{"stage", "label-interpretation"},
                        {"seed", opt.seed},
                        {"config_hash", config.hash()},
                        {"corpus_provenance", corpus.provenance}});

  const fs::path out = make_output_dir(opt.common, config);
  model.save(out / "model", corpus.inventory);
  log.save_jsonl(out / "train_log.jsonl");
  log.save_summary(out / "train_summary.json");
  write_snapshot(out / "config.json", "train-lit", config, {{"corpus", path}});
  std::cout << "trained " << config.encoder.token_encoder_id << " for "
            << log.epoch_mean_loss.size() << " epochs, final epoch mean loss "
            << (log.epoch_mean_loss.empty() ? 0.0 : log.epoch_mean_loss.back())
            << "; checkpoint in " << (out / "model").string() << "\n";
}

// -------------------------------------------------------------------- finetune

struct FinetuneOptions {
  Common common;
  std::string model, corpus, format = "auto";
  int k = 0;
  std::uint64_t seed = 0;
  std::uint64_t support_seed = 0;
  bool support_seed_given = false;
};

void run_finetune(const FinetuneOptions& opt) {
  ExperimentConfig config = resolve_config(opt.common);
  BiEncoder model = BiEncoder::load(opt.model);
  const std::string path =
      pick_path(opt.corpus, config.paths.train_corpus, "corpus (--corpus)");
  const Corpus corpus = read_corpus_any(path, opt.format);
  config.fs_train.seed = opt.seed;
  config.validate();

  const std::uint64_t support_seed =
      opt.support_seed_given ? opt.support_seed : opt.seed;
  const SupportSet support = sample_support_set(corpus, opt.k, support_seed);
  const nlohmann::json base_provenance = model.provenance();
  const TrainLog log = finetune_fewshot(model, support, config.fs_train);
  model.set_provenance({{"stage", "few-shot"},
                        {"k", opt.k},
                        {"seed", opt.seed},
                        {"support_seed", support_seed},
                        {"base", base_provenance}});

  const fs::path out = make_output_dir(opt.common, config);
  model.save(out / "model", corpus.inventory);
  Corpus support_corpus;
  support_corpus.sentences = support.sentences;
  support_corpus.inventory = corpus.inventory;
  support_corpus.provenance = "support:" + std::to_string(opt.k);
  write_corpus_jsonl(support_corpus, (out / "support.jsonl").string());
  const nlohmann::json support_meta = {{"k", support.k},
                                       {"support_seed", support_seed},
                                       {"label_counts", support.label_counts},
                                       {"total_overshoot", support.total_overshoot()},
                                       {"max_overshoot", support.max_overshoot()}};
  write_json_file(out / "support.json", support_meta);
  log.save_jsonl(out / "train_log.jsonl");
  log.save_summary(out / "train_summary.json");
  write_snapshot(out / "config.json", "finetune", config,
                 {{"model", opt.model}, {"corpus", path}, {"k", opt.k}});
  std::cout << "fine-tuned on " << support.sentences.size()
            << " support sentences (k=" << opt.k << "); checkpoint in "
            << (out / "model").string() << "\n";
}

// -------------------------------------------------------------------- evaluate

struct EvaluateOptions {
  Common common;
  std::string model, corpus, format = "auto";
};

void run_evaluate(const EvaluateOptions& opt) {
  const ExperimentConfig config = resolve_config(opt.common);
  const BiEncoder model = BiEncoder::load(opt.model);
  const std::string path =
      pick_path(opt.corpus, config.paths.test_corpus, "corpus (--corpus)");
  const Corpus test = read_corpus_any(path, opt.format);

  fs::path cache_file;
  if (const char* env = std::getenv("LITSET_CACHE_DIR"); env && *env) {
    fs::create_directories(env);
    cache_file = fs::path(env) / ("labels-" + hex64(model.params_hash()) + ".bin");
    model.load_label_cache(cache_file);
  }
  const EvalReport report = evaluate_model(model, test, config.eval_batch_size);
  if (!cache_file.empty()) model.save_label_cache(cache_file);

  const nlohmann::json result = {{"precision", report.counts.precision()},
                                 {"recall", report.counts.recall()},
                                 {"f1", report.counts.f1()},
                                 {"tp", report.counts.tp},
                                 {"fp", report.counts.fp},
                                 {"fn", report.counts.fn},
                                 {"adjacent_gold_pairs", report.adjacent_gold_pairs},
                                 {"truncated_tokens", report.truncated_tokens},
                                 {"config_hash", config.hash()}};
  std::cout << "P=" << report.counts.precision() << " R=" << report.counts.recall()
            << " F1=" << report.counts.f1() << " (tp=" << report.counts.tp
            << " fp=" << report.counts.fp << " fn=" << report.counts.fn << ")\n";
  if (!opt.common.output.empty()) {
    const fs::path out = make_output_dir(opt.common, config);
    write_json_file(out / "eval.json", result);
    write_snapshot(out / "config.json", "evaluate", config,
                   {{"model", opt.model}, {"corpus", path}});
  }
}

// ------------------------------------------------------------------------ grid

struct GridOptions {
  Common common;
  std::string train, test;
  std::vector<int> labels;
  std::vector<std::string> schemes;
  std::uint64_t seed = 0;
  int jobs = 1;
};

void run_grid_jobs(const std::vector<std::string>& commands, int jobs) {
  std::atomic<std::size_t> next{0};
  std::vector<int> codes(commands.size(), 0);
  std::vector<std::thread> workers;
  const int n_workers = std::min<int>(jobs, static_cast<int>(commands.size()));
  for (int w = 0; w < n_workers; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < commands.size(); i = next++)
        codes[i] = std::system(commands[i].c_str());
    });
  for (std::thread& t : workers) t.join();
  for (std::size_t i = 0; i < commands.size(); ++i)
    if (codes[i] != 0)
      throw RuntimeError("grid worker " + std::to_string(i) +
                         " failed (status " + std::to_string(codes[i]) + ")");
}

void run_grid(const GridOptions& opt) {
  ExperimentConfig config = resolve_config(opt.common);
  if (!opt.labels.empty()) config.grid.n_labels_list = opt.labels;
  if (!opt.schemes.empty()) config.grid.schemes = opt.schemes;
  config.grid.grid_seed = opt.seed;
  config.paths.train_corpus =
      pick_path(opt.train, config.paths.train_corpus, "training corpus (--train)");
  config.paths.test_corpus =
      pick_path(opt.test, config.paths.test_corpus, "test corpus (--test)");
  config.validate();
  const fs::path out = make_output_dir(opt.common, config);

  std::vector<GridCell> cells;
  if (opt.jobs <= 1 ||
      config.grid.n_labels_list.size() * config.grid.schemes.size() <= 1) {
    const Corpus train = read_corpus_any(config.paths.train_corpus, "auto");
    const Corpus test = read_corpus_any(config.paths.test_corpus, "auto");
    cells = validation_grid(train, test, config.grid_config());
  } else {
    // One worker process per cell; they share nothing but the filesystem.
    const fs::path resolved = out / "resolved_config.json";
    config.save(resolved.string());
    std::vector<std::string> commands;
    std::vector<fs::path> cell_dirs;
    for (int n_labels : config.grid.n_labels_list)
      for (const std::string& scheme : config.grid.schemes) {
        const fs::path cell_dir =
            out / "cells" / (std::to_string(n_labels) + "-" + scheme);
        cell_dirs.push_back(cell_dir);
        commands.push_back(shell_quote(self_executable().string()) +
                           " grid --config " + shell_quote(resolved.string()) +
                           " --labels " + std::to_string(n_labels) +
                           " --schemes " + scheme + " --seed " +
                           std::to_string(opt.seed) + " --jobs 1 -o " +
                           shell_quote(cell_dir.string()));
      }
    run_grid_jobs(commands, opt.jobs);
    for (const fs::path& cell_dir : cell_dirs) {
      std::ifstream in(cell_dir / "cells.json");
      if (!in)
        throw RuntimeError("grid worker left no cells.json in '" +
                           cell_dir.string() + "'");
      nlohmann::json arr;
      in >> arr;
      for (const auto& cell : arr) cells.push_back(grid_cell_from_json(cell));
    }
  }

  nlohmann::json cells_json = nlohmann::json::array();
  for (const GridCell& cell : cells) cells_json.push_back(to_json(cell));
  write_json_file(out / "cells.json", cells_json);
  emit_grid_svg(cells, out / "grid.svg");
  for (const GridCell& cell : cells)
    write_results_jsonl(cell.results,
                        out / ("results-" + std::to_string(cell.n_labels) + "-" +
                               to_string(cell.scheme) + ".jsonl"));
  write_snapshot(out / "config.json", "grid", config, {{"jobs", opt.jobs}});

  for (const GridCell& cell : cells) {
    std::cout << "cell n_labels=" << cell.n_labels
              << " scheme=" << to_string(cell.scheme);
    for (const auto& [k, agg] : cell.f1_by_k)
      std::cout << " F1@" << k << "=" << (agg.n > 0 ? agg.mean : 0.0);
    std::cout << "\n";
  }
  std::cout << "grid outputs in " << out.string() << "\n";
}

// ---------------------------------------------------------------------- report

struct ReportOptions {
  Common common;
  std::string results, format = "markdown";
};

void run_report(const ReportOptions& opt) {
  const ExperimentConfig config = resolve_config(opt.common);
  if (opt.common.output.empty())
    throw ValidationError("report needs -o with the output file path");
  const std::vector<RunResult> results = read_results_jsonl(opt.results);
  emit_report(results, opt.common.output, parse_report_format(opt.format));
  write_snapshot(opt.common.output + ".config.json", "report", config,
                 {{"results", opt.results}, {"format", opt.format}});
  std::cout << "wrote " << opt.common.output << " (" << results.size()
            << " result rows)\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 0 && argv[0] != nullptr) g_argv0 = argv[0];
  CLI::App app{"few-shot named entity tagging toolkit"};
  app.require_subcommand(1);

  auto build = std::make_shared<BuildLitsetOptions>();
  CLI::App* build_cmd = app.add_subcommand(
      "build-litset", "derive a typed corpus from entity links and KB records");
  add_common(build_cmd, build->common, "output directory");
  build_cmd->add_option("--kb", build->kb, "KB records JSONL")
      ->check(CLI::ExistingFile);
  build_cmd->add_option("--mentions", build->mentions, "linked mentions JSONL")
      ->check(CLI::ExistingFile);
  build_cmd->add_option("--sentences", build->sentences, "sentences JSONL")
      ->check(CLI::ExistingFile);
  build_cmd
      ->add_option("--mode", build->mode,
                   "verbalization sampling mode: sampled, labels_only, "
                   "description_only or all")
      ->capture_default_str();
  build_cmd->add_option("--seed", build->seed, "sampling seed")->required();
  build_cmd->add_flag("--keep-meta-types", build->keep_meta_types,
                      "skip the meta-type denylist filter");
  build_cmd->callback([build] { run_build_litset(*build); });

  auto stats = std::make_shared<StatsOptions>();
  CLI::App* stats_cmd = app.add_subcommand("stats", "summarize a corpus");
  add_common(stats_cmd, stats->common, "output directory (optional)");
  stats_cmd->add_option("--corpus", stats->corpus, "corpus file")
      ->check(CLI::ExistingFile);
  stats_cmd->add_option("--format", stats->format, "corpus format: auto, jsonl or column")
      ->capture_default_str();
  stats_cmd->callback([stats] { run_stats(*stats); });

  auto split = std::make_shared<SplitOptions>();
  CLI::App* split_cmd = app.add_subcommand(
      "split", "bipartition a corpus's label set into interpretation and few-shot sides");
  add_common(split_cmd, split->common, "output directory");
  split_cmd->add_option("--corpus", split->corpus, "corpus file")
      ->check(CLI::ExistingFile);
  split_cmd->add_option("--mode", split->mode,
                        "split mode: frequency, random_half, intra or inter");
  split_cmd->add_option("--coarse-map", split->coarse_map_file,
                        "JSON object mapping fine types to coarse classes")
      ->check(CLI::ExistingFile);
  split_cmd->add_option("--format", split->format, "corpus format")
      ->capture_default_str();
  split_cmd->add_option("--seed", split->seed, "split seed")->required();
  split_cmd->callback([split] { run_split(*split); });

  auto train = std::make_shared<TrainLitOptions>();
  CLI::App* train_cmd = app.add_subcommand(
      "train-lit", "train a fresh model on an interpretation corpus");
  add_common(train_cmd, train->common, "output directory");
  train_cmd->add_option("--corpus", train->corpus, "training corpus")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--format", train->format, "corpus format")
      ->capture_default_str();
  train_cmd
      ->add_option("--seed", train->seed,
                   "seed for model initialization and training")
      ->required();
  train_cmd->callback([train] { run_train_lit(*train); });

  auto tune = std::make_shared<FinetuneOptions>();
  CLI::App* tune_cmd = app.add_subcommand(
      "finetune", "fine-tune a checkpoint on a sampled k-shot support set");
  add_common(tune_cmd, tune->common, "output directory");
  tune_cmd->add_option("--model", tune->model, "checkpoint directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  tune_cmd->add_option("--corpus", tune->corpus, "few-shot corpus")
      ->check(CLI::ExistingFile);
  tune_cmd->add_option("--format", tune->format, "corpus format")
      ->capture_default_str();
  tune_cmd->add_option("--k", tune->k, "mentions per label in the support set")
      ->required()
      ->check(CLI::NonNegativeNumber);
  tune_cmd->add_option("--seed", tune->seed, "training seed")->required();
  tune_cmd
      ->add_option("--support-seed", tune->support_seed,
                   "support sampling seed (defaults to --seed)")
      ->each([tune](const std::string&) { tune->support_seed_given = true; });
  tune_cmd->callback([tune] { run_finetune(*tune); });

  auto eval = std::make_shared<EvaluateOptions>();
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "score a checkpoint on a test corpus");
  add_common(eval_cmd, eval->common, "output directory (optional)");
  eval_cmd->add_option("--model", eval->model, "checkpoint directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--corpus", eval->corpus, "test corpus")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--format", eval->format, "corpus format")
      ->capture_default_str();
  eval_cmd->callback([eval] { run_evaluate(*eval); });

  auto grid = std::make_shared<GridOptions>();
  CLI::App* grid_cmd = app.add_subcommand(
      "grid", "sweep label counts x verbalization schemes with the full protocol");
  add_common(grid_cmd, grid->common, "output directory");
  grid_cmd->add_option("--train", grid->train, "training corpus")
      ->check(CLI::ExistingFile);
  grid_cmd->add_option("--test", grid->test, "test corpus")
      ->check(CLI::ExistingFile);
  grid_cmd->add_option("--labels", grid->labels, "label counts, e.g. 3,10,30")
      ->delimiter(',');
  grid_cmd
      ->add_option("--schemes", grid->schemes,
                   "verbalization schemes, e.g. cryptic,long")
      ->delimiter(',');
  grid_cmd->add_option("--seed", grid->seed, "grid seed")->required();
  grid_cmd->add_option("--jobs", grid->jobs, "worker processes for cells")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  grid_cmd->callback([grid] { run_grid(*grid); });

  auto report = std::make_shared<ReportOptions>();
  CLI::App* report_cmd =
      app.add_subcommand("report", "render protocol results as csv, json or markdown");
  add_common(report_cmd, report->common, "output file");
  report_cmd->add_option("--results", report->results, "results JSONL file")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--format", report->format, "csv, json or markdown")
      ->capture_default_str();
  report_cmd->callback([report] { run_report(*report); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const RuntimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#ifndef FEWNER_EVAL_HPP
#define FEWNER_EVAL_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fewner/biencoder.hpp"
#include "fewner/corpus.hpp"
#include "fewner/splits.hpp"
#include "fewner/trainer.hpp"
#include "fewner/verbalization.hpp"

namespace fewner {

struct PrfCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const {
    return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
  }
  double recall() const {
    return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
  }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
};

// Exact-match span micro-F1 counts: a predicted span is a true positive iff
// (start, end, type) matches a gold span of the same sentence. Duplicate
// spans within a sentence collapse. Throws on sentence-count mismatch.
PrfCounts micro_f1(const std::vector<std::vector<EntitySpan>>& gold,
                   const std::vector<std::vector<EntitySpan>>& pred);

struct EvalReport {
  PrfCounts counts;
  // Gold span pairs that touch with the same type; IO decoding merges those,
  // so the count bounds the merge-induced error.
  std::size_t adjacent_gold_pairs = 0;
  int truncated_tokens = 0;
};

// Scores `model` on the test corpus against its full inventory label space.
EvalReport evaluate_model(const BiEncoder& model, const Corpus& test,
                          int batch_size = 32);

struct RunResult {
  std::uint64_t split_seed = 0;
  std::uint64_t support_seed = 0;
  int k = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  bool skipped = false;  // support sampling infeasible for this cell
  std::string skip_reason;
  std::string config_hash;
};

struct ProtocolConfig {
  SplitSpec split;  // its seed field is replaced by each split seed
  std::vector<std::uint64_t> split_seeds{1, 2, 3};
  std::vector<std::uint64_t> support_seeds{1, 2, 3};
  std::vector<int> k_list{0, 1, 5, 10};
  EncoderConfig encoder;
  TrainConfig lit_train;
  TrainConfig fs_train;
  std::uint64_t model_seed = 0;
  int eval_batch_size = 32;

  nlohmann::json to_json() const;
  std::string hash() const;  // stamped onto every RunResult
};

using ModelFactory = std::function<BiEncoder(std::uint64_t split_seed)>;

// A factory building fresh models from the config's encoder settings.
ModelFactory default_model_factory(const ProtocolConfig& config);

struct ProtocolOutcome {
  std::vector<RunResult> results;
  std::map<std::uint64_t, TrainLog> lit_logs;             // per split seed
  std::map<std::uint64_t, std::size_t> adjacent_gold_pairs;  // per split seed
};

// The split-free inner loop: one interpretation training on d_lit, then per
// (support seed, k) a fine-tuned clone evaluated on d_fs_test. Zero-shot
// evaluates the interpretation model once and reports it under every support
// seed. Infeasible support cells come back skipped, not imputed. d_fs_test
// must be marked eval-only; training refuses it by construction.
ProtocolOutcome run_protocol_presplit(const ModelFactory& factory,
                                      const Corpus& d_lit, const Corpus& d_fs_train,
                                      const Corpus& d_fs_test,
                                      const ProtocolConfig& config,
                                      std::uint64_t split_seed);

// The full protocol: for each split seed, bipartition the label space of
// `train`, mask `test` to the few-shot side, and run the inner loop.
ProtocolOutcome run_protocol(const ModelFactory& factory, const Corpus& train,
                             const Corpus& test, const ProtocolConfig& config);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population
  int n = 0;
};

// Mean and stddev of F1 over the non-skipped results with this k.
Aggregate aggregate_f1(const std::vector<RunResult>& results, int k);

struct GridCell {
  int n_labels = 0;
  SchemeKind scheme = SchemeKind::kIdentity;
  std::map<int, Aggregate> f1_by_k;
  std::vector<RunResult> results;
  // Interpretation-phase epoch-mean losses per split seed, for learnability
  // checks on the grid.
  std::map<std::uint64_t, std::vector<double>> lit_epoch_losses;
};

struct GridConfig {
  std::vector<int> n_labels_list;
  std::vector<SchemeKind> schemes;
  std::size_t annotation_budget = 0;  // mentions kept per cell corpus
  int n_fs_labels = 16;
  ProtocolConfig protocol;  // k_list and seeds come from here
  std::uint64_t grid_seed = 0;
  // Verbalization sources for SHORT/LONG (and IDENTITY); CRYPTIC tables are
  // generated per cell from grid_seed.
  std::map<SchemeKind, VerbalizationScheme> scheme_tables;
};

// The label-count x scheme sweep: a fixed frequency split pins the few-shot
// side, then every (n_labels, scheme) cell subsets and re-verbalizes the
// interpretation corpus and runs the full protocol on it.
std::vector<GridCell> validation_grid(const Corpus& train, const Corpus& test,
                                      const GridConfig& config);

// Round trip for grid cells, so parallel workers can hand cells back to the
// parent process through files.
nlohmann::json to_json(const GridCell& cell);
GridCell grid_cell_from_json(const nlohmann::json& j);

enum class ReportFormat { kCsv, kJson, kMarkdown };

ReportFormat parse_report_format(const std::string& name);

// Results ordered by (split_seed, support_seed, k); markdown renders
// mean +/- std per k plus their average.
void emit_report(const std::vector<RunResult>& results,
                 const std::filesystem::path& path, ReportFormat format);

// One line per result: {split_seed, support_seed, k, p, r, f1, tp, fp, fn,
// config_hash} plus skip fields when set.
void write_results_jsonl(const std::vector<RunResult>& results,
                         const std::filesystem::path& path);
std::vector<RunResult> read_results_jsonl(const std::filesystem::path& path);

// Heat grid over (scheme, n_labels) cells, one shaded box per cell.
void emit_grid_svg(const std::vector<GridCell>& cells,
                   const std::filesystem::path& path);

}  // namespace fewner

#endif  // FEWNER_EVAL_HPP

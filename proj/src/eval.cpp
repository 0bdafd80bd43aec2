#include "fewner/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fewner/errors.hpp"
#include "fewner/rng.hpp"
#include "fewner/support.hpp"

namespace fewner {

namespace {

// Per-protocol seed streams so split, training, and support draws never share.
constexpr std::uint64_t kLitSeedStream = 0x117;
constexpr std::uint64_t kFsSeedStream = 0xF5;

std::size_t count_adjacent_same_type(const Corpus& corpus) {
  std::size_t pairs = 0;
  for (const Sentence& s : corpus.sentences)
    for (std::size_t i = 1; i < s.spans.size(); ++i)
      if (s.spans[i - 1].end == s.spans[i].start &&
          s.spans[i - 1].type == s.spans[i].type)
        ++pairs;
  return pairs;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string round1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

nlohmann::json result_to_json(const RunResult& r) {
  nlohmann::json j = {{"split_seed", r.split_seed},
                      {"support_seed", r.support_seed},
                      {"k", r.k},
                      {"p", r.precision},
                      {"r", r.recall},
                      {"f1", r.f1},
                      {"tp", r.tp},
                      {"fp", r.fp},
                      {"fn", r.fn},
                      {"config_hash", r.config_hash}};
  if (r.skipped) {
    j["skipped"] = true;
    j["skip_reason"] = r.skip_reason;
  }
  return j;
}

RunResult result_from_json(const nlohmann::json& j) {
  RunResult r;
  r.split_seed = j.at("split_seed").get<std::uint64_t>();
  r.support_seed = j.at("support_seed").get<std::uint64_t>();
  r.k = j.at("k").get<int>();
  r.precision = j.at("p").get<double>();
  r.recall = j.at("r").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.tp = j.at("tp").get<std::size_t>();
  r.fp = j.at("fp").get<std::size_t>();
  r.fn = j.at("fn").get<std::size_t>();
  r.config_hash = j.value("config_hash", "");
  r.skipped = j.value("skipped", false);
  r.skip_reason = j.value("skip_reason", "");
  return r;
}

std::vector<RunResult> sorted_results(std::vector<RunResult> results) {
  std::sort(results.begin(), results.end(), [](const RunResult& a, const RunResult& b) {
    if (a.split_seed != b.split_seed) return a.split_seed < b.split_seed;
    if (a.support_seed != b.support_seed) return a.support_seed < b.support_seed;
    return a.k < b.k;
  });
  return results;
}

RunResult make_result(std::uint64_t split_seed, std::uint64_t support_seed, int k,
                      const PrfCounts& counts, const std::string& config_hash) {
  RunResult r;
  r.split_seed = split_seed;
  r.support_seed = support_seed;
  r.k = k;
  r.precision = counts.precision();
  r.recall = counts.recall();
  r.f1 = counts.f1();
  r.tp = counts.tp;
  r.fp = counts.fp;
  r.fn = counts.fn;
  r.config_hash = config_hash;
  return r;
}

}  // namespace

PrfCounts micro_f1(const std::vector<std::vector<EntitySpan>>& gold,
                   const std::vector<std::vector<EntitySpan>>& pred) {
  if (gold.size() != pred.size())
    throw ValidationError("gold has " + std::to_string(gold.size()) +
                          " sentences but predictions have " +
                          std::to_string(pred.size()));
  PrfCounts counts;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::set<EntitySpan> gold_set(gold[i].begin(), gold[i].end());
    const std::set<EntitySpan> pred_set(pred[i].begin(), pred[i].end());
    std::size_t tp = 0;
    for (const EntitySpan& sp : pred_set)
      if (gold_set.count(sp)) ++tp;
    counts.tp += tp;
    counts.fp += pred_set.size() - tp;
    counts.fn += gold_set.size() - tp;
  }
  return counts;
}

EvalReport evaluate_model(const BiEncoder& model, const Corpus& test,
                          int batch_size) {
  if (batch_size < 1) throw ValidationError("eval batch size must be >= 1");
  BatchLabelSpace space;
  for (const std::string& id : test.inventory.ids()) space.local_labels.push_back(id);
  for (std::size_t i = 0; i < space.local_labels.size(); ++i)
    space.global_to_local[space.local_labels[i]] = static_cast<int>(i);
  model.encode_label_space(space, test.inventory, true);

  EvalReport report;
  std::vector<std::vector<EntitySpan>> gold, pred;
  for (std::size_t start = 0; start < test.sentences.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(test.sentences.size(),
                                     start + static_cast<std::size_t>(batch_size));
    std::vector<const Sentence*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&test.sentences[i]);

    const TokenEncoding enc = model.encode_tokens(batch);
    report.truncated_tokens += enc.truncated_tokens;
    const std::vector<int> local = predict(score(enc.vectors, space.label_embeddings));
    for (std::size_t s = 0; s < batch.size(); ++s) {
      std::vector<std::string> tags;
      for (int row : enc.alignment[s])
        tags.push_back(row < 0
                           ? "O"
                           : space.local_labels[static_cast<std::size_t>(local[row])]);
      gold.push_back(batch[s]->spans);
      pred.push_back(decode_spans(tags));
    }
  }
  report.counts = micro_f1(gold, pred);
  report.adjacent_gold_pairs = count_adjacent_same_type(test);
  return report;
}

nlohmann::json ProtocolConfig::to_json() const {
  nlohmann::json split_json = {{"mode", to_string(split.mode)},
                               {"n_lit", split.n_lit},
                               {"n_fs", split.n_fs}};
  if (!split.coarse_map.empty()) split_json["coarse_map"] = split.coarse_map;
  return {{"split", split_json},
          {"split_seeds", split_seeds},
          {"support_seeds", support_seeds},
          {"k_list", k_list},
          {"encoder", encoder.to_json()},
          {"lit_train", lit_train.to_json()},
          {"fs_train", fs_train.to_json()},
          {"model_seed", model_seed},
          {"eval_batch_size", eval_batch_size}};
}

std::string ProtocolConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

ModelFactory default_model_factory(const ProtocolConfig& config) {
  const EncoderConfig encoder = config.encoder;
  const std::uint64_t model_seed = config.model_seed;
  return [encoder, model_seed](std::uint64_t split_seed) {
    return BiEncoder(encoder, mix_seed(model_seed, split_seed));
  };
}

ProtocolOutcome run_protocol_presplit(const ModelFactory& factory,
                                      const Corpus& d_lit, const Corpus& d_fs_train,
                                      const Corpus& d_fs_test,
                                      const ProtocolConfig& config,
                                      std::uint64_t split_seed) {
  if (!is_eval_only(d_fs_test))
    throw ValidationError("the test corpus must be marked eval-only");
  if (is_eval_only(d_lit) || is_eval_only(d_fs_train))
    throw ValidationError("an eval-only corpus reached a training input");
  const std::string config_hash = config.hash();

  ProtocolOutcome outcome;
  outcome.adjacent_gold_pairs[split_seed] = count_adjacent_same_type(d_fs_test);

  BiEncoder model = factory(split_seed);
  TrainConfig lit_cfg = config.lit_train;
  lit_cfg.seed = mix_seed(lit_cfg.seed, kLitSeedStream, split_seed);
  outcome.lit_logs.emplace(split_seed, train_label_interpretation(model, d_lit, lit_cfg));

  // Zero-shot needs no support data; every support seed reports the same
  // interpretation-model score.
  const bool wants_zero =
      std::find(config.k_list.begin(), config.k_list.end(), 0) != config.k_list.end();
  if (wants_zero) {
    const EvalReport report = evaluate_model(model, d_fs_test, config.eval_batch_size);
    for (std::uint64_t support_seed : config.support_seeds)
      outcome.results.push_back(
          make_result(split_seed, support_seed, 0, report.counts, config_hash));
  }

  for (std::uint64_t support_seed : config.support_seeds) {
    for (int k : config.k_list) {
      if (k == 0) continue;
      SupportSet support;
      try {
        support = sample_support_set(d_fs_train, k, support_seed);
      } catch (const ValidationError& e) {
        RunResult r;
        r.split_seed = split_seed;
        r.support_seed = support_seed;
        r.k = k;
        r.skipped = true;
        r.skip_reason = e.what();
        r.config_hash = config_hash;
        outcome.results.push_back(r);
        continue;
      }
      BiEncoder tuned = model;
      TrainConfig fs_cfg = config.fs_train;
      fs_cfg.seed = mix_seed(fs_cfg.seed, kFsSeedStream,
                             mix_seed(split_seed, support_seed,
                                      static_cast<std::uint64_t>(k)));
      finetune_fewshot(tuned, support, fs_cfg);
      const EvalReport report =
          evaluate_model(tuned, d_fs_test, config.eval_batch_size);
      outcome.results.push_back(
          make_result(split_seed, support_seed, k, report.counts, config_hash));
    }
  }
  return outcome;
}

ProtocolOutcome run_protocol(const ModelFactory& factory, const Corpus& train,
                             const Corpus& test, const ProtocolConfig& config) {
  train.validate();
  test.validate();
  ProtocolOutcome all;
  for (std::uint64_t split_seed : config.split_seeds) {
    SplitSpec spec = config.split;
    spec.seed = split_seed;
    const SplitResult sr = split_labels(train, spec);
    Corpus d_fs_test = mask_to_side(test, sr.l_fs);
    mark_eval_only(d_fs_test);

    ProtocolOutcome one = run_protocol_presplit(factory, sr.d_lit, sr.d_fs,
                                                d_fs_test, config, split_seed);
    for (RunResult& r : one.results) all.results.push_back(std::move(r));
    all.lit_logs.merge(one.lit_logs);
    for (const auto& [seed, pairs] : one.adjacent_gold_pairs)
      all.adjacent_gold_pairs[seed] = pairs;
  }
  return all;
}

Aggregate aggregate_f1(const std::vector<RunResult>& results, int k) {
  Aggregate agg;
  double sum = 0.0;
  for (const RunResult& r : results) {
    if (r.k != k || r.skipped) continue;
    sum += r.f1;
    ++agg.n;
  }
  if (agg.n == 0) return agg;
  agg.mean = sum / agg.n;
  double sq = 0.0;
  for (const RunResult& r : results)
    if (r.k == k && !r.skipped) sq += (r.f1 - agg.mean) * (r.f1 - agg.mean);
  agg.stddev = std::sqrt(sq / agg.n);
  return agg;
}

std::vector<GridCell> validation_grid(const Corpus& train, const Corpus& test,
                                      const GridConfig& config) {
  if (config.n_labels_list.empty() || config.schemes.empty())
    throw ValidationError("the grid needs at least one label count and one scheme");
  train.validate();
  test.validate();

  // One frequency split fixes the few-shot side for every cell.
  SplitSpec fspec;
  fspec.mode = SplitMode::kFrequency;
  fspec.n_fs = config.n_fs_labels;
  fspec.n_lit = static_cast<int>(train.inventory.non_o_ids().size()) - config.n_fs_labels;
  const SplitResult sr = split_labels(train, fspec);
  Corpus d_fs_test = mask_to_side(test, sr.l_fs);
  mark_eval_only(d_fs_test);

  const ModelFactory factory = default_model_factory(config.protocol);
  std::vector<GridCell> cells;
  for (int n_labels : config.n_labels_list) {
    // The same label subset serves every scheme at this size, so cells in a
    // column differ only in how their labels read.
    const Corpus subset =
        subset_lit_labels(sr.d_lit, n_labels, config.annotation_budget,
                          mix_seed(config.grid_seed,
                                   static_cast<std::uint64_t>(n_labels)));
    for (SchemeKind kind : config.schemes) {
      VerbalizationScheme scheme;
      switch (kind) {
        case SchemeKind::kCryptic:
          scheme = make_cryptic_scheme(subset.inventory,
                                       mix_seed(config.grid_seed, 0xC2,
                                                static_cast<std::uint64_t>(n_labels)));
          break;
        case SchemeKind::kIdentity:
          scheme = make_identity_scheme(subset.inventory);
          break;
        default: {
          const auto found = config.scheme_tables.find(kind);
          if (found == config.scheme_tables.end())
            throw ValidationError("no verbalization table provided for the " +
                                  to_string(kind) + " scheme");
          scheme = found->second;
        }
      }
      const Corpus cell_corpus = apply_verbalization(subset, scheme);

      GridCell cell;
      cell.n_labels = n_labels;
      cell.scheme = kind;
      for (std::uint64_t split_seed : config.protocol.split_seeds) {
        ProtocolOutcome outcome = run_protocol_presplit(
            factory, cell_corpus, sr.d_fs, d_fs_test, config.protocol, split_seed);
        for (RunResult& r : outcome.results) cell.results.push_back(std::move(r));
        for (auto& [seed, log] : outcome.lit_logs)
          cell.lit_epoch_losses[seed] = log.epoch_mean_loss;
      }
      for (int k : config.protocol.k_list)
        cell.f1_by_k[k] = aggregate_f1(cell.results, k);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

nlohmann::json to_json(const GridCell& cell) {
  nlohmann::json f1_by_k = nlohmann::json::object();
  for (const auto& [k, agg] : cell.f1_by_k)
    f1_by_k[std::to_string(k)] = {
        {"mean", agg.mean}, {"stddev", agg.stddev}, {"n", agg.n}};
  nlohmann::json results = nlohmann::json::array();
  for (const RunResult& r : cell.results) results.push_back(result_to_json(r));
  nlohmann::json losses = nlohmann::json::object();
  for (const auto& [seed, epoch_losses] : cell.lit_epoch_losses)
    losses[std::to_string(seed)] = epoch_losses;
  return {{"n_labels", cell.n_labels},
          {"scheme", to_string(cell.scheme)},
          {"f1_by_k", f1_by_k},
          {"results", results},
          {"lit_epoch_losses", losses}};
}

GridCell grid_cell_from_json(const nlohmann::json& j) {
  GridCell cell;
  cell.n_labels = j.at("n_labels").get<int>();
  cell.scheme = parse_scheme_kind(j.at("scheme").get<std::string>());
  for (const auto& [key, agg] : j.at("f1_by_k").items()) {
    Aggregate a;
    a.mean = agg.at("mean").get<double>();
    a.stddev = agg.at("stddev").get<double>();
    a.n = agg.at("n").get<int>();
    cell.f1_by_k[std::stoi(key)] = a;
  }
  for (const auto& r : j.at("results")) cell.results.push_back(result_from_json(r));
  for (const auto& [key, losses] : j.at("lit_epoch_losses").items())
    cell.lit_epoch_losses[std::stoull(key)] = losses.get<std::vector<double>>();
  return cell;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  throw ValidationError("unknown report format '" + name +
                        "' (expected csv, json, or markdown)");
}

void emit_report(const std::vector<RunResult>& results,
                 const std::filesystem::path& path, ReportFormat format) {
  if (results.empty()) throw ValidationError("nothing to report");
  const std::vector<RunResult> rows = sorted_results(results);
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");

  switch (format) {
    case ReportFormat::kCsv: {
      out << "split_seed,support_seed,k,precision,recall,f1,tp,fp,fn,skipped,"
             "config_hash\n";
      for (const RunResult& r : rows)
        out << r.split_seed << ',' << r.support_seed << ',' << r.k << ','
            << format_number(r.precision) << ',' << format_number(r.recall) << ','
            << format_number(r.f1) << ',' << r.tp << ',' << r.fp << ',' << r.fn
            << ',' << (r.skipped ? "true" : "false") << ',' << r.config_hash << "\n";
      break;
    }
    case ReportFormat::kJson: {
      nlohmann::json arr = nlohmann::json::array();
      for (const RunResult& r : rows) {
        nlohmann::json j = {{"split_seed", r.split_seed},
                            {"support_seed", r.support_seed},
                            {"k", r.k},
                            {"precision", r.precision},
                            {"recall", r.recall},
                            {"f1", r.f1},
                            {"tp", r.tp},
                            {"fp", r.fp},
                            {"fn", r.fn},
                            {"skipped", r.skipped},
                            {"config_hash", r.config_hash}};
        if (r.skipped) j["skip_reason"] = r.skip_reason;
        arr.push_back(std::move(j));
      }
      out << arr.dump(2) << "\n";
      break;
    }
    case ReportFormat::kMarkdown: {
      std::vector<int> ks;
      for (const RunResult& r : rows)
        if (std::find(ks.begin(), ks.end(), r.k) == ks.end()) ks.push_back(r.k);
      std::sort(ks.begin(), ks.end());

      out << "# Few-shot results\n\nMicro-F1 x 100, mean over seeds with "
             "population stddev.\n\n";
      out << "| run |";
      for (int k : ks) out << ' ' << k << "-shot |";
      out << " Avg |\n|---|";
      for (std::size_t i = 0; i < ks.size() + 1; ++i) out << "---|";
      out << "\n| all seeds |";
      double rounded_sum = 0.0;
      int rounded_n = 0;
      for (int k : ks) {
        const Aggregate agg = aggregate_f1(rows, k);
        if (agg.n == 0) {
          out << " skipped |";
          continue;
        }
        const std::string mean = round1(100.0 * agg.mean);
        out << ' ' << mean << " ± " << round1(100.0 * agg.stddev) << " |";
        rounded_sum += std::stod(mean);
        ++rounded_n;
      }
      // The average column re-averages the printed means, so a reader can
      // recompute it from the table alone.
      if (rounded_n > 0)
        out << ' ' << round1(rounded_sum / rounded_n) << " |\n";
      else
        out << " skipped |\n";

      out << "\n## Per-seed results\n\n"
             "| split seed | support seed | k | P | R | F1 | note |\n"
             "|---|---|---|---|---|---|---|\n";
      for (const RunResult& r : rows) {
        out << "| " << r.split_seed << " | " << r.support_seed << " | " << r.k
            << " | ";
        if (r.skipped)
          out << "- | - | - | " << r.skip_reason << " |\n";
        else
          out << round1(100.0 * r.precision) << " | " << round1(100.0 * r.recall)
              << " | " << round1(100.0 * r.f1) << " |  |\n";
      }
      break;
    }
  }
  if (!out) throw RuntimeError("failed while writing '" + path.string() + "'");
}

void write_results_jsonl(const std::vector<RunResult>& results,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  for (const RunResult& r : sorted_results(results))
    out << result_to_json(r).dump() << "\n";
  if (!out) throw RuntimeError("failed while writing '" + path.string() + "'");
}

std::vector<RunResult> read_results_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open '" + path.string() + "'");
  std::vector<RunResult> results;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      results.push_back(result_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("bad result record: " + std::string(e.what()), line_no);
    }
  }
  return results;
}

void emit_grid_svg(const std::vector<GridCell>& cells,
                   const std::filesystem::path& path) {
  if (cells.empty()) throw ValidationError("no grid cells to draw");

  std::vector<int> label_counts;
  std::vector<SchemeKind> schemes;
  for (const GridCell& c : cells) {
    if (std::find(label_counts.begin(), label_counts.end(), c.n_labels) ==
        label_counts.end())
      label_counts.push_back(c.n_labels);
    if (std::find(schemes.begin(), schemes.end(), c.scheme) == schemes.end())
      schemes.push_back(c.scheme);
  }
  std::sort(label_counts.begin(), label_counts.end());

  const int cell_w = 150, cell_h = 70, left = 110, top = 60;
  const int width = left + cell_w * static_cast<int>(label_counts.size()) + 20;
  const int height = top + cell_h * static_cast<int>(schemes.size()) + 20;

  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
  out << "  <text x=\"" << left << "\" y=\"24\" font-size=\"15\">"
      << "mean micro-F1 by label count and verbalization scheme</text>\n";

  for (std::size_t col = 0; col < label_counts.size(); ++col)
    out << "  <text x=\"" << left + cell_w * static_cast<int>(col) + cell_w / 2
        << "\" y=\"" << top - 8 << "\" font-size=\"12\" text-anchor=\"middle\">"
        << label_counts[col] << " labels</text>\n";
  for (std::size_t row = 0; row < schemes.size(); ++row)
    out << "  <text x=\"" << left - 10 << "\" y=\""
        << top + cell_h * static_cast<int>(row) + cell_h / 2 + 4
        << "\" font-size=\"12\" text-anchor=\"end\">" << to_string(schemes[row])
        << "</text>\n";

  for (const GridCell& cell : cells) {
    const auto col = static_cast<int>(
        std::find(label_counts.begin(), label_counts.end(), cell.n_labels) -
        label_counts.begin());
    const auto row = static_cast<int>(
        std::find(schemes.begin(), schemes.end(), cell.scheme) - schemes.begin());
    double sum = 0.0;
    int n = 0;
    for (const auto& [k, agg] : cell.f1_by_k) {
      if (agg.n == 0) continue;
      sum += agg.mean;
      ++n;
    }
    const double mean = n > 0 ? sum / n : 0.0;
    const int shade = 255 - static_cast<int>(170.0 * std::clamp(mean, 0.0, 1.0));
    const int x = left + cell_w * col, y = top + cell_h * row;
    out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w - 4
        << "\" height=\"" << cell_h - 4 << "\" fill=\"rgb(" << shade << ",255,"
        << shade << ")\" stroke=\"#444\"/>\n";
    out << "  <text x=\"" << x + (cell_w - 4) / 2 << "\" y=\"" << y + 24
        << "\" font-size=\"13\" text-anchor=\"middle\">" << round1(100.0 * mean)
        << "</text>\n";
    std::ostringstream detail;
    for (const auto& [k, agg] : cell.f1_by_k)
      detail << k << ":" << (agg.n > 0 ? round1(100.0 * agg.mean) : "-") << " ";
    out << "  <text x=\"" << x + (cell_w - 4) / 2 << "\" y=\"" << y + 46
        << "\" font-size=\"10\" text-anchor=\"middle\">" << detail.str()
        << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw RuntimeError("failed while writing '" + path.string() + "'");
}

}  // namespace fewner

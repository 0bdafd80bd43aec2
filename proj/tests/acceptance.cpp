// Acceptance harness. Each criterion prints exactly one [PASS]/[FAIL] line
// (plus one [SKIP] for the optional GPU-scale run) and the process exits
// nonzero when anything failed. Criteria carry their own wall-clock budgets;
// exceeding one is a failure even when the checks themselves pass.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <json.hpp>

#include "fewner/annotate.hpp"
#include "fewner/biencoder.hpp"
#include "fewner/config.hpp"
#include "fewner/corpus.hpp"
#include "fewner/errors.hpp"
#include "fewner/eval.hpp"
#include "fewner/jsonl_io.hpp"
#include "fewner/kb.hpp"
#include "fewner/rng.hpp"
#include "fewner/sampling.hpp"
#include "fewner/splits.hpp"
#include "fewner/support.hpp"
#include "fewner/verbalization.hpp"

#include "support_oracle.hpp"

namespace fs = std::filesystem;
using namespace fewner;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

Outcome pass(std::string detail) { return {true, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, std::move(detail)}; }

std::string format(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

const fs::path kWork = fs::temp_directory_path() / "fewner_acceptance";

int run_cli(const std::string& args, std::string* output = nullptr) {
  const fs::path log = kWork / "cli_output.txt";
  const std::string cmd =
      std::string(FEWNER_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WEXITSTATUS(rc);
}

const std::vector<std::string> kWords = {
    "river",  "stone",  "meadow", "harbor", "lantern", "copper", "violet",
    "summit", "cedar",  "ember",  "garden", "willow",  "anchor", "breeze",
    "canyon", "drift",  "falcon", "grove",  "hollow",  "island"};

std::string word(Rng& rng) { return kWords[rng.next_below(kWords.size())]; }

// ---------------------------------------------------------------------------
// 1. Restricting the loss to the labels present in a batch must not change
// its value when the batch happens to cover the whole inventory, and the
// local label space must stay at |batch types| + 1 columns otherwise.

std::string inv_label(int i) { return format("group%02d", i); }

Sentence one_span_sentence(Rng& rng, const std::string& type) {
  Sentence s;
  const int n = 3 + static_cast<int>(rng.next_below(3));
  for (int i = 0; i < n; ++i) s.tokens.push_back(word(rng));
  s.spans.push_back({0, 1, type});
  return s;
}

Outcome criterion_loss_restriction() {
  EncoderConfig ec;
  ec.token_encoder_id = "tiny-2x32";
  ec.label_encoder_id = "tiny-2x32";
  ec.hidden = 32;
  const BiEncoder model(ec, 424242);  // frozen: only eval-mode passes below

  TypeInventory inv;
  for (int i = 0; i < 20; ++i) inv.add(inv_label(i), "the " + kWords[i] + " kind");
  BatchLabelSpace full;
  full.local_labels = inv.ids();
  for (int i = 0; i < full.size(); ++i) full.global_to_local[full.local_labels[i]] = i;

  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Sentence> storage;
    for (int i = 0; i < 20; ++i) {
      storage.push_back(one_span_sentence(rng, inv_label(i)));
      if (rng.next_uniform() < 0.3 && storage.back().tokens.size() >= 3)
        storage.back().spans.push_back(
            {1, 2, inv_label(static_cast<int>(rng.next_below(20)))});
    }
    std::vector<const Sentence*> batch;
    for (const Sentence& s : storage) batch.push_back(&s);

    Rng neg_rng(1000 + trial);
    BatchLabelSpace local = build_batch_label_space(batch, inv, 0, neg_rng);
    if (local.size() != 21)
      return fail(format("covering batch built %d local labels, expected 21",
                         local.size()));

    BiEncoder scratch(model);  // gradients accumulate on the copy, never on `model`
    const double loss_local =
        scratch.batch_loss(batch, local, inv, false, false).loss;
    const double loss_full =
        scratch.batch_loss(batch, full, inv, false, false).loss;
    const double rel = std::fabs(loss_local - loss_full) /
                       std::max({std::fabs(loss_local), std::fabs(loss_full), 1e-300});
    worst = std::max(worst, rel);
    if (rel > 1e-6)
      return fail(format("trial %d: in-batch loss %.12f vs full-space %.12f "
                         "(relative gap %.3e)",
                         trial, loss_local, loss_full, rel));
  }

  for (int trial = 0; trial < 50; ++trial) {
    const int n_types = 2 + static_cast<int>(rng.next_below(7));
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < n_types)
      chosen.insert(static_cast<int>(rng.next_below(20)));
    std::vector<Sentence> storage;
    for (int t : chosen) storage.push_back(one_span_sentence(rng, inv_label(t)));
    std::vector<const Sentence*> batch;
    for (const Sentence& s : storage) batch.push_back(&s);

    Rng neg_rng(2000 + trial);
    BatchLabelSpace local = build_batch_label_space(batch, inv, 0, neg_rng);
    if (local.size() != n_types + 1)
      return fail(format("subset batch with %d types built %d local labels",
                         n_types, local.size()));
    model.encode_label_space(local, inv, false);
    const TokenEncoding enc = model.encode_tokens(batch);
    const TokenScores scores = score(enc.vectors, local.label_embeddings);
    if (scores.logits.cols() != n_types + 1)
      return fail(format("subset batch logits have %td columns, expected %d",
                         static_cast<std::ptrdiff_t>(scores.logits.cols()),
                         n_types + 1));
  }
  return pass(format("max relative loss gap %.2e over 50 covering batches, "
                     "50 subset batches at |types|+1 columns",
                     worst));
}

// ---------------------------------------------------------------------------
// 2. The analytic gradient of the batch cross-entropy with respect to the
// token embeddings must match central finite differences.

Outcome criterion_gradient_check() {
  Rng rng(99);
  double worst = 0.0;
  for (int b = 0; b < 5; ++b) {
    const int n = 12, labels = 7, hidden = 16;
    Eigen::MatrixXd e_t(n, hidden), e_l(labels, hidden);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < hidden; ++j) e_t(i, j) = 2.0 * rng.next_uniform() - 1.0;
    for (int i = 0; i < labels; ++i)
      for (int j = 0; j < hidden; ++j) e_l(i, j) = 2.0 * rng.next_uniform() - 1.0;
    std::vector<int> gold(n);
    for (int i = 0; i < n; ++i)
      gold[i] = static_cast<int>(rng.next_below(labels + 1)) - 1;  // -1 = masked
    gold[0] = 0;  // keep at least one scored token

    Eigen::MatrixXd d_logits;
    in_batch_cross_entropy(score(e_t, e_l), gold, &d_logits);
    const Eigen::MatrixXd d_et = d_logits * e_l;

    const double eps = 1e-4;
    for (int c = 0; c < 10; ++c) {
      int row;
      do {
        row = static_cast<int>(rng.next_below(n));
      } while (gold[row] < 0);
      const int col = static_cast<int>(rng.next_below(hidden));
      Eigen::MatrixXd up = e_t, down = e_t;
      up(row, col) += eps;
      down(row, col) -= eps;
      const double fd = (in_batch_cross_entropy(score(up, e_l), gold) -
                         in_batch_cross_entropy(score(down, e_l), gold)) /
                        (2.0 * eps);
      const double rel = std::fabs(d_et(row, col) - fd) /
                         std::max({std::fabs(fd), std::fabs(d_et(row, col)), 1e-8});
      worst = std::max(worst, rel);
      if (rel > 1e-4)
        return fail(format("batch %d coord (%d,%d): analytic %.10f vs "
                           "finite-difference %.10f (relative %.3e)",
                           b, row, col, d_et(row, col), fd, rel));
    }
  }
  return pass(format("max relative error %.2e over 5 batches x 10 coordinates",
                     worst));
}

// ---------------------------------------------------------------------------
// 3. Verbalization sampling: half the draws take the description branch, the
// tag branch draws its tag count from a geometric(0.5) truncated at the pool
// size, and the untruncated count has mean 2.

Outcome criterion_sampler_distributions() {
  KBEntityRecord rec;
  rec.qid = "Q1";
  rec.description = "ancient walled city";
  rec.instance_of = {"city", "settlement", "municipality"};
  rec.subclass_of = {"place", "area", "zone"};
  SamplingConfig sc;
  sc.mode = SamplingMode::kSampled;
  sc.p_geometric = 0.5;

  const int n = 100000;
  Rng rng(555);
  int desc_hits = 0;
  std::vector<double> hist(6, 0.0);
  for (int i = 0; i < n; ++i) {
    const std::string v = sample_type_verbalization(rec, sc, rng);
    if (v == rec.description) {
      ++desc_hits;
      continue;
    }
    std::size_t tags = 1, at = 0;
    while ((at = v.find(sc.tag_separator, at)) != std::string::npos) {
      ++tags;
      at += sc.tag_separator.size();
    }
    if (tags < 1 || tags > 6)
      return fail(format("tag branch produced %zu tags from a pool of 6", tags));
    hist[tags - 1] += 1.0;
  }

  const double desc_freq = static_cast<double>(desc_hits) / n;
  if (std::fabs(desc_freq - 0.5) > 0.02)
    return fail(format("description branch frequency %.4f outside 0.5 +- 0.02",
                       desc_freq));

  const double tag_draws = static_cast<double>(n - desc_hits);
  double chi2 = 0.0;
  for (int k = 1; k <= 6; ++k) {
    const double p = (k < 6) ? std::pow(0.5, k) : std::pow(0.5, 5);  // tail mass
    const double expected = tag_draws * p;
    const double diff = hist[k - 1] - expected;
    chi2 += diff * diff / expected;
  }
  boost::math::chi_squared dist(5);
  const double p_value = boost::math::cdf(boost::math::complement(dist, chi2));
  if (p_value <= 0.01)
    return fail(format("truncated-geometric chi-square %.2f has p = %.4f <= 0.01",
                       chi2, p_value));

  Rng rng2(777);
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += static_cast<double>(sample_tag_count(rng2, 0.5, std::uint64_t{1} << 60));
  const double mean = sum / n;
  if (std::fabs(mean - 2.0) > 0.05)
    return fail(format("untruncated tag-count mean %.4f outside 2.0 +- 0.05", mean));

  return pass(format("description branch %.3f, chi-square p = %.3f, "
                     "untruncated mean %.3f",
                     desc_freq, p_value, mean));
}

// ---------------------------------------------------------------------------
// 4. Wherever an exhaustive subset search proves an exact-k support set
// exists, the sampler must find one; where none exists, its overshoot stays
// under the densest sentence's entity count.

Corpus random_support_corpus(Rng& rng) {
  static const std::vector<std::string> kTypes = {"red",   "blue", "green",
                                                  "amber", "teal"};
  const int n_labels = 3 + static_cast<int>(rng.next_below(3));
  Corpus c;
  for (int i = 0; i < n_labels; ++i) c.inventory.add(kTypes[i], kTypes[i]);
  const int n_sent =
      n_labels + 1 + static_cast<int>(rng.next_below(12 - n_labels));
  for (int i = 0; i < n_sent; ++i) {
    Sentence s;
    const int n_spans = 1 + static_cast<int>(rng.next_below(3));
    for (int j = 0; j < 2 * n_spans; ++j) s.tokens.push_back(word(rng));
    for (int j = 0; j < n_spans; ++j) {
      // Sentence i < n_labels seeds one mention of label i so most labels
      // stay reachable; the rest is uniform.
      const int t = (i < n_labels && j == 0)
                        ? i
                        : static_cast<int>(rng.next_below(n_labels));
      s.spans.push_back({2 * j, 2 * j + 1, kTypes[t]});
    }
    c.sentences.push_back(std::move(s));
  }
  return c;
}

Outcome criterion_support_exactness() {
  Rng rng(2024);
  int exact = 0, bounded = 0, refused = 0;
  for (int t = 0; t < 100; ++t) {
    const Corpus c = random_support_corpus(rng);
    const std::size_t cap = max_entities_per_sentence(c);
    for (int k : {1, 2, 3}) {
      const bool feasible = exact_k_feasible(c, k);
      SupportSet s;
      try {
        s = sample_support_set(c, k, mix_seed(9000 + t, k));
      } catch (const ValidationError&) {
        if (feasible)
          return fail(format("trial %d k=%d: sampler refused an instance the "
                             "exhaustive search certifies as exact-feasible",
                             t, k));
        ++refused;  // some label has fewer than k mentions in total
        continue;
      }
      if (feasible) {
        for (const std::string& label : c.inventory.non_o_ids()) {
          const auto it = s.label_counts.find(label);
          const int got = it == s.label_counts.end() ? 0 : it->second;
          if (got != k)
            return fail(format("trial %d k=%d: label '%s' sampled %d times on "
                               "an exact-feasible corpus",
                               t, k, label.c_str(), got));
        }
        ++exact;
      } else {
        if (static_cast<long>(s.max_overshoot()) > static_cast<long>(cap) - 1)
          return fail(format("trial %d k=%d: overshoot %zu exceeds densest "
                             "sentence bound %zu - 1",
                             t, k, static_cast<std::size_t>(s.max_overshoot()),
                             cap));
        ++bounded;
      }
    }
  }
  if (exact < 30)
    return fail(format("only %d exact-feasible instances generated; the trial "
                       "set is too weak to certify the sampler",
                       exact));
  return pass(format("%d exact-feasible instances hit k exactly, %d infeasible "
                     "stayed within the overshoot bound, %d under-resourced",
                     exact, bounded, refused));
}

// ---------------------------------------------------------------------------
// 5. Label splits: the two corpus sides never leak each other's types, whole
// coarse classes stay on one side under the intra mode, and the inter mode
// halves the fine labels inside every coarse class.

Outcome criterion_split_disjointness() {
  static const int kFine = 12, kCoarse = 4;
  std::map<std::string, std::string> coarse_map;
  std::vector<std::string> fine;
  for (int i = 0; i < kFine; ++i) {
    fine.push_back(format("F%02d", i));
    coarse_map[fine.back()] = format("C%d", i % kCoarse);
  }

  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    Corpus c;
    for (const std::string& f : fine) c.inventory.add(f, "a " + f + " thing");
    const int n_sent = 16 + static_cast<int>(rng.next_below(9));
    for (int i = 0; i < n_sent; ++i) {
      Sentence s;
      const int n_spans = 1 + static_cast<int>(rng.next_below(3));
      for (int j = 0; j < 2 * n_spans; ++j) s.tokens.push_back(word(rng));
      for (int j = 0; j < n_spans; ++j)
        s.spans.push_back(
            {2 * j, 2 * j + 1, fine[rng.next_below(kFine)]});
      c.sentences.push_back(std::move(s));
    }

    for (SplitMode mode : {SplitMode::kRandomHalf, SplitMode::kFrequency,
                           SplitMode::kIntra, SplitMode::kInter}) {
      SplitSpec spec;
      spec.mode = mode;
      spec.seed = 1000 + t;
      if (mode == SplitMode::kFrequency) {
        spec.n_lit = 6;
        spec.n_fs = 6;
      }
      if (mode == SplitMode::kIntra || mode == SplitMode::kInter)
        spec.coarse_map = coarse_map;
      const SplitResult sr = split_labels(c, spec);

      const std::set<std::string> lit(sr.l_lit.begin(), sr.l_lit.end());
      const std::set<std::string> fs(sr.l_fs.begin(), sr.l_fs.end());
      for (const Sentence& s : sr.d_lit.sentences)
        for (const EntitySpan& span : s.spans)
          if (fs.count(span.type))
            return fail(format("trial %d mode %d: few-shot type '%s' leaked "
                               "into the interpretation corpus",
                               t, static_cast<int>(mode), span.type.c_str()));
      for (const Sentence& s : sr.d_fs.sentences)
        for (const EntitySpan& span : s.spans)
          if (lit.count(span.type))
            return fail(format("trial %d mode %d: interpretation type '%s' "
                               "leaked into the few-shot corpus",
                               t, static_cast<int>(mode), span.type.c_str()));

      if (mode == SplitMode::kIntra) {
        std::set<std::string> lit_coarse, fs_coarse;
        for (const std::string& f : sr.l_lit) lit_coarse.insert(coarse_map.at(f));
        for (const std::string& f : sr.l_fs) fs_coarse.insert(coarse_map.at(f));
        for (const std::string& cls : lit_coarse)
          if (fs_coarse.count(cls))
            return fail(format("trial %d: coarse class '%s' straddles the "
                               "intra split",
                               t, cls.c_str()));
      }
      if (mode == SplitMode::kInter) {
        std::map<std::string, int> lit_per, fs_per;
        for (const std::string& f : sr.l_lit) ++lit_per[coarse_map.at(f)];
        for (const std::string& f : sr.l_fs) ++fs_per[coarse_map.at(f)];
        for (int cls = 0; cls < kCoarse; ++cls) {
          const std::string name = format("C%d", cls);
          const int a = lit_per[name], b = fs_per[name];
          if (a + b != kFine / kCoarse || std::abs(a - b) > 1 || a < 1 || b < 1)
            return fail(format("trial %d: coarse class %s split %d/%d is not "
                               "a stratified half",
                               t, name.c_str(), a, b));
        }
      }
    }
  }
  return pass("50 corpora x 4 modes: no cross-side types; intra classes pure, "
              "inter classes halved");
}

// ---------------------------------------------------------------------------
// 6. Span micro-F1 against an independent brute-force matcher.

Outcome criterion_micro_f1_oracle() {
  {
    const std::vector<std::vector<EntitySpan>> gold = {{{0, 1, "person"}}};
    const std::vector<std::vector<EntitySpan>> pred = {
        {{0, 1, "person"}, {2, 3, "person"}}};
    const PrfCounts r = micro_f1(gold, pred);
    if (r.precision() != 0.5 || r.recall() != 1.0 ||
        std::fabs(r.f1() - 2.0 / 3.0) > 1e-15)
      return fail(format("hand case gave P=%.4f R=%.4f F1=%.6f, expected "
                         "0.5 / 1.0 / 0.666667",
                         r.precision(), r.recall(), r.f1()));
  }

  static const std::vector<std::string> kTypes = {"a", "b", "c"};
  Rng rng(606);
  auto random_side = [&](int n_sent) {
    std::vector<std::vector<EntitySpan>> side(n_sent);
    for (auto& spans : side) {
      const int n = static_cast<int>(rng.next_below(4));
      for (int i = 0; i < n; ++i) {
        const int start = static_cast<int>(rng.next_below(6));
        const int len = 1 + static_cast<int>(rng.next_below(2));
        spans.push_back({start, start + len, kTypes[rng.next_below(3)]});
      }
    }
    return side;
  };

  for (int t = 0; t < 200; ++t) {
    const int n_sent = 1 + static_cast<int>(rng.next_below(6));
    const auto gold = random_side(n_sent);
    const auto pred = random_side(n_sent);

    std::size_t tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < n_sent; ++i) {
      const std::set<EntitySpan> g(gold[i].begin(), gold[i].end());
      const std::set<EntitySpan> p(pred[i].begin(), pred[i].end());
      for (const EntitySpan& span : p)
        g.count(span) ? ++tp : ++fp;
      for (const EntitySpan& span : g)
        if (!p.count(span)) ++fn;
    }
    const PrfCounts r = micro_f1(gold, pred);
    if (r.tp != tp || r.fp != fp || r.fn != fn)
      return fail(format("trial %d: counts tp/fp/fn %zu/%zu/%zu vs oracle "
                         "%zu/%zu/%zu",
                         t, r.tp, r.fp, r.fn, tp, fp, fn));
  }
  return pass("hand case exact; 200 random gold/pred pairs match the oracle's "
              "pooled counts");
}

// ---------------------------------------------------------------------------
// 7 and 8. A toy label-count x scheme grid over a synthetic corpus, run twice
// through the command line: the first run must finish on CPU with finite
// scores and a clearly decreasing interpretation loss, the second must
// reproduce it byte for byte.

constexpr int kToyTopics = 30;
constexpr int kToyRares = 4;

std::string toy_name(int label, int variant) {
  static const std::vector<std::string> kSyllables = {
      "bra", "del", "fon", "gri", "hul", "jor", "kam", "lin",
      "mor", "nep", "ost", "pra", "qui", "rud", "sel", "tav",
      "umb", "vex", "wol", "yar", "zel", "bix", "cor", "dun"};
  const std::size_t a = (7 * label + variant) % kSyllables.size();
  const std::size_t b = (3 * label + 5 * variant + 11) % kSyllables.size();
  return kSyllables[a] + kSyllables[b];
}

std::string toy_label(int i) {
  return i < kToyTopics ? format("topic%02d", i) : format("rare%d", i - kToyTopics);
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

// Sentences come from fixed templates; <0> and <1> mark mention slots.
Sentence toy_sentence(Rng& rng, const std::vector<int>& labels) {
  static const std::vector<std::string> kOne = {
      "<0> opened a small shop near the harbor",
      "the council praised <0> in its annual report",
      "many visitors photographed <0> last spring",
      "<0> stayed closed during the long storm",
      "a road sign points toward <0> from the bridge"};
  static const std::vector<std::string> kTwo = {
      "<0> and <1> signed the agreement quietly",
      "between <0> and <1> runs an old trade road",
      "the survey compared <0> with <1> at length"};
  const auto& pool = labels.size() == 2 ? kTwo : kOne;
  const auto words = split_words(pool[rng.next_below(pool.size())]);
  Sentence s;
  std::size_t slot = 0;
  for (const std::string& w : words) {
    if (w == "<0>" || w == "<1>") {
      const int label = labels[slot];
      const int variant = static_cast<int>(rng.next_below(6));
      const int pos = static_cast<int>(s.tokens.size());
      s.tokens.push_back(toy_name(label, variant));
      s.spans.push_back({pos, pos + 1, toy_label(label)});
      ++slot;
    } else {
      s.tokens.push_back(w);
    }
  }
  return s;
}

Corpus toy_corpus(Rng& rng, int per_topic, int per_rare) {
  std::vector<int> queue;
  for (int i = 0; i < kToyTopics; ++i)
    queue.insert(queue.end(), per_topic, i);
  for (int i = 0; i < kToyRares; ++i)
    queue.insert(queue.end(), per_rare, kToyTopics + i);
  for (std::size_t i = queue.size(); i > 1; --i)
    std::swap(queue[i - 1], queue[rng.next_below(i)]);

  Corpus c;
  for (int i = 0; i < kToyTopics + kToyRares; ++i)
    c.inventory.add(toy_label(i), toy_label(i));
  std::size_t at = 0;
  while (at < queue.size()) {
    std::vector<int> labels = {queue[at++]};
    if (at < queue.size() && rng.next_uniform() < 0.45) labels.push_back(queue[at++]);
    c.sentences.push_back(toy_sentence(rng, labels));
  }
  return c;
}

struct ToyGridState {
  fs::path config_file;
  fs::path first_run;
  std::string first_cells;
};
ToyGridState g_toy;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_toy_grid() {
  const fs::path dir = kWork / "toy";
  fs::create_directories(dir);

  Rng rng(84);
  const Corpus train = toy_corpus(rng, 90, 75);  // 30*90 + 4*75 = 3000 mentions
  const Corpus test = toy_corpus(rng, 5, 40);
  write_corpus_jsonl(train, (dir / "train.jsonl").string());
  write_corpus_jsonl(test, (dir / "test.jsonl").string());

  VerbalizationScheme longer;
  longer.kind = SchemeKind::kLong;
  longer.table["O"] = "none, not an entity";
  for (int i = 0; i < kToyTopics; ++i)
    longer.table[toy_label(i)] =
        format("the wider category of %s and %s like entities, group %d",
               toy_name(i, 0).c_str(), toy_name(i, 1).c_str(), i);
  save_scheme(longer, (dir / "long_scheme.json").string());

  ExperimentConfig cfg;
  cfg.paths.train_corpus = (dir / "train.jsonl").string();
  cfg.paths.test_corpus = (dir / "test.jsonl").string();
  cfg.paths.output_dir = (dir / "out").string();
  cfg.lit_train.learning_rate = 5e-3;
  cfg.lit_train.epochs = 3;
  cfg.lit_train.batch_size = 16;
  cfg.fs_train.learning_rate = 5e-3;
  cfg.fs_train.max_epochs = 8;
  cfg.fs_train.batch_size = 4;
  cfg.fs_train.early_stop_patience = 2;
  cfg.split_seeds = {1, 2};
  cfg.support_seeds = {1};
  cfg.k_list = {1, 5};
  cfg.grid.n_labels_list = {3, 10, 30};
  cfg.grid.schemes = {"cryptic", "long"};
  cfg.grid.annotation_budget = 250;  // must stay reachable by the 3-label cells
  cfg.grid.n_fs_labels = kToyRares;
  cfg.grid.scheme_table_files = {{"long", (dir / "long_scheme.json").string()}};
  g_toy.config_file = dir / "config.json";
  cfg.save(g_toy.config_file.string());

  g_toy.first_run = dir / "gridA";
  std::string output;
  const int rc = run_cli("grid --config " + g_toy.config_file.string() +
                             " --seed 0 --jobs 2 -o " + g_toy.first_run.string(),
                         &output);
  if (rc != 0)
    return fail("grid run exited with status " + std::to_string(rc) + ": " +
                output.substr(0, 200));

  g_toy.first_cells = read_file(g_toy.first_run / "cells.json");
  const nlohmann::json cells = nlohmann::json::parse(g_toy.first_cells);
  if (cells.size() != 6)
    return fail(format("grid produced %zu cells, expected 6", cells.size()));

  double drop_from = 0.0, drop_to = 0.0;
  bool saw_target_cell = false;
  for (const auto& cell : cells) {
    const std::string scheme = cell.at("scheme").get<std::string>();
    const int n_labels = cell.at("n_labels").get<int>();
    for (const auto& [k, agg] : cell.at("f1_by_k").items()) {
      const double mean = agg.at("mean").get<double>();
      if (!std::isfinite(mean))
        return fail(format("cell %d/%s k=%s has non-finite mean F1",
                           n_labels, scheme.c_str(), k.c_str()));
    }
    for (const auto& r : cell.at("results"))
      if (!r.value("skipped", false) && !std::isfinite(r.at("f1").get<double>()))
        return fail(format("cell %d/%s has a non-finite per-run F1", n_labels,
                           scheme.c_str()));
    if (scheme == "long" && n_labels == 30) {
      saw_target_cell = true;
      for (const auto& [seed, losses] : cell.at("lit_epoch_losses").items()) {
        if (losses.size() < 3)
          return fail(format("long/30 cell logged only %zu interpretation "
                             "epochs under seed %s",
                             losses.size(), seed.c_str()));
        const double first = losses.at(0).get<double>();
        const double third = losses.at(2).get<double>();
        drop_from = first;
        drop_to = third;
        if (!(third <= 0.5 * first))
          return fail(format("long/30 cell seed %s: interpretation loss only "
                             "moved %.4f -> %.4f over 3 epochs",
                             seed.c_str(), first, third));
      }
    }
  }
  if (!saw_target_cell) return fail("the long/30 cell is missing from cells.json");
  return pass(format("6 cells finite; long/30 interpretation loss %.3f -> %.3f",
                     drop_from, drop_to));
}

Outcome criterion_grid_determinism() {
  if (g_toy.first_cells.empty())
    return fail("no first grid run to compare against");
  const fs::path second = kWork / "toy" / "gridB";
  std::string output;
  const int rc = run_cli("grid --config " + g_toy.config_file.string() +
                             " --seed 0 --jobs 2 -o " + second.string(),
                         &output);
  if (rc != 0)
    return fail("second grid run exited with status " + std::to_string(rc));
  const std::string again = read_file(second / "cells.json");
  if (again != g_toy.first_cells)
    return fail(format("cells.json differs between identically seeded runs "
                       "(%zu vs %zu bytes)",
                       g_toy.first_cells.size(), again.size()));
  return pass(format("both runs emit identical cells.json (%zu bytes, every "
                     "run result bit-equal)",
                     again.size()));
}

// ---------------------------------------------------------------------------
// 9. Corpus building from knowledge-base records: description-only mode keeps
// descriptions verbatim, and meta types never survive the filter.

Outcome criterion_builder_fidelity() {
  std::unordered_map<std::string, KBEntityRecord> kb;
  KBEntityRecord hospital;
  hospital.qid = "Q1";
  hospital.description = "hospital in Baltimore, Maryland";
  hospital.instance_of = {"teaching hospital", "university hospital"};
  kb["Q1"] = hospital;

  KBEntityRecord orphan;  // nothing left once the meta type goes
  orphan.qid = "Q2";
  orphan.instance_of = {"Wikimedia disambiguation page"};
  kb["Q2"] = orphan;

  KBEntityRecord mixed;
  mixed.qid = "Q3";
  mixed.description = "long river in the north";
  mixed.instance_of = {"river", "Wikimedia disambiguation page"};
  kb["Q3"] = mixed;

  for (int i = 4; i <= 20; ++i) {
    KBEntityRecord r;
    r.qid = "Q" + std::to_string(i);
    r.description = "a " + kWords[i - 4] + " of some renown";
    r.instance_of = {kWords[i - 4]};
    kb[r.qid] = r;
  }
  if (kb.size() != 20) return fail("fixture does not hold 20 records");

  std::vector<std::string> warnings;
  const std::size_t dropped = apply_meta_filter(kb, MetaFilter{}, &warnings);
  for (const auto& [qid, rec] : kb)
    for (const std::string& tag : rec.tag_pool())
      if (tag.find("isambiguation") != std::string::npos)
        return fail("record " + qid + " still carries the planted meta type");
  if (dropped != 1 || kb.count("Q2"))
    return fail("the meta-only record survived the filter");
  if (kb.at("Q3").tag_pool() != std::vector<std::string>{"river"})
    return fail("filtering did not reduce the mixed record's pool to 'river'");

  const std::vector<Sentence> sentences = {
      {{"the", "johns", "hopkins", "hospital", "admitted", "patients"}, {}},
      {{"crossing", "the", "mira", "took", "three", "hours"}, {}},
      {{"see", "also", "the", "overview", "page"}, {}}};
  const std::vector<LinkedMention> mentions = {
      {0, 1, 4, "Q1"}, {1, 2, 3, "Q3"}, {2, 3, 5, "Q2"}};

  SamplingConfig desc_only;
  desc_only.mode = SamplingMode::kDescriptionOnly;
  desc_only.seed = 1;
  AnnotateReport report;
  const Corpus c = annotate_corpus(sentences, mentions, kb, desc_only, &report);
  if (c.sentences[0].spans.size() != 1)
    return fail("the hospital mention was not annotated");
  const std::string& type = c.sentences[0].spans[0].type;
  if (c.inventory.verbalization_of(type) != "hospital in Baltimore, Maryland")
    return fail("description-only type is '" + c.inventory.verbalization_of(type) +
                "', not the verbatim description");
  if (!c.sentences[2].spans.empty() || report.dropped_unresolvable < 1)
    return fail("the mention of the meta-only record was not dropped");

  SamplingConfig labels_only;
  labels_only.mode = SamplingMode::kLabelsOnly;
  labels_only.seed = 1;
  const Corpus c2 = annotate_corpus(sentences, mentions, kb, labels_only, nullptr);
  for (int i = 0; i < c2.inventory.size(); ++i)
    if (c2.inventory.verbalization_at(i).find("isambiguation") != std::string::npos)
      return fail("a label verbalization still contains the planted meta type");

  return pass("verbatim description kept; meta type gone from every pool and "
              "verbalization; sourceless mention dropped");
}

}  // namespace

int main() {
  std::error_code ec;
  fs::remove_all(kWork, ec);
  fs::create_directories(kWork);

  struct Entry {
    int id;
    const char* what;
    double budget_seconds;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> entries = {
      {1, "restricting the loss to batch-present labels preserves the full-space loss",
       60, criterion_loss_restriction},
      {2, "analytic loss gradients match central finite differences",
       60, criterion_gradient_check},
      {3, "verbalization sampling follows the half-description, geometric-tag design",
       60, criterion_sampler_distributions},
      {4, "support sampling is exact wherever an exhaustive search proves it can be",
       120, criterion_support_exactness},
      {5, "label splits keep the two corpus sides' types disjoint in both directions",
       60, criterion_split_disjointness},
      {6, "span micro-F1 agrees with a brute-force matcher",
       10, criterion_micro_f1_oracle},
      {7, "a toy label-count x scheme grid trains, scores finitely and learns on CPU",
       1800, criterion_toy_grid},
      {8, "rerunning the toy grid with identical seeds reproduces it bit for bit",
       1800, criterion_grid_determinism},
      {9, "corpus building keeps descriptions verbatim and drops meta types",
       60, criterion_builder_fidelity},
  };

  int failures = 0;
  for (const Entry& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = e.fn();
    } catch (const std::exception& ex) {
      outcome = fail(std::string("unexpected exception: ") + ex.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (seconds > e.budget_seconds) {
      outcome.ok = false;
      outcome.detail += format(" [over the %.0f s budget]", e.budget_seconds);
    }
    if (!outcome.ok) ++failures;
    std::printf("[%s] criterion %d: %s (%s; %.1f s)\n",
                outcome.ok ? "PASS" : "FAIL", e.id, e.what,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("[SKIP] criterion 10: large-scale scheme contrast needs GPU-scale "
              "training; out of scope for this build\n");
  std::printf("%d of %zu criteria passed, 1 skipped\n",
              static_cast<int>(entries.size()) - failures, entries.size());
  return failures == 0 ? 0 : 1;
}

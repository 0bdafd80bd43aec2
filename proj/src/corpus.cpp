#include "fewner/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fewner/errors.hpp"
#include "fewner/rng.hpp"

namespace fewner {

TypeInventory::TypeInventory() : TypeInventory(kDefaultOVerbalization) {}

TypeInventory::TypeInventory(std::string o_verbalization) {
  ids_.push_back(kOId);
  verbs_.push_back(std::move(o_verbalization));
  index_[kOId] = 0;
}

int TypeInventory::add(const std::string& id, const std::string& verbalization) {
  if (id.empty()) throw ValidationError("type id must be non-empty");
  if (verbalization.empty())
    throw ValidationError("verbalization for type '" + id + "' must be non-empty");
  auto it = index_.find(id);
  if (it != index_.end()) {
    if (verbs_[it->second] != verbalization)
      throw ValidationError("type '" + id + "' already registered with a different verbalization");
    return it->second;
  }
  const int idx = static_cast<int>(ids_.size());
  ids_.push_back(id);
  verbs_.push_back(verbalization);
  index_[id] = idx;
  return idx;
}

int TypeInventory::index_of(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

const std::string& TypeInventory::verbalization_of(const std::string& id) const {
  const int idx = index_of(id);
  if (idx < 0) throw ValidationError("unknown type id '" + id + "'");
  return verbs_[idx];
}

void TypeInventory::set_verbalization(const std::string& id, const std::string& verbalization) {
  const int idx = index_of(id);
  if (idx < 0) throw ValidationError("unknown type id '" + id + "'");
  if (verbalization.empty())
    throw ValidationError("verbalization for type '" + id + "' must be non-empty");
  verbs_[idx] = verbalization;
}

std::vector<std::string> TypeInventory::non_o_ids() const {
  return {ids_.begin() + 1, ids_.end()};
}

std::uint64_t TypeInventory::content_hash() const {
  std::uint64_t h = fnv1a64("inventory");
  for (int i = 0; i < size(); ++i) {
    h = fnv1a64(ids_[i], h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(verbs_[i], h);
    h = fnv1a64("\x1e", h);
  }
  return h;
}

std::size_t Corpus::mention_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.spans.size();
  return n;
}

void Corpus::validate() const {
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const Sentence& s = sentences[i];
    if (s.tokens.empty())
      throw ValidationError("sentence " + std::to_string(i) + " has no tokens");
    int prev_end = 0;
    for (const EntitySpan& sp : s.spans) {
      if (sp.start < 0 || sp.end <= sp.start ||
          sp.end > static_cast<int>(s.tokens.size()))
        throw ValidationError("sentence " + std::to_string(i) +
                              ": span [" + std::to_string(sp.start) + "," +
                              std::to_string(sp.end) + ") out of range");
      if (sp.start < prev_end)
        throw ValidationError("sentence " + std::to_string(i) +
                              ": overlapping spans at token " + std::to_string(sp.start));
      prev_end = sp.end;
      if (!inventory.contains(sp.type))
        throw ValidationError("span type '" + sp.type + "' missing from inventory");
      if (sp.type == TypeInventory::kOId)
        throw ValidationError("sentence " + std::to_string(i) + ": span typed as O");
    }
  }
}

std::size_t normalize_spans(Sentence& sentence, OverlapPolicy policy) {
  std::sort(sentence.spans.begin(), sentence.spans.end());
  bool overlap = false;
  for (std::size_t i = 1; i < sentence.spans.size(); ++i) {
    if (sentence.spans[i].start < sentence.spans[i - 1].end) {
      overlap = true;
      break;
    }
  }
  if (!overlap) return 0;
  if (policy == OverlapPolicy::kError)
    throw ValidationError("overlapping spans in sentence");

  // Keep longest first, leftmost on ties; drop whatever collides.
  std::vector<EntitySpan> order = sentence.spans;
  std::stable_sort(order.begin(), order.end(), [](const EntitySpan& a, const EntitySpan& b) {
    const int la = a.end - a.start, lb = b.end - b.start;
    if (la != lb) return la > lb;
    return a.start < b.start;
  });
  std::vector<EntitySpan> kept;
  for (const EntitySpan& cand : order) {
    bool collides = false;
    for (const EntitySpan& k : kept) {
      if (cand.start < k.end && k.start < cand.end) {
        collides = true;
        break;
      }
    }
    if (!collides) kept.push_back(cand);
  }
  const std::size_t dropped = sentence.spans.size() - kept.size();
  std::sort(kept.begin(), kept.end());
  sentence.spans = std::move(kept);
  return dropped;
}

Corpus mask_types(const Corpus& corpus, const std::set<std::string>& keep) {
  for (const std::string& id : keep) {
    if (!corpus.inventory.contains(id))
      throw ValidationError("mask_types: unknown type id '" + id + "'");
    if (id == TypeInventory::kOId)
      throw ValidationError("mask_types: O cannot be a kept entity type");
  }
  Corpus out;
  out.language = corpus.language;
  out.provenance = corpus.provenance;
  out.inventory = TypeInventory(
      corpus.inventory.verbalization_at(0));
  for (int i = 1; i < corpus.inventory.size(); ++i) {
    const std::string& id = corpus.inventory.id_at(i);
    if (keep.count(id))
      out.inventory.add(id, corpus.inventory.verbalization_at(i));
  }
  out.sentences.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences) {
    Sentence ns;
    ns.tokens = s.tokens;
    for (const EntitySpan& sp : s.spans)
      if (keep.count(sp.type)) ns.spans.push_back(sp);
    out.sentences.push_back(std::move(ns));
  }
  return out;
}

Corpus downsample_to_mention_count(const Corpus& corpus, std::size_t target,
                                   std::uint64_t seed) {
  if (target > corpus.mention_count())
    throw ValidationError("downsample target " + std::to_string(target) +
                          " exceeds available mentions (" +
                          std::to_string(corpus.mention_count()) + ")");
  std::vector<std::size_t> order(corpus.sentences.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  Corpus out;
  out.inventory = corpus.inventory;
  out.language = corpus.language;
  out.provenance = corpus.provenance;
  std::size_t collected = 0;
  for (std::size_t idx : order) {
    if (collected >= target) break;
    out.sentences.push_back(corpus.sentences[idx]);
    collected += corpus.sentences[idx].spans.size();
  }
  return out;
}

std::size_t utf8_length(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

CorpusStats compute_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.sentence_count = corpus.sentences.size();
  stats.mention_count = corpus.mention_count();
  stats.distinct_types = corpus.inventory.size() - 1;
  if (stats.distinct_types > 0) {
    std::vector<double> lens;
    lens.reserve(stats.distinct_types);
    for (int i = 1; i < corpus.inventory.size(); ++i)
      lens.push_back(static_cast<double>(utf8_length(corpus.inventory.verbalization_at(i))));
    const double mean = std::accumulate(lens.begin(), lens.end(), 0.0) / lens.size();
    double var = 0.0;
    for (double l : lens) var += (l - mean) * (l - mean);
    var /= lens.size();  // population variance
    stats.mean_label_length = mean;
    stats.stddev_label_length = std::sqrt(var);
  }
  return stats;
}

namespace {
constexpr const char* kEvalOnlyTag = "[eval-only]";
}

void mark_eval_only(Corpus& corpus) {
  if (!is_eval_only(corpus)) {
    if (!corpus.provenance.empty()) corpus.provenance += " ";
    corpus.provenance += kEvalOnlyTag;
  }
}

bool is_eval_only(const Corpus& corpus) {
  return corpus.provenance.find(kEvalOnlyTag) != std::string::npos;
}

}  // namespace fewner

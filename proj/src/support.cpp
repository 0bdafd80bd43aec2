#include "fewner/support.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "fewner/errors.hpp"
#include "fewner/rng.hpp"

namespace fewner {

namespace {

// Beyond this many candidate sentences the exact-completion search is skipped
// and the greedy result stands.
constexpr std::size_t kExactSearchLimit = 20;

struct Instance {
  std::vector<std::size_t> sentence_index;               // rows of d_fs
  std::vector<std::map<std::string, std::size_t>> hist;  // label histogram per row
  std::vector<std::string> labels;
};

struct Objective {
  std::size_t max_over = std::numeric_limits<std::size_t>::max();
  std::size_t total_over = std::numeric_limits<std::size_t>::max();
  std::size_t n_sentences = std::numeric_limits<std::size_t>::max();

  bool better_than(const Objective& other) const {
    if (max_over != other.max_over) return max_over < other.max_over;
    if (total_over != other.total_over) return total_over < other.total_over;
    return n_sentences < other.n_sentences;
  }
};

Objective evaluate(const std::map<std::string, std::size_t>& counts, std::size_t k,
                   std::size_t n_sentences) {
  Objective obj;
  obj.max_over = 0;
  obj.total_over = 0;
  obj.n_sentences = n_sentences;
  for (const auto& [label, count] : counts) {
    const std::size_t over = count > k ? count - k : 0;
    obj.max_over = std::max(obj.max_over, over);
    obj.total_over += over;
  }
  return obj;
}

// Exhaustive include/exclude search over the (seed-shuffled) candidate rows,
// feasibility counts >= k for every label, minimizing
// (max overshoot, total overshoot, sentence count). First-found optimum under
// the shuffled order makes ties seed-dependent but deterministic.
class ExactSearch {
 public:
  ExactSearch(const Instance& inst, std::size_t k, const std::vector<std::size_t>& order)
      : inst_(inst), k_(k), order_(order) {
    avail_.assign(order_.size() + 1, {});
    for (std::size_t i = order_.size(); i-- > 0;) {
      avail_[i] = avail_[i + 1];
      for (const auto& [label, c] : inst_.hist[order_[i]]) avail_[i][label] += c;
    }
    for (const std::string& l : inst_.labels) counts_[l] = 0;
  }

  bool run() {
    dfs(0, 0);
    return found_;
  }

  Objective best() const { return best_; }
  const std::vector<std::size_t>& best_rows() const { return best_rows_; }

 private:
  void dfs(std::size_t pos, std::size_t n_selected) {
    for (const std::string& l : inst_.labels) {
      const auto it = avail_[pos].find(l);
      const std::size_t reachable = counts_.at(l) + (it == avail_[pos].end() ? 0 : it->second);
      if (reachable < k_) return;  // this label can no longer reach k
    }
    Objective partial = evaluate(counts_, k_, n_selected);
    if (found_ && !partial.better_than(best_)) return;
    if (pos == order_.size()) {
      for (const auto& [label, count] : counts_)
        if (count < k_) return;
      if (!found_ || partial.better_than(best_)) {
        found_ = true;
        best_ = partial;
        best_rows_ = chosen_;
      }
      return;
    }
    const std::size_t row = order_[pos];
    chosen_.push_back(row);
    for (const auto& [label, c] : inst_.hist[row]) counts_[label] += c;
    dfs(pos + 1, n_selected + 1);
    for (const auto& [label, c] : inst_.hist[row]) counts_[label] -= c;
    chosen_.pop_back();
    dfs(pos + 1, n_selected);
  }

  const Instance& inst_;
  std::size_t k_;
  std::vector<std::size_t> order_;
  std::vector<std::map<std::string, std::size_t>> avail_;  // suffix availability
  std::map<std::string, std::size_t> counts_;
  std::vector<std::size_t> chosen_;
  bool found_ = false;
  Objective best_;
  std::vector<std::size_t> best_rows_;
};

}  // namespace

std::size_t SupportSet::max_overshoot() const {
  std::size_t over = 0;
  for (const auto& [label, count] : label_counts)
    if (count > static_cast<std::size_t>(k)) over = std::max(over, count - k);
  return over;
}

std::size_t SupportSet::total_overshoot() const {
  std::size_t over = 0;
  for (const auto& [label, count] : label_counts)
    if (count > static_cast<std::size_t>(k)) over += count - k;
  return over;
}

SupportSet sample_support_set(const Corpus& d_fs, int k, std::uint64_t seed) {
  if (k < 0) throw ValidationError("support set size k must be >= 0");
  d_fs.validate();

  SupportSet out;
  out.k = k;
  out.inventory = d_fs.inventory;
  const std::vector<std::string> labels = d_fs.inventory.non_o_ids();
  for (const std::string& l : labels) out.label_counts[l] = 0;
  if (k == 0 || labels.empty()) return out;

  Instance inst;
  inst.labels = labels;
  std::map<std::string, std::size_t> totals;
  for (const std::string& l : labels) totals[l] = 0;
  for (std::size_t i = 0; i < d_fs.sentences.size(); ++i) {
    const Sentence& s = d_fs.sentences[i];
    if (s.spans.empty()) continue;
    std::map<std::string, std::size_t> hist;
    for (const EntitySpan& sp : s.spans) {
      ++hist[sp.type];
      ++totals[sp.type];
    }
    inst.sentence_index.push_back(i);
    inst.hist.push_back(std::move(hist));
  }
  for (const std::string& l : labels)
    if (totals[l] < static_cast<std::size_t>(k))
      throw ValidationError("label '" + l + "' has only " + std::to_string(totals[l]) +
                            " mentions, fewer than k = " + std::to_string(k));

  // Rarest label first; ties in inventory order (the order of `labels`).
  std::vector<std::string> label_order = labels;
  std::unordered_map<std::string, std::size_t> inv_index;
  for (std::size_t i = 0; i < labels.size(); ++i) inv_index[labels[i]] = i;
  std::stable_sort(label_order.begin(), label_order.end(),
                   [&](const std::string& a, const std::string& b) {
                     if (totals[a] != totals[b]) return totals[a] < totals[b];
                     return inv_index[a] < inv_index[b];
                   });

  Rng rng(seed);
  std::map<std::string, std::size_t> counts;
  for (const std::string& l : labels) counts[l] = 0;
  std::vector<bool> selected(inst.hist.size(), false);
  std::vector<std::size_t> chosen_rows;

  auto add_row = [&](std::size_t row) {
    selected[row] = true;
    chosen_rows.push_back(row);
    for (const auto& [label, c] : inst.hist[row]) counts[label] += c;
  };

  for (const std::string& label : label_order) {
    // That label's candidate rows in seeded-random order.
    std::vector<std::size_t> candidates;
    for (std::size_t row = 0; row < inst.hist.size(); ++row)
      if (inst.hist[row].count(label)) candidates.push_back(row);
    rng.shuffle(candidates);

    std::size_t scan = 0;
    while (counts[label] < static_cast<std::size_t>(k)) {
      std::size_t found = inst.hist.size();
      while (scan < candidates.size()) {
        const std::size_t row = candidates[scan];
        ++scan;
        if (selected[row]) continue;
        bool admissible = true;
        for (const auto& [l, c] : inst.hist[row])
          if (counts[l] + c > static_cast<std::size_t>(k)) {
            admissible = false;
            break;
          }
        if (admissible) {
          found = row;
          break;
        }
      }
      if (found < inst.hist.size()) {
        add_row(found);
        continue;
      }
      // No admissible candidate left: take the overshoot-minimal one.
      std::size_t best_row = inst.hist.size();
      std::size_t best_over = std::numeric_limits<std::size_t>::max();
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const std::size_t row = candidates[c];
        if (selected[row]) continue;
        std::size_t over = 0;
        for (const auto& [l, cnt] : inst.hist[row]) {
          const std::size_t after = counts[l] + cnt;
          if (after > static_cast<std::size_t>(k)) over += after - k;
        }
        if (over < best_over) {
          best_over = over;
          best_row = row;
        }
      }
      if (best_row == inst.hist.size())
        throw RuntimeError("support sampling exhausted candidates for label '" + label +
                           "'");
      add_row(best_row);
    }
  }

  Objective greedy_obj = evaluate(counts, k, chosen_rows.size());
  if (greedy_obj.total_over > 0 && inst.hist.size() <= kExactSearchLimit) {
    std::vector<std::size_t> order(inst.hist.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng search_rng(mix_seed(seed, 0xDF5));
    search_rng.shuffle(order);
    ExactSearch search(inst, k, order);
    if (search.run() && search.best().better_than(greedy_obj)) {
      chosen_rows = search.best_rows();
      for (auto& [label, count] : counts) count = 0;
      for (std::size_t row : chosen_rows)
        for (const auto& [label, c] : inst.hist[row]) counts[label] += c;
    }
  }

  std::sort(chosen_rows.begin(), chosen_rows.end());
  for (std::size_t row : chosen_rows) {
    out.source_indices.push_back(inst.sentence_index[row]);
    out.sentences.push_back(d_fs.sentences[inst.sentence_index[row]]);
  }
  out.label_counts = std::map<std::string, std::size_t>(counts.begin(), counts.end());
  return out;
}

}  // namespace fewner

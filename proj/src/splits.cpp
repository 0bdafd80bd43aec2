#include "fewner/splits.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>

#include "fewner/errors.hpp"
#include "fewner/rng.hpp"

namespace fewner {

SplitMode parse_split_mode(const std::string& name) {
  if (name == "frequency") return SplitMode::kFrequency;
  if (name == "random_half" || name == "random-half") return SplitMode::kRandomHalf;
  if (name == "intra") return SplitMode::kIntra;
  if (name == "inter") return SplitMode::kInter;
  throw ValidationError("unknown split mode '" + name +
                        "' (expected frequency, random_half, intra or inter)");
}

std::string to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::kFrequency: return "frequency";
    case SplitMode::kRandomHalf: return "random_half";
    case SplitMode::kIntra: return "intra";
    case SplitMode::kInter: return "inter";
  }
  return "?";
}

void SplitSpec::validate(const TypeInventory& inventory) const {
  const int n_types = inventory.size() - 1;
  if (n_types < 2)
    throw ValidationError("label split needs at least 2 entity types");
  if (mode == SplitMode::kFrequency) {
    if (n_lit < 1 || n_fs < 1)
      throw ValidationError("frequency split needs n_lit >= 1 and n_fs >= 1");
    if (n_lit + n_fs > n_types)
      throw ValidationError("frequency split: n_lit + n_fs = " +
                            std::to_string(n_lit + n_fs) + " exceeds the " +
                            std::to_string(n_types) + " entity types");
  }
  if (mode == SplitMode::kIntra || mode == SplitMode::kInter) {
    for (const std::string& id : inventory.non_o_ids())
      if (!coarse_map.count(id))
        throw ValidationError("coarse_map is missing fine label '" + id + "'");
  }
}

namespace {

std::unordered_map<std::string, std::size_t> mention_counts(const Corpus& corpus) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& id : corpus.inventory.non_o_ids()) counts[id] = 0;
  for (const Sentence& s : corpus.sentences)
    for (const EntitySpan& sp : s.spans) ++counts[sp.type];
  return counts;
}

// Restores inventory order so split membership is reproducible regardless of
// the set operations above.
std::vector<std::string> in_inventory_order(const TypeInventory& inventory,
                                            const std::set<std::string>& members) {
  std::vector<std::string> out;
  for (const std::string& id : inventory.non_o_ids())
    if (members.count(id)) out.push_back(id);
  return out;
}

}  // namespace

LabelSplit split_label_sets(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate(corpus.inventory);
  const std::vector<std::string> labels = corpus.inventory.non_o_ids();
  LabelSplit split;

  switch (spec.mode) {
    case SplitMode::kFrequency: {
      const auto counts = mention_counts(corpus);
      // One ranking, most frequent first; ties resolved by inventory order.
      std::vector<std::string> ranked = labels;
      std::unordered_map<std::string, int> inv_index;
      for (std::size_t i = 0; i < labels.size(); ++i)
        inv_index[labels[i]] = static_cast<int>(i);
      std::sort(ranked.begin(), ranked.end(),
                [&](const std::string& a, const std::string& b) {
                  const std::size_t ca = counts.at(a), cb = counts.at(b);
                  if (ca != cb) return ca > cb;
                  return inv_index.at(a) < inv_index.at(b);
                });
      std::set<std::string> lit(ranked.begin(), ranked.begin() + spec.n_lit);
      std::set<std::string> fs(ranked.end() - spec.n_fs, ranked.end());
      split.lit = in_inventory_order(corpus.inventory, lit);
      split.fs = in_inventory_order(corpus.inventory, fs);
      break;
    }
    case SplitMode::kRandomHalf: {
      std::vector<std::string> shuffled = labels;
      Rng rng(spec.seed);
      rng.shuffle(shuffled);
      const std::size_t n_lit = (shuffled.size() + 1) / 2;
      std::set<std::string> lit(shuffled.begin(), shuffled.begin() + n_lit);
      std::set<std::string> fs(shuffled.begin() + n_lit, shuffled.end());
      split.lit = in_inventory_order(corpus.inventory, lit);
      split.fs = in_inventory_order(corpus.inventory, fs);
      break;
    }
    case SplitMode::kIntra: {
      std::set<std::string> coarse_set;
      for (const std::string& id : labels) coarse_set.insert(spec.coarse_map.at(id));
      std::vector<std::string> coarse(coarse_set.begin(), coarse_set.end());
      Rng rng(spec.seed);
      rng.shuffle(coarse);
      const std::size_t n_lit = (coarse.size() + 1) / 2;
      std::set<std::string> lit_coarse(coarse.begin(), coarse.begin() + n_lit);
      std::set<std::string> lit, fs;
      for (const std::string& id : labels)
        (lit_coarse.count(spec.coarse_map.at(id)) ? lit : fs).insert(id);
      split.lit = in_inventory_order(corpus.inventory, lit);
      split.fs = in_inventory_order(corpus.inventory, fs);
      break;
    }
    case SplitMode::kInter: {
      // Fine labels grouped by coarse class, classes processed in sorted
      // order so the stream consumption is reproducible.
      std::map<std::string, std::vector<std::string>> by_coarse;
      for (const std::string& id : labels) by_coarse[spec.coarse_map.at(id)].push_back(id);
      Rng rng(spec.seed);
      std::set<std::string> lit, fs;
      for (auto& [coarse, fines] : by_coarse) {
        rng.shuffle(fines);
        const std::size_t n_lit = (fines.size() + 1) / 2;
        for (std::size_t i = 0; i < fines.size(); ++i)
          (i < n_lit ? lit : fs).insert(fines[i]);
      }
      split.lit = in_inventory_order(corpus.inventory, lit);
      split.fs = in_inventory_order(corpus.inventory, fs);
      break;
    }
  }
  return split;
}

Corpus mask_to_side(const Corpus& corpus, const std::vector<std::string>& side) {
  return mask_types(corpus, {side.begin(), side.end()});
}

SplitResult split_labels(const Corpus& corpus, const SplitSpec& spec) {
  LabelSplit sets = split_label_sets(corpus, spec);
  SplitResult result;
  result.l_lit = sets.lit;
  result.l_fs = sets.fs;
  result.d_lit = mask_to_side(corpus, sets.lit);
  result.d_fs = mask_to_side(corpus, sets.fs);
  return result;
}

std::string normalize_verbalization(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

Corpus remove_overlap(const Corpus& litset, const std::vector<std::string>& forbidden) {
  std::set<std::string> forbidden_normed;
  for (const std::string& f : forbidden) forbidden_normed.insert(normalize_verbalization(f));
  std::set<std::string> keep;
  for (const std::string& id : litset.inventory.non_o_ids())
    if (!forbidden_normed.count(normalize_verbalization(litset.inventory.verbalization_of(id))))
      keep.insert(id);
  return mask_types(litset, keep);
}

Corpus subset_lit_labels(const Corpus& d_lit, int n_labels, std::size_t annotation_budget,
                         std::uint64_t seed) {
  const std::vector<std::string> labels = d_lit.inventory.non_o_ids();
  if (n_labels < 1 || n_labels > static_cast<int>(labels.size()))
    throw ValidationError("subset_lit_labels: n_labels " + std::to_string(n_labels) +
                          " outside [1, " + std::to_string(labels.size()) + "]");
  Rng label_rng(mix_seed(seed, 0));
  std::vector<std::size_t> picks = label_rng.sample_indices(labels.size(), n_labels);
  std::set<std::string> keep;
  for (std::size_t i : picks) keep.insert(labels[i]);
  Corpus masked = mask_types(d_lit, keep);
  if (masked.mention_count() < annotation_budget)
    throw ValidationError("annotation budget " + std::to_string(annotation_budget) +
                          " unreachable: the " + std::to_string(n_labels) +
                          " chosen labels cover only " +
                          std::to_string(masked.mention_count()) + " mentions");
  return downsample_to_mention_count(masked, annotation_budget, mix_seed(seed, 1));
}

}  // namespace fewner

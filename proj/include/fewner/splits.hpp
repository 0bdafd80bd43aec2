#ifndef FEWNER_SPLITS_HPP
#define FEWNER_SPLITS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fewner/corpus.hpp"

namespace fewner {

// How the label inventory is bipartitioned into the label-interpretation
// side L_lit and the few-shot side L_fs.
enum class SplitMode {
  kFrequency,   // n_lit most frequent vs n_fs least frequent, by mention count
  kRandomHalf,  // seeded random halves (odd inventory: extra label to L_lit)
  kIntra,       // whole coarse classes per side
  kInter        // per-coarse-class halves of the fine labels
};

struct SplitSpec {
  SplitMode mode = SplitMode::kRandomHalf;
  std::uint64_t seed = 0;
  int n_lit = 0;  // FREQUENCY only
  int n_fs = 0;   // FREQUENCY only
  std::map<std::string, std::string> coarse_map;  // INTRA/INTER: fine -> coarse

  void validate(const TypeInventory& inventory) const;
};

SplitMode parse_split_mode(const std::string& name);
std::string to_string(SplitMode mode);

struct LabelSplit {
  std::vector<std::string> lit;  // inventory order
  std::vector<std::string> fs;
};

// The label bipartition only. Frequencies are measured on `corpus` itself;
// callers decide which partition (train, or train plus test) to pass.
LabelSplit split_label_sets(const Corpus& corpus, const SplitSpec& spec);

struct SplitResult {
  Corpus d_lit;
  Corpus d_fs;
  std::vector<std::string> l_lit;
  std::vector<std::string> l_fs;
};

// The bipartition plus the masked corpora: D_lit keeps only L_lit spans,
// D_fs only L_fs spans.
SplitResult split_labels(const Corpus& corpus, const SplitSpec& spec);

// Same bipartition applied to a separate corpus (e.g. the test partition).
Corpus mask_to_side(const Corpus& corpus, const std::vector<std::string>& side);

// Masks to O every span whose verbalization matches a forbidden one after
// lowercasing, trimming and collapsing runs of whitespace.
Corpus remove_overlap(const Corpus& litset, const std::vector<std::string>& forbidden);

// The normalization used by remove_overlap, exposed for tests.
std::string normalize_verbalization(const std::string& s);

// Seeded choice of n_labels entity types, masking away the rest, then
// sentence-level downsampling until the mention count first reaches the
// annotation budget.
Corpus subset_lit_labels(const Corpus& d_lit, int n_labels, std::size_t annotation_budget,
                         std::uint64_t seed);

}  // namespace fewner

#endif  // FEWNER_SPLITS_HPP

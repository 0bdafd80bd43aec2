#ifndef FEWNER_SUPPORT_HPP
#define FEWNER_SUPPORT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fewner/corpus.hpp"

namespace fewner {

// A k-shot fine-tuning sample: each few-shot label ideally appears exactly
// k times. When sentences bundle several entities, exact k can be
// infeasible; label_counts then records the actual (overshot) counts.
struct SupportSet {
  std::vector<Sentence> sentences;
  int k = 0;
  std::map<std::string, std::size_t> label_counts;
  TypeInventory inventory;                  // the few-shot side, O included
  std::vector<std::size_t> source_indices;  // rows of d_fs that were chosen

  std::size_t max_overshoot() const;
  std::size_t total_overshoot() const;
};

// Greedy seeded sampling, rarest label first: admit candidate sentences that
// keep every label's count at or below k, fall back to the overshoot-minimal
// sentence when a label cannot reach k otherwise. On corpora small enough to
// search exhaustively, a non-exact greedy result is replaced by the best
// reachable selection (fewest overshoots, seed-shuffled tie-break).
SupportSet sample_support_set(const Corpus& d_fs, int k, std::uint64_t seed);

}  // namespace fewner

#endif  // FEWNER_SUPPORT_HPP

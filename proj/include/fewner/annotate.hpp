#ifndef FEWNER_ANNOTATE_HPP
#define FEWNER_ANNOTATE_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "fewner/corpus.hpp"
#include "fewner/kb.hpp"
#include "fewner/sampling.hpp"

namespace fewner {

struct AnnotateReport {
  std::size_t mentions_total = 0;
  std::size_t mentions_annotated = 0;
  std::size_t dropped_unresolvable = 0;  // qid not in the kb map
  std::size_t dropped_collisions = 0;    // span overlapped an earlier mention
};

// Turns linked mentions into typed spans. Each mention's verbalization is
// drawn from its own random stream, keyed by the mention's position in
// `mentions` (or by its qid when config.per_entity is set), so results do not
// depend on processing order. Identical verbalization strings share one type
// id; the inventory is ordered by first occurrence in corpus order. On span
// collisions the mention earlier in `mentions` wins.
Corpus annotate_corpus(const std::vector<Sentence>& sentences,
                       const std::vector<LinkedMention>& mentions,
                       const std::unordered_map<std::string, KBEntityRecord>& kb,
                       const SamplingConfig& config, AnnotateReport* report = nullptr);

}  // namespace fewner

#endif  // FEWNER_ANNOTATE_HPP

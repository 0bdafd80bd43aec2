#include "fewner/annotate.hpp"

#include <algorithm>

#include "fewner/errors.hpp"

namespace fewner {

Corpus annotate_corpus(const std::vector<Sentence>& sentences,
                       const std::vector<LinkedMention>& mentions,
                       const std::unordered_map<std::string, KBEntityRecord>& kb,
                       const SamplingConfig& config, AnnotateReport* report) {
  config.validate();
  for (std::size_t i = 0; i < sentences.size(); ++i)
    if (!sentences[i].spans.empty())
      throw ValidationError("sentence " + std::to_string(i) +
                            " already carries spans; annotation input must be span-less");

  AnnotateReport local;
  AnnotateReport& rep = report ? *report : local;
  rep = AnnotateReport{};
  rep.mentions_total = mentions.size();

  // Verbalizations first, each from its own stream; then span assembly in
  // mention order so collisions resolve to the earlier mention.
  struct Annotated {
    std::size_t ordinal;
    EntitySpan span;
  };
  std::vector<std::vector<Annotated>> per_sentence(sentences.size());

  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const LinkedMention& m = mentions[i];
    if (m.sentence_index < 0 || m.sentence_index >= static_cast<int>(sentences.size()))
      throw ValidationError("mention " + std::to_string(i) + ": sentence_index " +
                            std::to_string(m.sentence_index) + " out of range");
    const Sentence& s = sentences[m.sentence_index];
    if (m.start < 0 || m.end <= m.start || m.end > static_cast<int>(s.tokens.size()))
      throw ValidationError("mention " + std::to_string(i) + ": span [" +
                            std::to_string(m.start) + "," + std::to_string(m.end) +
                            ") invalid for sentence " + std::to_string(m.sentence_index));
    auto it = kb.find(m.qid);
    if (it == kb.end()) {
      ++rep.dropped_unresolvable;
      continue;
    }
    Rng stream = config.per_entity ? Rng(mix_seed(config.seed, fnv1a64(m.qid)))
                                   : make_stream(config.seed, i);
    const std::string verbalization = sample_type_verbalization(it->second, config, stream);
    per_sentence[m.sentence_index].push_back({i, {m.start, m.end, verbalization}});
  }

  Corpus corpus;
  corpus.sentences.reserve(sentences.size());
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    Sentence out;
    out.tokens = sentences[si].tokens;
    std::vector<Annotated>& cands = per_sentence[si];
    std::sort(cands.begin(), cands.end(),
              [](const Annotated& a, const Annotated& b) { return a.ordinal < b.ordinal; });
    std::vector<EntitySpan> kept;
    for (const Annotated& cand : cands) {
      bool collides = false;
      for (const EntitySpan& k : kept)
        if (cand.span.start < k.end && k.start < cand.span.end) {
          collides = true;
          break;
        }
      if (collides) {
        ++rep.dropped_collisions;
        continue;
      }
      kept.push_back(cand.span);
      ++rep.mentions_annotated;
    }
    std::sort(kept.begin(), kept.end());
    out.spans = std::move(kept);
    for (const EntitySpan& sp : out.spans)
      if (!corpus.inventory.contains(sp.type)) corpus.inventory.add(sp.type, sp.type);
    corpus.sentences.push_back(std::move(out));
  }
  corpus.provenance = "annotated:" + to_string(config.mode);
  corpus.validate();
  return corpus;
}

}  // namespace fewner

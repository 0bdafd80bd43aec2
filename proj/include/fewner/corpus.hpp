#ifndef FEWNER_CORPUS_HPP
#define FEWNER_CORPUS_HPP

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace fewner {

// One typed entity mention: token indices [start, end) into the sentence.
struct EntitySpan {
  int start = 0;
  int end = 0;
  std::string type;

  friend bool operator==(const EntitySpan& a, const EntitySpan& b) {
    return a.start == b.start && a.end == b.end && a.type == b.type;
  }
  friend bool operator<(const EntitySpan& a, const EntitySpan& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end < b.end;
    return a.type < b.type;
  }
};

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<EntitySpan> spans;  // kept sorted by start; non-overlapping

  friend bool operator==(const Sentence& a, const Sentence& b) {
    return a.tokens == b.tokens && a.spans == b.spans;
  }
};

// Ordered mapping from type ids to their natural-language verbalizations.
// The non-entity type "O" is always present at index 0.
class TypeInventory {
 public:
  static constexpr const char* kOId = "O";
  static constexpr const char* kDefaultOVerbalization = "none, not an entity";

  TypeInventory();
  explicit TypeInventory(std::string o_verbalization);

  // Registers a type. Re-adding with the identical verbalization is a no-op;
  // re-adding with a different one is an error. Returns the type's index.
  int add(const std::string& id, const std::string& verbalization);

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  int index_of(const std::string& id) const;  // -1 when absent
  const std::string& id_at(int index) const { return ids_[index]; }
  const std::string& verbalization_at(int index) const { return verbs_[index]; }
  const std::string& verbalization_of(const std::string& id) const;
  void set_verbalization(const std::string& id, const std::string& verbalization);

  int size() const { return static_cast<int>(ids_.size()); }  // includes O
  const std::vector<std::string>& ids() const { return ids_; }
  std::vector<std::string> non_o_ids() const;

  std::uint64_t content_hash() const;

  friend bool operator==(const TypeInventory& a, const TypeInventory& b) {
    return a.ids_ == b.ids_ && a.verbs_ == b.verbs_;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> verbs_;
  std::unordered_map<std::string, int> index_;
};

struct Corpus {
  std::vector<Sentence> sentences;
  TypeInventory inventory;
  std::string language = "und";   // BCP-47
  std::string provenance;

  std::size_t mention_count() const;

  // Checks all structural invariants; throws ValidationError on violation.
  void validate() const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.sentences == b.sentences && a.inventory == b.inventory &&
           a.language == b.language && a.provenance == b.provenance;
  }
};

struct CorpusStats {
  int distinct_types = 0;          // excluding O
  std::size_t mention_count = 0;
  std::size_t sentence_count = 0;
  double mean_label_length = 0.0;  // characters, excluding O
  double stddev_label_length = 0.0;
};

// How to resolve overlapping input spans at ingest.
enum class OverlapPolicy {
  kError,             // reject the corpus
  kRepairKeepLongest  // keep the longest span, ties broken leftmost
};

// Sorts spans and applies the overlap policy. Returns the number of spans
// dropped by repair.
std::size_t normalize_spans(Sentence& sentence, OverlapPolicy policy);

// Deletes every span whose type is not in `keep`; the affected tokens simply
// revert to O. The inventory is restricted to keep + {O}; sentences and token
// text are untouched. `keep` must be a subset of the inventory.
Corpus mask_types(const Corpus& corpus, const std::set<std::string>& keep);

// Seeded sentence-level downsampling: shuffles sentences and takes the
// shortest prefix whose cumulative mention count reaches `target`.
Corpus downsample_to_mention_count(const Corpus& corpus, std::size_t target,
                                   std::uint64_t seed);

CorpusStats compute_stats(const Corpus& corpus);

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(const std::string& s);

// Tagging for corpora that must never reach a training phase.
void mark_eval_only(Corpus& corpus);
bool is_eval_only(const Corpus& corpus);

}  // namespace fewner

#endif  // FEWNER_CORPUS_HPP

#ifndef FEWNER_KB_HPP
#define FEWNER_KB_HPP

#include <string>
#include <unordered_map>
#include <vector>

namespace fewner {

// One knowledge-base entity: its class labels from both relations plus a
// free-text description. Either some labels or a description must remain
// for the record to be usable as an annotation source.
struct KBEntityRecord {
  std::string qid;
  std::vector<std::string> instance_of;
  std::vector<std::string> subclass_of;
  std::string description;  // empty = absent

  bool has_source() const {
    return !instance_of.empty() || !subclass_of.empty() || !description.empty();
  }
  // Distinct labels, instance_of first, in first-occurrence order.
  std::vector<std::string> tag_pool() const;
};

// An entity-linking annotation: token span [start, end) in the sentence at
// sentence_index, linked to a knowledge-base entity.
struct LinkedMention {
  int sentence_index = 0;
  int start = 0;
  int end = 0;
  std::string qid;
};

// Removes meta-entities of the knowledge base itself (navigation, structure
// and maintenance pages) from the label sets.
struct MetaFilter {
  std::vector<std::string> denylist = {"wikimedia", "disambiguation page",
                                       "list article", "template", "category"};
  bool matches(const std::string& label) const;  // case-insensitive substring
};

// Reads {qid, instance_of, subclass_of, description} records, one JSON object
// per line. Duplicate qids: last record wins. Records with no labels and no
// description are rejected. Both cases are reported via `warnings` (or stderr).
std::unordered_map<std::string, KBEntityRecord> load_kb_records(
    const std::string& path, std::vector<std::string>* warnings = nullptr);
std::unordered_map<std::string, KBEntityRecord> load_kb_records(
    std::istream& in, std::vector<std::string>* warnings = nullptr,
    const std::string& source_name = "<stream>");

// Drops denylisted labels; the description is never touched.
KBEntityRecord filter_meta_types(const KBEntityRecord& record, const MetaFilter& filter);

// Filters every record and drops those left without any source.
// Returns the number of dropped records.
std::size_t apply_meta_filter(std::unordered_map<std::string, KBEntityRecord>& kb,
                              const MetaFilter& filter,
                              std::vector<std::string>* warnings = nullptr);

// Reads {sentence_index, start, end, qid} records, one JSON object per line.
std::vector<LinkedMention> load_linked_mentions(const std::string& path);
std::vector<LinkedMention> load_linked_mentions(std::istream& in,
                                                const std::string& source_name = "<stream>");

}  // namespace fewner

#endif  // FEWNER_KB_HPP

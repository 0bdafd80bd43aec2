#ifndef FEWNER_COLUMN_IO_HPP
#define FEWNER_COLUMN_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "fewner/corpus.hpp"

namespace fewner {

// Two-column corpora: one "token tag" pair per line, blank line between
// sentences, UTF-8, LF endings.
//
// BIO tags: O, B-TYPE, I-TYPE.  IO tags: O, I-TYPE. IO cannot represent
// adjacent same-type mentions; they merge into one span on read.
enum class TagScheme { kBIO, kIO };

// What to do with an I- tag that has no matching B- in BIO mode.
enum class TagRepair {
  kRepairToB,  // treat it as B-, note a warning (default)
  kError
};

struct ColumnReadOptions {
  TagScheme scheme = TagScheme::kBIO;
  TagRepair repair = TagRepair::kRepairToB;
};

// Warnings land in `warnings` when given, otherwise on stderr.
Corpus read_column_corpus(const std::string& path, const ColumnReadOptions& options = {},
                          std::vector<std::string>* warnings = nullptr);
Corpus read_column_corpus(std::istream& in, const ColumnReadOptions& options = {},
                          std::vector<std::string>* warnings = nullptr,
                          const std::string& source_name = "<stream>");

void write_column_corpus(const Corpus& corpus, const std::string& path,
                         TagScheme scheme = TagScheme::kBIO);
void write_column_corpus(const Corpus& corpus, std::ostream& out,
                         TagScheme scheme = TagScheme::kBIO);

// The tag sequence for one sentence under a scheme (exposed for decoding
// and tests).
std::vector<std::string> sentence_tags(const Sentence& sentence, TagScheme scheme);

}  // namespace fewner

#endif  // FEWNER_COLUMN_IO_HPP

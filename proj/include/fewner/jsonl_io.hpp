#ifndef FEWNER_JSONL_IO_HPP
#define FEWNER_JSONL_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "fewner/corpus.hpp"

namespace fewner {

// One sentence object per line: {"tokens": [...], "spans": [{"start","end","type"}]}.
// An optional first line {"format": "fewner-corpus", "language", "provenance",
// "inventory": [{"id","verbalization"}, ...]} preserves metadata that the
// per-sentence records cannot carry; the writer always emits it.
Corpus read_corpus_jsonl(const std::string& path,
                         OverlapPolicy overlap = OverlapPolicy::kError,
                         std::vector<std::string>* warnings = nullptr);
Corpus read_corpus_jsonl(std::istream& in,
                         OverlapPolicy overlap = OverlapPolicy::kError,
                         std::vector<std::string>* warnings = nullptr,
                         const std::string& source_name = "<stream>");

void write_corpus_jsonl(const Corpus& corpus, const std::string& path);
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);

// Span-less sentences, one {"tokens": [...]} per line.
std::vector<Sentence> read_sentences_jsonl(const std::string& path);
std::vector<Sentence> read_sentences_jsonl(std::istream& in,
                                           const std::string& source_name = "<stream>");

}  // namespace fewner

#endif  // FEWNER_JSONL_IO_HPP

#include "fewner/column_io.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "fewner/errors.hpp"

namespace fewner {

namespace {

void emit_warning(std::vector<std::string>* warnings, std::string message) {
  if (warnings)
    warnings->push_back(std::move(message));
  else
    std::cerr << "warning: " << message << "\n";
}

struct ParsedTag {
  enum Kind { kO, kBegin, kInside } kind;
  std::string type;
};

ParsedTag parse_tag(const std::string& tag, TagScheme scheme,
                    const std::string& source, std::size_t line_no) {
  if (tag == "O") return {ParsedTag::kO, ""};
  if (tag.size() > 2 && tag[1] == '-') {
    if (tag[0] == 'B' && scheme == TagScheme::kBIO)
      return {ParsedTag::kBegin, tag.substr(2)};
    if (tag[0] == 'I') return {ParsedTag::kInside, tag.substr(2)};
  }
  throw ParseError(source + ": malformed tag '" + tag + "'", line_no);
}

void flush_sentence(std::vector<Sentence>& sentences, Sentence& current,
                    int& open_start, std::string& open_type) {
  if (open_start >= 0) {
    current.spans.push_back(
        {open_start, static_cast<int>(current.tokens.size()), open_type});
    open_start = -1;
    open_type.clear();
  }
  if (!current.tokens.empty()) {
    sentences.push_back(std::move(current));
    current = Sentence{};
  }
}

}  // namespace

Corpus read_column_corpus(const std::string& path, const ColumnReadOptions& options,
                          std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open '" + path + "' for reading");
  return read_column_corpus(in, options, warnings, path);
}

Corpus read_column_corpus(std::istream& in, const ColumnReadOptions& options,
                          std::vector<std::string>* warnings,
                          const std::string& source_name) {
  Corpus corpus;
  Sentence current;
  int open_start = -1;
  std::string open_type;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush_sentence(corpus.sentences, current, open_start, open_type);
      continue;
    }
    std::istringstream fields(line);
    std::string token, tag, extra;
    if (!(fields >> token >> tag) || (fields >> extra))
      throw ParseError(source_name + ": expected exactly two columns", line_no);

    const ParsedTag parsed = parse_tag(tag, options.scheme, source_name, line_no);
    const int position = static_cast<int>(current.tokens.size());

    switch (parsed.kind) {
      case ParsedTag::kO:
        if (open_start >= 0) {
          current.spans.push_back({open_start, position, open_type});
          open_start = -1;
        }
        break;
      case ParsedTag::kBegin:
        if (open_start >= 0) current.spans.push_back({open_start, position, open_type});
        open_start = position;
        open_type = parsed.type;
        break;
      case ParsedTag::kInside:
        if (options.scheme == TagScheme::kIO) {
          // IO: a run of the same type continues; a type change starts anew.
          if (open_start < 0 || open_type != parsed.type) {
            if (open_start >= 0) current.spans.push_back({open_start, position, open_type});
            open_start = position;
            open_type = parsed.type;
          }
        } else if (open_start >= 0 && open_type == parsed.type) {
          // continues the open span
        } else {
          if (options.repair == TagRepair::kError)
            throw ParseError(source_name + ": I-" + parsed.type + " without matching B-",
                             line_no);
          emit_warning(warnings, source_name + " line " + std::to_string(line_no) +
                                     ": I-" + parsed.type +
                                     " without matching B-, repaired to B-");
          if (open_start >= 0) current.spans.push_back({open_start, position, open_type});
          open_start = position;
          open_type = parsed.type;
        }
        break;
    }
    current.tokens.push_back(token);
  }
  flush_sentence(corpus.sentences, current, open_start, open_type);

  for (const Sentence& s : corpus.sentences)
    for (const EntitySpan& sp : s.spans)
      corpus.inventory.add(sp.type, sp.type);
  corpus.provenance = "column:" + source_name;
  corpus.validate();
  return corpus;
}

std::vector<std::string> sentence_tags(const Sentence& sentence, TagScheme scheme) {
  std::vector<std::string> tags(sentence.tokens.size(), "O");
  for (const EntitySpan& sp : sentence.spans) {
    for (int t = sp.start; t < sp.end; ++t) {
      const bool first = (t == sp.start);
      if (scheme == TagScheme::kBIO && first)
        tags[t] = "B-" + sp.type;
      else
        tags[t] = "I-" + sp.type;
    }
  }
  return tags;
}

void write_column_corpus(const Corpus& corpus, const std::string& path, TagScheme scheme) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  write_column_corpus(corpus, out, scheme);
  if (!out) throw RuntimeError("write to '" + path + "' failed");
}

void write_column_corpus(const Corpus& corpus, std::ostream& out, TagScheme scheme) {
  corpus.validate();
  auto has_whitespace = [](const std::string& s) {
    return s.find_first_of(" \t\n\r") != std::string::npos;
  };
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const Sentence& s = corpus.sentences[i];
    const std::vector<std::string> tags = sentence_tags(s, scheme);
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      if (has_whitespace(s.tokens[t]) || s.tokens[t].empty())
        throw ValidationError("token not representable in column format: '" +
                              s.tokens[t] + "'");
      if (has_whitespace(tags[t]))
        throw ValidationError("type id not representable in column format: '" +
                              tags[t] + "'; use the JSONL format");
      out << s.tokens[t] << ' ' << tags[t] << '\n';
    }
    if (i + 1 < corpus.sentences.size()) out << '\n';
  }
}

}  // namespace fewner

#include "fewner/jsonl_io.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "fewner/errors.hpp"

namespace fewner {

namespace {

using nlohmann::json;

json parse_line(const std::string& line, const std::string& source, std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded())
    throw ParseError(source + ": malformed JSON", line_no);
  return j;
}

std::vector<std::string> tokens_field(const json& j, const std::string& source,
                                      std::size_t line_no) {
  if (!j.contains("tokens") || !j["tokens"].is_array())
    throw ParseError(source + ": missing 'tokens' array", line_no);
  std::vector<std::string> tokens;
  for (const json& t : j["tokens"]) {
    if (!t.is_string())
      throw ParseError(source + ": non-string token", line_no);
    tokens.push_back(t.get<std::string>());
  }
  return tokens;
}

}  // namespace

Corpus read_corpus_jsonl(const std::string& path, OverlapPolicy overlap,
                         std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open '" + path + "' for reading");
  return read_corpus_jsonl(in, overlap, warnings, path);
}

Corpus read_corpus_jsonl(std::istream& in, OverlapPolicy overlap,
                         std::vector<std::string>* warnings,
                         const std::string& source_name) {
  Corpus corpus;
  corpus.provenance = "jsonl:" + source_name;
  bool saw_header = false;
  std::size_t dropped_total = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = parse_line(line, source_name, line_no);
    if (!j.is_object())
      throw ParseError(source_name + ": expected a JSON object", line_no);

    if (line_no == 1 && j.value("format", "") == "fewner-corpus") {
      saw_header = true;
      if (j.contains("language")) corpus.language = j["language"].get<std::string>();
      if (j.contains("provenance")) corpus.provenance = j["provenance"].get<std::string>();
      if (j.contains("inventory"))
        for (const json& entry : j["inventory"]) {
          const std::string id = entry.at("id").get<std::string>();
          if (id == TypeInventory::kOId) {
            if (entry.contains("verbalization"))
              corpus.inventory.set_verbalization(id, entry["verbalization"].get<std::string>());
            continue;
          }
          corpus.inventory.add(id, entry.value("verbalization", id));
        }
      continue;
    }

    Sentence s;
    s.tokens = tokens_field(j, source_name, line_no);
    if (j.contains("spans")) {
      if (!j["spans"].is_array())
        throw ParseError(source_name + ": 'spans' must be an array", line_no);
      for (const json& sp : j["spans"]) {
        EntitySpan span;
        try {
          span.start = sp.at("start").get<int>();
          span.end = sp.at("end").get<int>();
          span.type = sp.at("type").get<std::string>();
        } catch (const json::exception&) {
          throw ParseError(source_name + ": span needs integer start/end and string type",
                           line_no);
        }
        if (span.start < 0 || span.end > static_cast<int>(s.tokens.size()) ||
            span.start >= span.end)
          throw ParseError(source_name + ": span [" + std::to_string(span.start) + "," +
                               std::to_string(span.end) + ") out of range",
                           line_no);
        s.spans.push_back(std::move(span));
      }
    }
    std::size_t dropped = 0;
    try {
      dropped = normalize_spans(s, overlap);
    } catch (const ValidationError& e) {
      throw ParseError(source_name + ": " + e.what(), line_no);
    }
    dropped_total += dropped;
    for (const EntitySpan& sp : s.spans)
      if (!corpus.inventory.contains(sp.type)) corpus.inventory.add(sp.type, sp.type);
    corpus.sentences.push_back(std::move(s));
  }

  if (dropped_total > 0 && warnings)
    warnings->push_back(source_name + ": dropped " + std::to_string(dropped_total) +
                        " overlapping span(s), kept longest");
  else if (dropped_total > 0)
    std::cerr << "warning: " << source_name << ": dropped " << dropped_total
              << " overlapping span(s), kept longest\n";
  (void)saw_header;
  corpus.validate();
  return corpus;
}

void write_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  write_corpus_jsonl(corpus, out);
  if (!out) throw RuntimeError("write to '" + path + "' failed");
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  corpus.validate();
  json header = {{"format", "fewner-corpus"},
                 {"language", corpus.language},
                 {"provenance", corpus.provenance}};
  json inventory = json::array();
  for (const std::string& id : corpus.inventory.ids())
    inventory.push_back({{"id", id}, {"verbalization", corpus.inventory.verbalization_of(id)}});
  header["inventory"] = inventory;
  out << header.dump() << '\n';

  for (const Sentence& s : corpus.sentences) {
    json j = {{"tokens", s.tokens}};
    json spans = json::array();
    for (const EntitySpan& sp : s.spans)
      spans.push_back({{"start", sp.start}, {"end", sp.end}, {"type", sp.type}});
    j["spans"] = spans;
    out << j.dump() << '\n';
  }
}

std::vector<Sentence> read_sentences_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open '" + path + "' for reading");
  return read_sentences_jsonl(in, path);
}

std::vector<Sentence> read_sentences_jsonl(std::istream& in, const std::string& source_name) {
  std::vector<Sentence> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = parse_line(line, source_name, line_no);
    if (line_no == 1 && j.is_object() && j.value("format", "") == "fewner-corpus") continue;
    Sentence s;
    s.tokens = tokens_field(j, source_name, line_no);
    sentences.push_back(std::move(s));
  }
  return sentences;
}

}  // namespace fewner

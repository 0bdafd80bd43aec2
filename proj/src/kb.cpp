#include "fewner/kb.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "fewner/errors.hpp"

namespace fewner {

namespace {

using nlohmann::json;

void emit_warning(std::vector<std::string>* warnings, std::string message) {
  if (warnings)
    warnings->push_back(std::move(message));
  else
    std::cerr << "warning: " << message << "\n";
}

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> string_array(const json& j, const char* key,
                                      const std::string& source, std::size_t line_no) {
  std::vector<std::string> out;
  if (!j.contains(key) || j[key].is_null()) return out;
  if (!j[key].is_array())
    throw ParseError(source + ": '" + key + "' must be an array", line_no);
  for (const json& v : j[key]) {
    if (!v.is_string())
      throw ParseError(source + ": '" + key + "' must contain strings", line_no);
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::vector<std::string> KBEntityRecord::tag_pool() const {
  std::vector<std::string> pool;
  std::set<std::string> seen;
  for (const auto* source : {&instance_of, &subclass_of})
    for (const std::string& label : *source)
      if (seen.insert(label).second) pool.push_back(label);
  return pool;
}

bool MetaFilter::matches(const std::string& label) const {
  const std::string low = lowercase(label);
  for (const std::string& entry : denylist)
    if (low.find(lowercase(entry)) != std::string::npos) return true;
  return false;
}

std::unordered_map<std::string, KBEntityRecord> load_kb_records(
    const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open '" + path + "' for reading");
  return load_kb_records(in, warnings, path);
}

std::unordered_map<std::string, KBEntityRecord> load_kb_records(
    std::istream& in, std::vector<std::string>* warnings, const std::string& source_name) {
  std::unordered_map<std::string, KBEntityRecord> kb;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw ParseError(source_name + ": malformed JSON record", line_no);

    KBEntityRecord rec;
    if (!j.contains("qid") || !j["qid"].is_string() || j["qid"].get<std::string>().empty())
      throw ParseError(source_name + ": record needs a non-empty 'qid'", line_no);
    rec.qid = j["qid"].get<std::string>();
    rec.instance_of = string_array(j, "instance_of", source_name, line_no);
    rec.subclass_of = string_array(j, "subclass_of", source_name, line_no);
    if (j.contains("description") && j["description"].is_string())
      rec.description = j["description"].get<std::string>();

    if (!rec.has_source()) {
      emit_warning(warnings, source_name + " line " + std::to_string(line_no) +
                                 ": record " + rec.qid +
                                 " has no labels and no description, rejected");
      continue;
    }
    if (kb.count(rec.qid))
      emit_warning(warnings, source_name + " line " + std::to_string(line_no) +
                                 ": duplicate qid " + rec.qid + ", keeping the later record");
    kb[rec.qid] = std::move(rec);
  }
  return kb;
}

KBEntityRecord filter_meta_types(const KBEntityRecord& record, const MetaFilter& filter) {
  if (filter.denylist.empty())
    throw ValidationError("meta filter needs a non-empty denylist");
  KBEntityRecord out;
  out.qid = record.qid;
  out.description = record.description;
  for (const std::string& label : record.instance_of)
    if (!filter.matches(label)) out.instance_of.push_back(label);
  for (const std::string& label : record.subclass_of)
    if (!filter.matches(label)) out.subclass_of.push_back(label);
  return out;
}

std::size_t apply_meta_filter(std::unordered_map<std::string, KBEntityRecord>& kb,
                              const MetaFilter& filter,
                              std::vector<std::string>* warnings) {
  std::size_t dropped = 0;
  for (auto it = kb.begin(); it != kb.end();) {
    KBEntityRecord filtered = filter_meta_types(it->second, filter);
    if (!filtered.has_source()) {
      emit_warning(warnings, "record " + it->first +
                                 " lost every label to the meta filter and has no "
                                 "description, dropped");
      it = kb.erase(it);
      ++dropped;
    } else {
      it->second = std::move(filtered);
      ++it;
    }
  }
  return dropped;
}

std::vector<LinkedMention> load_linked_mentions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open '" + path + "' for reading");
  return load_linked_mentions(in, path);
}

std::vector<LinkedMention> load_linked_mentions(std::istream& in,
                                                const std::string& source_name) {
  std::vector<LinkedMention> mentions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw ParseError(source_name + ": malformed JSON record", line_no);
    LinkedMention m;
    try {
      m.sentence_index = j.at("sentence_index").get<int>();
      m.start = j.at("start").get<int>();
      m.end = j.at("end").get<int>();
      m.qid = j.at("qid").get<std::string>();
    } catch (const json::exception&) {
      throw ParseError(source_name + ": mention needs sentence_index, start, end, qid",
                       line_no);
    }
    mentions.push_back(std::move(m));
  }
  return mentions;
}

}  // namespace fewner

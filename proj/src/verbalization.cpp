#include "fewner/verbalization.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "fewner/errors.hpp"
#include "fewner/rng.hpp"

namespace fewner {

SchemeKind parse_scheme_kind(const std::string& name) {
  if (name == "cryptic") return SchemeKind::kCryptic;
  if (name == "short") return SchemeKind::kShort;
  if (name == "long") return SchemeKind::kLong;
  if (name == "identity") return SchemeKind::kIdentity;
  throw ValidationError("unknown verbalization scheme '" + name +
                        "' (expected cryptic, short, long or identity)");
}

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kCryptic: return "cryptic";
    case SchemeKind::kShort: return "short";
    case SchemeKind::kLong: return "long";
    case SchemeKind::kIdentity: return "identity";
  }
  return "?";
}

VerbalizationScheme make_cryptic_scheme(const TypeInventory& inventory,
                                        std::uint64_t seed) {
  if (inventory.size() > 26 * 26)
    throw ValidationError("inventory too large for unique two-letter codes");
  VerbalizationScheme scheme;
  scheme.kind = SchemeKind::kCryptic;
  scheme.seed = seed;
  Rng rng(seed);
  std::set<std::string> used;
  for (int i = 0; i < inventory.size(); ++i) {
    std::string code;
    do {
      code = {static_cast<char>('A' + rng.next_below(26)),
              static_cast<char>('A' + rng.next_below(26))};
    } while (!used.insert(code).second);
    scheme.table[inventory.id_at(i)] = code;
  }
  return scheme;
}

VerbalizationScheme make_identity_scheme(const TypeInventory& inventory) {
  VerbalizationScheme scheme;
  scheme.kind = SchemeKind::kIdentity;
  for (int i = 0; i < inventory.size(); ++i)
    scheme.table[inventory.id_at(i)] = inventory.verbalization_at(i);
  return scheme;
}

VerbalizationScheme load_scheme(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open '" + path + "' for reading");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ValidationError("scheme file '" + path + "' is not a JSON object");
  VerbalizationScheme scheme;
  scheme.kind = parse_scheme_kind(j.value("kind", "identity"));
  scheme.seed = j.value("seed", 0ull);
  if (!j.contains("table") || !j["table"].is_object())
    throw ValidationError("scheme file '" + path + "' needs a 'table' object");
  for (const auto& [id, verb] : j["table"].items()) {
    if (!verb.is_string())
      throw ValidationError("scheme file '" + path + "': table values must be strings");
    scheme.table[id] = verb.get<std::string>();
  }
  return scheme;
}

void save_scheme(const VerbalizationScheme& scheme, const std::string& path) {
  nlohmann::json j = {{"kind", to_string(scheme.kind)},
                      {"seed", scheme.seed},
                      {"table", scheme.table}};
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw RuntimeError("write to '" + path + "' failed");
}

Corpus apply_verbalization(const Corpus& corpus, const VerbalizationScheme& scheme) {
  for (const std::string& id : corpus.inventory.non_o_ids())
    if (!scheme.table.count(id))
      throw ValidationError("verbalization table is missing type '" + id + "'");
  Corpus out = corpus;
  for (const std::string& id : corpus.inventory.non_o_ids())
    out.inventory.set_verbalization(id, scheme.table.at(id));
  const auto o_entry = scheme.table.find(TypeInventory::kOId);
  if (o_entry != scheme.table.end())
    out.inventory.set_verbalization(TypeInventory::kOId, o_entry->second);
  return out;
}

}  // namespace fewner

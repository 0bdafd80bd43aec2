#ifndef FEWNER_VERBALIZATION_HPP
#define FEWNER_VERBALIZATION_HPP

#include <cstdint>
#include <map>
#include <string>

#include "fewner/corpus.hpp"

namespace fewner {

// How entity types are presented to the label encoder: cryptic two-letter
// codes, short names, long descriptive phrases, or the corpus's own
// verbalizations untouched.
enum class SchemeKind { kCryptic, kShort, kLong, kIdentity };

SchemeKind parse_scheme_kind(const std::string& name);
std::string to_string(SchemeKind kind);

struct VerbalizationScheme {
  SchemeKind kind = SchemeKind::kIdentity;
  std::map<std::string, std::string> table;  // type id -> replacement
  std::uint64_t seed = 0;                    // generation seed for CRYPTIC
};

// Unique random two-letter uppercase codes for every type, O included.
VerbalizationScheme make_cryptic_scheme(const TypeInventory& inventory,
                                        std::uint64_t seed);

VerbalizationScheme make_identity_scheme(const TypeInventory& inventory);

// {"kind": ..., "seed": ..., "table": {id: verbalization}} round-trip.
VerbalizationScheme load_scheme(const std::string& path);
void save_scheme(const VerbalizationScheme& scheme, const std::string& path);

// Swaps inventory verbalizations per the scheme table; ids, spans and tokens
// stay untouched. Every non-O id must be covered; an O entry is applied when
// present.
Corpus apply_verbalization(const Corpus& corpus, const VerbalizationScheme& scheme);

}  // namespace fewner

#endif  // FEWNER_VERBALIZATION_HPP
